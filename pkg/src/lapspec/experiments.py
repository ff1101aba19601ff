"""Configured end-to-end runs: generate, simulate, recover, compare.

An ExperimentConfig is a plain JSON-shaped description of one experiment;
``run_experiment`` executes the full pipeline against it and returns a
RunRecord bundling the series, the estimate, the oracle truth, and the match
report.  ``run_batch`` repeats a template over a list of seeds and
aggregates a summary table.  Every seed is pinned in the config snapshot, so
re-running a record's snapshot reproduces byte-identical artifacts.
"""

from __future__ import annotations

import copy
import csv
import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import graphs, oracle, recovery
from .errors import ConfigError, EmptySupportError, LapspecError

DYNAMICS_KINDS = ("dt-integrator", "dt-network", "ct-integrator", "ct-network")

DEFAULT_TOLERANCES = {
    "rank_rel_tol": recovery.DEFAULT_RANK_REL_TOL,
    "match_tol": 1e-6,
    "imag_tol": recovery.DEFAULT_IMAG_TOL,
    "root_cluster_tol": recovery.DEFAULT_ROOT_CLUSTER_TOL,
    "eig_cluster_tol": oracle.EIG_CLUSTER_TOL,
    "weight_rel_tol": oracle.WEIGHT_REL_TOL,
}


@dataclass
class ExperimentConfig:
    """One experiment, JSON-shaped.

    topology: {"generator": "ring", "n": ...} |
              {"generator": "preferential-attachment", "n": ..., "m": ..., "seed": ...} |
              {"file": "path"}
    dynamics: one of DYNAMICS_KINDS
    observation: {"agents": int | [int, ...], "weights": [...] | None, "seed": int}
    agent: {"a": [[...]], "beta": [...], "gamma": [...]} for *-network dynamics
    samples: measurement count; defaults to 2 n
    precision: decimal digits for extended-precision runs, or None for doubles
    """

    topology: dict
    dynamics: str
    laplacian_kind: str = "normalized-random-walk"
    observation: dict = field(default_factory=lambda: {"agents": 1, "seed": 0})
    agent: dict | None = None
    tau: float | None = None
    samples: int | None = None
    tolerances: dict = field(default_factory=dict)
    precision: int | None = None
    force_full: bool = False
    output: str | None = None

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {
            "topology": copy.deepcopy(self.topology),
            "dynamics": self.dynamics,
            "laplacian_kind": self.laplacian_kind,
            "observation": copy.deepcopy(self.observation),
            "agent": copy.deepcopy(self.agent),
            "tau": self.tau,
            "samples": self.samples,
            "tolerances": {**DEFAULT_TOLERANCES, **self.tolerances},
            "precision": self.precision,
            "force_full": self.force_full,
            "output": self.output,
        }

    def tol(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def agent_model(self):
        if self.agent is None:
            return None
        return dyn.AgentModel(
            a=np.asarray(self.agent["a"], dtype=np.float64),
            beta=np.asarray(self.agent["beta"], dtype=np.float64),
            gamma=np.asarray(self.agent["gamma"], dtype=np.float64),
        )

    def validate(self):
        if self.dynamics not in DYNAMICS_KINDS:
            raise ConfigError(
                f"dynamics must be one of {DYNAMICS_KINDS}, got {self.dynamics!r}"
            )
        kinds = {k.value for k in graphs.LaplacianKind}
        if self.laplacian_kind not in kinds:
            raise ConfigError(
                f"laplacian_kind must be one of {sorted(kinds)}, got {self.laplacian_kind!r}"
            )
        if self.dynamics.startswith("ct") and (self.tau is None or not self.tau > 0):
            raise ConfigError("continuous-time dynamics need tau > 0")
        if self.dynamics.endswith("network"):
            if self.agent is None:
                raise ConfigError(f"{self.dynamics} needs an agent model")
            model = self.agent_model()
            if abs(model.gamma_beta()) <= dyn.GAMMA_BETA_TOL:
                raise ConfigError(
                    "agent model has gamma^T beta = 0; the moment unmixing "
                    "would be singular"
                )
        if not (isinstance(self.topology, dict) and ("generator" in self.topology) ^ ("file" in self.topology)):
            raise ConfigError("topology needs exactly one of 'generator' or 'file'")
        if "agents" not in self.observation:
            raise ConfigError("observation needs an 'agents' entry")
        unknown_tols = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown_tols:
            raise ConfigError(f"unknown tolerances: {sorted(unknown_tols)}")
        if self.samples is not None and self.samples < 1:
            raise ConfigError("samples must be >= 1")
        return self


@dataclass(eq=False)
class RunRecord:
    """Everything one experiment produced, reproducible from its snapshot."""

    config: dict
    graph: graphs.Graph
    matrix: graphs.SystemMatrix
    observation: dyn.ObservationSpec
    series: dyn.MeasurementSeries
    estimate: recovery.SpectralEstimate
    truth_eigenvalues: np.ndarray
    truth_support: np.ndarray
    report: oracle.MatchReport
    elapsed_s: float


@contextmanager
def _stage(name):
    """Prefix any package error with the failing pipeline stage."""
    try:
        yield
    except LapspecError as exc:
        exc.args = (f"[{name}] {exc}",)
        raise


def build_topology(topology):
    """Materialize the configured topology into a Graph."""
    if "file" in topology:
        return graphs.read_graph_file(topology["file"])
    gen = topology["generator"]
    if gen == "ring":
        return graphs.generate_ring(int(topology["n"]))
    if gen == "preferential-attachment":
        return graphs.generate_preferential_attachment(
            int(topology["n"]),
            m=int(topology.get("m", 1)),
            seed=int(topology.get("seed", 0)),
        )
    raise ConfigError(f"unknown topology generator {gen!r}")


def simulate_series(cfg, matrix, obs, samples):
    """Run the configured dynamics for one prepared system."""
    model = cfg.agent_model()
    if cfg.dynamics == "dt-integrator":
        return dyn.simulate_dt_integrator(matrix, obs, samples, precision=cfg.precision)
    if cfg.dynamics == "dt-network":
        return dyn.simulate_dt_network(
            matrix, model, obs.c, obs.x0, samples, precision=cfg.precision
        )
    if cfg.dynamics == "ct-integrator":
        return dyn.simulate_ct_integrator(
            matrix, obs, cfg.tau, samples, precision=cfg.precision
        )
    return dyn.simulate_ct_network(
        matrix, model, obs.c, obs.x0, cfg.tau, samples, precision=cfg.precision
    )


def estimate_series(cfg, series):
    """Dispatch the recovery matching the configured dynamics."""
    kwargs = {
        "rel_tol": cfg.tol("rank_rel_tol"),
        "imag_tol": cfg.tol("imag_tol"),
        "cluster_tol": cfg.tol("root_cluster_tol"),
        "full": cfg.force_full,
        "precision": cfg.precision,
    }
    rel = kwargs.pop("rel_tol")
    if cfg.dynamics.endswith("network"):
        return recovery.recover_network_spectrum(series, cfg.agent_model(), rel, **kwargs)
    if series.domain == dyn.DOMAIN_DT:
        return recovery.recover_dt_spectrum(series, rel, **kwargs)
    return recovery.recover_ct_spectrum(series, rel, **kwargs)


def run_experiment(cfg):
    """Execute generate -> simulate -> recover -> compare for one config.

    An identically zero observation window is not an error at this level:
    the record carries an empty estimate and an all-unmatched report.
    Artifacts are written to cfg.output when set.
    """
    cfg.validate()
    started = time.perf_counter()
    with _stage("generate"):
        graph = build_topology(cfg.topology)
        matrix = graphs.laplacian(graph, graphs.LaplacianKind(cfg.laplacian_kind))
    with _stage("simulate"):
        obs_cfg = cfg.observation
        obs = dyn.random_observation(
            graph.n,
            int(obs_cfg.get("seed", 0)),
            obs_cfg["agents"],
            weights=obs_cfg.get("weights"),
        )
        samples = cfg.samples if cfg.samples is not None else 2 * graph.n
        series = simulate_series(cfg, matrix, obs, samples)
    with _stage("estimate"):
        try:
            estimate = estimate_series(cfg, series)
        except EmptySupportError as exc:
            estimate = recovery.SpectralEstimate.empty(exc.samples_consumed)
    with _stage("compare"):
        dec = graphs.eig_reference(matrix)
        measure = oracle.spectral_weights(dec, obs, cluster_tol=cfg.tol("eig_cluster_tol"))
        support = oracle.support_set(measure, weight_tol=cfg.tol("weight_rel_tol"))
        report = oracle.match_spectra(support, estimate, cfg.tol("match_tol"))
    record = RunRecord(
        config=cfg.to_dict(),
        graph=graph,
        matrix=matrix,
        observation=obs,
        series=series,
        estimate=estimate,
        truth_eigenvalues=np.asarray(measure.grouped_eigenvalues),
        truth_support=support,
        report=report,
        elapsed_s=time.perf_counter() - started,
    )
    if cfg.output:
        write_run_record(record, cfg.output)
    return record


def write_run_record(record, outdir):
    """Write every artifact of a run under the output directory."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(record.config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    graphs.write_graph_file(record.graph, out / "graph.txt")
    dyn.write_measurements(
        record.series,
        out / "measurements.csv",
        sidecar_extra={
            "seed": record.config["observation"].get("seed"),
            "provenance": {
                "topology": record.config["topology"],
                "dynamics": record.config["dynamics"],
                "laplacian_kind": record.config["laplacian_kind"],
                "observation": {
                    **record.config["observation"],
                    "c": list(record.observation.c),
                    "x0": list(record.observation.x0),
                },
                "agent": record.config["agent"],
                "samples": len(record.series),
            },
        },
        precision=record.config.get("precision"),
    )
    recovery.write_estimate(record.estimate, out / "estimate.json")
    with open(out / "truth.json", "w") as fh:
        json.dump(
            {
                "distinct_eigenvalues": [float(v) for v in record.truth_eigenvalues],
                "support": [float(v) for v in record.truth_support],
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    oracle.write_match_report(record.report, out / "match.json")
    oracle.write_match_csv(record.report, out / "match.csv")
    with open(out / "summary.json", "w") as fh:
        json.dump(
            {
                "elapsed_s": record.elapsed_s,
                "rank": record.estimate.rank,
                "support_size": int(record.truth_support.size),
                "matched": len(record.report.pairs),
                "max_error": record.report.max_error,
                "samples_consumed": record.estimate.samples_consumed,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")


def emit_plot_data(record, outdir):
    """Write plain CSVs for external plotting.

    ``output_trace.csv`` holds the measured sequence (k, y);
    ``eigencompare.csv`` holds (index, true, estimated) rows, with the
    estimated column empty for unmatched truth values.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "output_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "y"])
        for k, v in enumerate(record.series.values):
            writer.writerow([k, repr(float(v))])
    with open(out / "eigencompare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "true", "estimated"])
        rows = [(t, repr(e)) for t, e, _ in record.report.pairs]
        rows += [(t, "") for t in record.report.unmatched_true]
        for idx, (t, e) in enumerate(sorted(rows, key=lambda te: te[0])):
            writer.writerow([idx, repr(t), e])
    return out / "output_trace.csv", out / "eigencompare.csv"


def run_batch(cfg, seeds, output=None):
    """Run the template once per seed; aggregate to a summary table.

    Each seed re-seeds both the topology generator (when it takes a seed)
    and the observation.  Per-trial failures are recorded and the batch
    continues.  Returns (rows, aggregate); writes batch_summary.csv when an
    output directory is given.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("batch needs at least one seed")
    rows = []
    for seed in seeds:
        trial = ExperimentConfig.from_dict(cfg.to_dict())
        trial.output = None
        trial.observation = dict(trial.observation)
        trial.observation["seed"] = int(seed)
        if "generator" in trial.topology and trial.topology["generator"] != "ring":
            trial.topology = dict(trial.topology)
            trial.topology["seed"] = int(seed)
        row = {
            "seed": int(seed),
            "status": "ok",
            "error": "",
            "support_size": None,
            "rank": None,
            "matched": None,
            "unmatched_true": None,
            "unmatched_estimated": None,
            "max_error": None,
            "samples_consumed": None,
            "elapsed_ms": None,
        }
        try:
            rec = run_experiment(trial)
            row.update(
                support_size=int(rec.truth_support.size),
                rank=rec.estimate.rank,
                matched=len(rec.report.pairs),
                unmatched_true=len(rec.report.unmatched_true),
                unmatched_estimated=len(rec.report.unmatched_estimated),
                max_error=rec.report.max_error,
                samples_consumed=rec.estimate.samples_consumed,
                elapsed_ms=rec.elapsed_s * 1e3,
            )
        except LapspecError as exc:
            row["status"] = "error"
            row["error"] = str(exc)
        rows.append(row)
    errors = [r["max_error"] for r in rows if r["max_error"] is not None]
    aggregate = {
        "trials": len(rows),
        "failures": sum(1 for r in rows if r["status"] != "ok"),
        "incomplete_matches": sum(
            1
            for r in rows
            if r["status"] == "ok"
            and ((r["unmatched_true"] or 0) + (r["unmatched_estimated"] or 0)) > 0
        ),
        "max_error": max(errors) if errors else None,
        "mean_error": float(np.mean(errors)) if errors else None,
    }
    if output:
        out = Path(output)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "batch_summary.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
    return rows, aggregate
