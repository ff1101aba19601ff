"""Command-line front end.

Subcommands mirror the pipeline: ``generate`` a topology, ``simulate`` its
output sequence, ``estimate`` the spectrum from measurements alone,
``compare`` the estimate against the oracle truth, ``run`` the whole
pipeline from a JSON config, and ``batch`` a config over many seeds.

Exit codes: 0 success, 2 validation/config error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import dynamics as dyn
from . import graphs, oracle, recovery
from .errors import (
    ConfigError,
    EmptySupportError,
    LapspecError,
    NumericalError,
    ValidationError,
)
from .experiments import (
    ExperimentConfig,
    build_topology,
    emit_plot_data,
    estimate_series,
    run_batch,
    run_experiment,
    simulate_series,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _parse_agents(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_seeds(text):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_agent(path):
    with open(path) as fh:
        data = json.load(fh)
    return {"a": data["a"], "beta": data["beta"], "gamma": data["gamma"]}


def _apply_override(data, dotted, raw):
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            node[key] = {}
        node = node[key]
    node[keys[-1]] = value


def _add_topology_args(p):
    p.add_argument("--graph", help="read the topology from a graph file")
    p.add_argument("--generator", choices=["ring", "preferential-attachment"])
    p.add_argument("--n", type=int, help="node count for a generator")
    p.add_argument("--m", type=int, default=1, help="edges per new node (preferential attachment)")
    p.add_argument("--seed", type=int, default=0, help="topology generator seed")


def _topology_from_args(args):
    if args.graph:
        return {"file": args.graph}
    if not args.generator or args.n is None:
        raise ConfigError("need either --graph or --generator with --n")
    topo = {"generator": args.generator, "n": args.n}
    if args.generator == "preferential-attachment":
        topo["m"] = args.m
        topo["seed"] = args.seed
    return topo


def cmd_generate(args):
    graph = build_topology(_topology_from_args(args))
    graphs.write_graph_file(graph, args.output)
    print(f"wrote {graph.n}-node graph with {len(graph.edges)} edges to {args.output}")
    return EXIT_OK


def cmd_simulate(args):
    cfg = ExperimentConfig(
        topology=_topology_from_args(args),
        dynamics=args.dynamics,
        laplacian_kind=args.kind,
        observation={
            "agents": _parse_agents(args.agents),
            "weights": [float(w) for w in args.weights.split(",")] if args.weights else None,
            "seed": args.obs_seed,
        },
        agent=_load_agent(args.agent_json) if args.agent_json else None,
        tau=args.tau,
        samples=args.samples,
        precision=args.precision,
    )
    cfg.validate()
    graph = build_topology(cfg.topology)
    matrix = graphs.laplacian(graph, graphs.LaplacianKind(cfg.laplacian_kind))
    obs = dyn.random_observation(
        graph.n, cfg.observation["seed"], cfg.observation["agents"],
        weights=cfg.observation.get("weights"),
    )
    samples = cfg.samples if cfg.samples is not None else 2 * graph.n
    series = simulate_series(cfg, matrix, obs, samples)
    dyn.write_measurements(
        series,
        args.output,
        sidecar_extra={
            "seed": cfg.observation["seed"],
            "provenance": {
                "topology": cfg.topology,
                "dynamics": cfg.dynamics,
                "laplacian_kind": cfg.laplacian_kind,
                "observation": {
                    **cfg.observation,
                    "c": list(obs.c),
                    "x0": list(obs.x0),
                },
                "agent": cfg.agent,
                "samples": samples,
            },
        },
        precision=cfg.precision,
    )
    print(f"wrote {samples} samples to {args.output}")
    return EXIT_OK


def cmd_estimate(args):
    series, sidecar = dyn.read_measurements(args.measurements)
    agent_spec = None
    if args.agent_json:
        agent_spec = _load_agent(args.agent_json)
    elif not args.integrator:
        agent_spec = (sidecar.get("provenance") or {}).get("agent")
    precision = args.precision
    if precision is None and sidecar.get("precision"):
        precision = int(sidecar["precision"])
    kwargs = {
        "imag_tol": args.imag_tol,
        "cluster_tol": args.cluster_tol,
        "full": args.force_full,
        "precision": precision,
    }
    try:
        if agent_spec is not None:
            model = dyn.AgentModel(
                a=np.asarray(agent_spec["a"], dtype=np.float64),
                beta=np.asarray(agent_spec["beta"], dtype=np.float64),
                gamma=np.asarray(agent_spec["gamma"], dtype=np.float64),
            )
            estimate = recovery.recover_network_spectrum(series, model, args.rank_tol, **kwargs)
        elif series.domain == dyn.DOMAIN_DT:
            estimate = recovery.recover_dt_spectrum(series, args.rank_tol, **kwargs)
        else:
            estimate = recovery.recover_ct_spectrum(series, args.rank_tol, **kwargs)
    except EmptySupportError as exc:
        estimate = recovery.SpectralEstimate.empty(exc.samples_consumed)
    if args.output:
        recovery.write_estimate(estimate, args.output)
    print(f"rank {estimate.rank}, consumed {estimate.samples_consumed} samples")
    print("eigenvalues:", " ".join(f"{v:.12g}" for v in estimate.eigenvalues))
    return EXIT_OK


def cmd_compare(args):
    series, sidecar = dyn.read_measurements(args.measurements)
    estimate = recovery.read_estimate(args.estimate)
    prov = sidecar.get("provenance")
    if not prov:
        raise ConfigError(
            f"{args.measurements} has no provenance sidecar; cannot rebuild the truth"
        )
    graph = build_topology(prov["topology"])
    matrix = graphs.laplacian(graph, graphs.LaplacianKind(prov["laplacian_kind"]))
    obs = dyn.ObservationSpec(
        c=np.asarray(prov["observation"]["c"], dtype=np.float64),
        x0=np.asarray(prov["observation"]["x0"], dtype=np.float64),
    )
    dec = graphs.eig_reference(matrix)
    measure = oracle.spectral_weights(dec, obs)
    support = oracle.support_set(measure)
    report = oracle.match_spectra(support, estimate, args.match_tol)
    if args.output:
        oracle.write_match_report(report, args.output)
    if args.csv:
        oracle.write_match_csv(report, args.csv)
    print(
        f"matched {len(report.pairs)}/{support.size} support eigenvalues; "
        f"max error {report.max_error if report.max_error is not None else 'n/a'}"
    )
    if report.unmatched_true:
        print("unmatched truth:", " ".join(f"{v:.9g}" for v in report.unmatched_true))
    if report.unmatched_estimated:
        print("spurious estimates:", " ".join(f"{v:.9g}" for v in report.unmatched_estimated))
    return EXIT_OK


def _config_from_run_args(args):
    with open(args.config) as fh:
        data = json.load(fh)
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError(f"--set expects key=value, got {override!r}")
        _apply_override(data, *override.split("=", 1))
    if args.output is not None:
        data["output"] = args.output
    if args.samples is not None:
        data["samples"] = args.samples
    if args.tau is not None:
        data["tau"] = args.tau
    if args.precision is not None:
        data["precision"] = args.precision
    if args.obs_seed is not None:
        data.setdefault("observation", {})
        data["observation"]["seed"] = args.obs_seed
    if args.rank_tol is not None:
        data.setdefault("tolerances", {})["rank_rel_tol"] = args.rank_tol
    if args.match_tol is not None:
        data.setdefault("tolerances", {})["match_tol"] = args.match_tol
    if args.force_full:
        data["force_full"] = True
    return ExperimentConfig.from_dict(data)


def cmd_run(args):
    cfg = _config_from_run_args(args)
    if args.print_config:
        print(json.dumps(cfg.validate().to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    record = run_experiment(cfg)
    if cfg.output:
        emit_plot_data(record, cfg.output)
    report = record.report
    print(
        f"n={record.graph.n} support={record.truth_support.size} "
        f"rank={record.estimate.rank} matched={len(report.pairs)} "
        f"max_error={report.max_error if report.max_error is not None else 'n/a'} "
        f"elapsed={record.elapsed_s * 1e3:.1f}ms"
    )
    for t, e, err in report.pairs:
        print(f"  true {t: .12f}   est {e: .12f}   err {err:.3e}")
    for t in report.unmatched_true:
        print(f"  true {t: .12f}   est        --")
    for e in report.unmatched_estimated:
        print(f"  true        --   est {e: .12f}")
    return EXIT_OK


def cmd_batch(args):
    cfg = _config_from_run_args(args)
    seeds = _parse_seeds(args.seeds)
    rows, aggregate = run_batch(cfg, seeds, output=cfg.output)
    print(json.dumps(aggregate, indent=2, sort_keys=True))
    failures = [r for r in rows if r["status"] != "ok"]
    for row in failures[:10]:
        print(f"seed {row['seed']}: {row['error']}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lapspec",
        description="Recover observable Laplacian eigenvalues from scalar output sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a topology to a graph file")
    _add_topology_args(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate a dynamics and write measurements")
    _add_topology_args(p)
    p.add_argument("--dynamics", required=True,
                   choices=["dt-integrator", "dt-network", "ct-integrator", "ct-network"])
    p.add_argument("--kind", default="normalized-random-walk",
                   choices=[k.value for k in graphs.LaplacianKind])
    p.add_argument("--tau", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--agents", default="1", help="comma list of observed 1-based agents")
    p.add_argument("--weights", help="comma list of observation weights")
    p.add_argument("--obs-seed", type=int, default=0)
    p.add_argument("--agent-json", help="JSON file with agent model fields a, beta, gamma")
    p.add_argument("--precision", type=int)
    p.add_argument("-o", "--output", required=True, help="measurement CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="recover the spectrum from measurements")
    p.add_argument("--measurements", required=True)
    p.add_argument("--rank-tol", type=float, default=recovery.DEFAULT_RANK_REL_TOL)
    p.add_argument("--imag-tol", type=float, default=recovery.DEFAULT_IMAG_TOL)
    p.add_argument("--cluster-tol", type=float, default=recovery.DEFAULT_ROOT_CLUSTER_TOL)
    p.add_argument("--force-full", action="store_true",
                   help="disable early stopping; use the largest Hankel the data allows")
    p.add_argument("--integrator", action="store_true",
                   help="ignore any agent model recorded in the sidecar")
    p.add_argument("--agent-json")
    p.add_argument("--precision", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="match an estimate against the oracle truth")
    p.add_argument("--measurements", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--match-tol", type=float, default=1e-6)
    p.add_argument("-o", "--output")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_compare)

    for name, helptext in (("run", "full pipeline from a JSON config"),
                           ("batch", "run a config across many seeds")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field (dotted path, JSON value)")
        p.add_argument("--output")
        p.add_argument("--samples", type=int)
        p.add_argument("--tau", type=float)
        p.add_argument("--precision", type=int)
        p.add_argument("--obs-seed", type=int)
        p.add_argument("--rank-tol", type=float)
        p.add_argument("--match-tol", type=float)
        p.add_argument("--force-full", action="store_true")
        if name == "run":
            p.add_argument("--print-config", action="store_true")
            p.set_defaults(func=cmd_run)
        else:
            p.add_argument("--seeds", required=True,
                           help="comma list or lo:hi range of seeds")
            p.set_defaults(func=cmd_batch)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LapspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
