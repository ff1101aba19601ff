"""Ground-truth side: spectral weights, support sets, and match reports.

Given the reference eigendecomposition and the observation (c, x0), the
weight of mode i is (c^T u_i)(w_i^T x0).  Eigenvalues repeated up to a
clustering tolerance aggregate their weights, and the support set keeps the
distinct eigenvalues whose aggregate weight is nonzero relative to the
largest one — exactly the set any estimator can hope to recover from the
output sequence.  ``match_spectra`` pairs a truth set against an estimate
for the acceptance reports.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from ._numeric import to_float_array
from .errors import BadParametersError, DimensionMismatchError
from .graphs import eig_reference

EIG_CLUSTER_TOL = 1e-9
WEIGHT_REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Signed point-mass measure: weight omega_i at eigenvalue lambda_i.

    ``grouped_*`` aggregate the weights of eigenvalues that coincide up to
    the clustering tolerance; the estimator can only ever see the grouped
    atoms.
    """

    eigenvalues: np.ndarray
    weights: np.ndarray
    grouped_eigenvalues: np.ndarray
    grouped_weights: np.ndarray

    def total_weight(self):
        """Sum of all weights; equals c^T x0 (the zeroth moment)."""
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class MatchReport:
    """Greedy pairing of true vs estimated eigenvalues.

    ``pairs`` holds (true, estimated, absolute error) triples; the matching
    is a bijection between the matched subsets.  ``max_error`` is None when
    nothing matched.
    """

    pairs: tuple
    unmatched_true: tuple
    unmatched_estimated: tuple
    max_error: float | None

    @property
    def complete(self):
        return not self.unmatched_true and not self.unmatched_estimated

    def to_dict(self):
        return {
            "pairs": [
                {"true": t, "estimated": e, "error": err} for t, e, err in self.pairs
            ],
            "unmatched_true": list(self.unmatched_true),
            "unmatched_estimated": list(self.unmatched_estimated),
            "max_error": self.max_error,
            "matched": len(self.pairs),
            "mean_error": (
                float(np.mean([err for _, _, err in self.pairs])) if self.pairs else None
            ),
        }


def spectral_weights(dec, obs, cluster_tol=EIG_CLUSTER_TOL):
    """Per-mode weights (c^T u_i)(w_i^T x0), grouped over repeated eigenvalues."""
    lam = to_float_array(dec.eigenvalues)
    n = lam.shape[0]
    c = np.asarray(obs.c, dtype=np.float64).ravel()
    x0 = np.asarray(obs.x0, dtype=np.float64).ravel()
    if c.shape != (n,) or x0.shape != (n,):
        raise DimensionMismatchError(
            f"observation vectors of lengths {c.shape[0]}, {x0.shape[0]} "
            f"against {n} modes"
        )
    u = np.array([[float(v) for v in row] for row in dec.right_vectors])
    w = np.array([[float(v) for v in row] for row in dec.left_vectors])
    weights = (c @ u) * (w @ x0)
    grouped_vals = []
    grouped_wts = []
    start = 0
    for i in range(1, n + 1):
        if i == n or lam[i] - lam[start] > cluster_tol:
            grouped_vals.append(float(np.mean(lam[start:i])))
            grouped_wts.append(float(np.sum(weights[start:i])))
            start = i
    return SpectralMeasure(
        eigenvalues=lam,
        weights=weights,
        grouped_eigenvalues=np.asarray(grouped_vals),
        grouped_weights=np.asarray(grouped_wts),
    )


def support_set(measure, weight_tol=WEIGHT_REL_TOL):
    """Distinct eigenvalues whose aggregate weight is nonzero.

    The threshold is relative to the largest aggregate weight, so the
    support is invariant to scaling c or x0.
    """
    if not weight_tol > 0:
        raise BadParametersError(f"weight_tol must be positive, got {weight_tol}")
    mags = np.abs(measure.grouped_weights)
    top = mags.max() if mags.size else 0.0
    if top == 0.0:
        return np.zeros(0)
    keep = mags > weight_tol * top
    return measure.grouped_eigenvalues[keep].copy()


def match_spectra(truth, estimate, match_tol):
    """Greedily pair sorted truth values against sorted estimated values.

    ``estimate`` may be a SpectralEstimate (its eigenvalues are used) or any
    sequence of values.  Values within match_tol pair up in sorted order;
    the rest are reported unmatched.
    """
    if not match_tol > 0:
        raise BadParametersError(f"match_tol must be positive, got {match_tol}")
    estimated = getattr(estimate, "eigenvalues", estimate)
    t_sorted = sorted(float(v) for v in np.asarray(truth).ravel())
    e_sorted = sorted(float(v) for v in np.asarray(estimated).ravel())
    pairs = []
    un_true = []
    un_est = []
    i = j = 0
    while i < len(t_sorted) and j < len(e_sorted):
        err = abs(t_sorted[i] - e_sorted[j])
        if err <= match_tol:
            pairs.append((t_sorted[i], e_sorted[j], err))
            i += 1
            j += 1
        elif t_sorted[i] < e_sorted[j]:
            un_true.append(t_sorted[i])
            i += 1
        else:
            un_est.append(e_sorted[j])
            j += 1
    un_true.extend(t_sorted[i:])
    un_est.extend(e_sorted[j:])
    return MatchReport(
        pairs=tuple(pairs),
        unmatched_true=tuple(un_true),
        unmatched_estimated=tuple(un_est),
        max_error=max((err for _, _, err in pairs), default=None),
    )


def pbh_observable_eigenvalues(m, c, cluster_tol=EIG_CLUSTER_TOL, rank_tol=1e-9):
    """Distinct eigenvalues whose eigenmode is observable from c.

    Classical observability rank test: lambda is observable iff
    [M - lambda I; c^T] has full column rank.  Provided as the independent
    cross-check of the weight-based support; with a random initial state the
    two characterizations coincide almost surely.
    """
    dec = eig_reference(m)
    lam = to_float_array(dec.eigenvalues)
    c = np.asarray(c, dtype=np.float64).ravel()
    n = lam.shape[0]
    if c.shape != (n,):
        raise DimensionMismatchError(f"c has length {c.shape[0]}, network has n={n}")
    distinct = []
    start = 0
    for i in range(1, n + 1):
        if i == n or lam[i] - lam[start] > cluster_tol:
            distinct.append(float(np.mean(lam[start:i])))
            start = i
    observable = []
    for lam_i in distinct:
        stacked = np.vstack([m.entries - lam_i * np.eye(n), c[None, :]])
        sv = np.linalg.svd(stacked, compute_uv=False)
        rank = int(np.sum(sv > rank_tol * sv[0])) if sv[0] > 0 else 0
        if rank == n:
            observable.append(lam_i)
    return np.asarray(observable)


def measure_moments(measure, count):
    """Power sums sum_i omega_i lambda_i^k for k = 0..count-1."""
    if count < 1:
        raise BadParametersError("need at least one moment")
    powers = np.vander(measure.eigenvalues, count, increasing=True)
    return measure.weights @ powers


def write_match_report(report, path):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_match_csv(report, path):
    """CSV of (true, estimated, error) triples; unmatched values keep an
    empty column on the other side."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true", "estimated", "error"])
        for t, e, err in report.pairs:
            writer.writerow([repr(t), repr(e), repr(err)])
        for t in report.unmatched_true:
            writer.writerow([repr(t), "", ""])
        for e in report.unmatched_estimated:
            writer.writerow(["", repr(e), ""])
