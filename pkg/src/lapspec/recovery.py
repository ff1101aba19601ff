"""Eigenvalue recovery from a scalar output sequence.

The estimator never sees the network: it consumes only the measured values,
the time domain, and (for continuous time) the sampling period.  The
pipeline grows a Hankel matrix of measurements until its numerical rank
stops increasing, solves the square Hankel system for the coefficients of
the monic polynomial whose roots are the visible modes, and roots it via the
companion matrix.  For sampled continuous-time systems the roots are decay
factors exp(-lambda tau) and a final logarithm maps them back.  For networks
of identical agents with known internal dynamics, the observed sequence is
first unmixed into the plain moment sequence (binomial lower-triangular
system in discrete time, elementwise division in continuous time).

Floating-point realities the paper's exact-arithmetic setting hides are
handled explicitly: numerical rank reads singular values against a relative
threshold, the square solve is an SVD pseudo-inverse with retry on rank
overestimates, near-duplicate roots are merged, and complex or nonpositive
roots fail loudly instead of being truncated.  Pass ``precision=<digits>``
to run the whole pipeline in mpmath arithmetic when the sampling period
pushes decay factors below what doubles can separate (guidance: keep
tau <= 1/lambda_max, or raise precision).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from mpmath import mpf, workdps

from . import _numeric
from .dynamics import DOMAIN_CT, DOMAIN_DT, nu_factors
from .errors import (
    BadParametersError,
    ComplexRootsError,
    DimensionMismatchError,
    EmptySupportError,
    InsufficientDataError,
    NonpositiveRootError,
    NuVanishesError,
    RankDeficientSystemError,
    UnmixingSingularError,
)

DEFAULT_RANK_REL_TOL = 1e-8
DEFAULT_IMAG_TOL = 1e-6
DEFAULT_ROOT_CLUSTER_TOL = 1e-8
POSITIVE_ROOT_TOL = 1e-12
NU_ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """Recovered spectral content of one measurement sequence.

    ``roots`` are the recovered polynomial roots (eigenvalues directly in
    discrete time, decay factors in continuous time); ``eigenvalues`` are
    always in Laplacian eigenvalue space.  ``singular_values`` are the
    spectrum of the square solve system, kept as conditioning diagnostics;
    ``residual`` is max |p(root)| over the reported roots.
    """

    rank: int
    alpha: np.ndarray
    roots: np.ndarray
    eigenvalues: np.ndarray
    residual: float
    singular_values: np.ndarray
    samples_consumed: int

    @classmethod
    def empty(cls, samples_consumed=0):
        z = np.zeros(0)
        return cls(
            rank=0,
            alpha=z,
            roots=z,
            eigenvalues=z,
            residual=0.0,
            singular_values=z,
            samples_consumed=int(samples_consumed),
        )

    def to_dict(self):
        return {
            "rank": self.rank,
            "alpha": [float(a) for a in self.alpha],
            "roots": [float(r) for r in self.roots],
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "residual": float(self.residual),
            "singular_values": [float(s) for s in self.singular_values],
            "samples_consumed": self.samples_consumed,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            rank=int(data["rank"]),
            alpha=np.asarray(data["alpha"], dtype=np.float64),
            roots=np.asarray(data["roots"], dtype=np.float64),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=np.float64),
            residual=float(data["residual"]),
            singular_values=np.asarray(data["singular_values"], dtype=np.float64),
            samples_consumed=int(data["samples_consumed"]),
        )


def build_hankel(values, size):
    """size x size Hankel with entry (i, j) = values[i + j].

    Needs 2*size - 1 source values; symmetric by construction.
    """
    if size < 1:
        raise BadParametersError(f"Hankel size must be >= 1, got {size}")
    vals = values if isinstance(values, np.ndarray) else np.asarray(values)
    if vals.dtype != object:
        vals = vals.astype(np.float64)
    return _numeric.hankel(vals, size)


def numerical_rank(h, rel_tol=DEFAULT_RANK_REL_TOL, precision=None):
    """(rank, singular values) of a Hankel matrix.

    The rank is the number of singular values above rel_tol * sigma_1
    (0 when sigma_1 = 0); singular values are returned descending, as
    float64 diagnostics.
    """
    if not 0 < rel_tol < 1:
        raise BadParametersError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    h = np.asarray(h)
    size = h.shape[0]
    # The defining sequence of the Hankel: first row then last column.
    values = list(h[0, :]) + list(h[1:, -1])
    sv = _numeric.hankel_singular_values(values, size, precision, rel_tol=rel_tol)
    rank = _numeric.count_above(sv, rel_tol)
    return rank, _numeric.to_float_array(sv)


def prony_coefficients(values, rank, rel_tol=DEFAULT_RANK_REL_TOL, precision=None,
                       _singular_values=None):
    """Coefficients of the monic polynomial annihilating the sequence.

    Solves the rank x rank Hankel system
    H alpha = -(y[rank], ..., y[2 rank - 1]) by SVD pseudo-inverse with the
    same relative threshold as the rank test.  Returns (alpha, singular
    values of the system).  Raises RankDeficientSystemError when the
    system's effective rank falls below its size, which signals an
    overestimated rank; the recovery loop retries with rank - 1.

    ``_singular_values`` lets the recovery loop hand over the spectrum it
    already computed for this window size instead of recomputing it.
    """
    if rank < 1:
        raise BadParametersError(f"rank must be >= 1, got {rank}")
    if len(values) < 2 * rank:
        raise InsufficientDataError(
            f"solving at rank {rank} needs {2 * rank} values, got {len(values)}"
        )
    vals = _numeric.lift(values, precision)
    sv = _singular_values
    if sv is None:
        sv = _numeric.hankel_singular_values(vals, rank, precision, rel_tol=rel_tol)
    effective = _numeric.count_above(sv, rel_tol)
    sv_float = _numeric.to_float_array(sv)
    if effective < rank:
        raise RankDeficientSystemError(rank, effective, sv_float)
    alpha = _numeric.prony_solve(vals, rank, rel_tol, precision)
    return alpha, sv_float


def polynomial_roots(alpha, imag_tol=DEFAULT_IMAG_TOL, precision=None):
    """Real roots of x^r + alpha[r-1] x^(r-1) + ... + alpha[0], ascending.

    Roots come from the companion matrix; imaginary parts within
    imag_tol * max(1, |Re|) are projected away, anything larger raises
    ComplexRootsError with the offending roots (conditioning failure is
    surfaced, never hidden).
    """
    if len(alpha) < 1:
        raise BadParametersError("polynomial degree must be >= 1")
    pairs = _numeric.monic_roots(alpha, precision, imag_tol)
    offenders = [
        complex(float(re), float(im))
        for re, im in pairs
        if abs(im) > imag_tol * max(1.0, abs(float(re)))
    ]
    if offenders:
        raise ComplexRootsError(offenders, imag_tol)
    roots = sorted((re for re, _ in pairs), key=float)
    if precision is None:
        return np.array([float(r) for r in roots])
    return roots


def _cluster_roots(roots, tol, precision):
    """Merge roots closer than tol (chain clustering on the sorted list)."""
    if len(roots) == 0:
        return list(roots)

    def mean(group):
        if precision is None:
            return sum(group) / len(group)
        with workdps(precision):
            return sum(group) / len(group)

    merged = []
    group = [roots[0]]
    for r in roots[1:]:
        if float(r) - float(group[-1]) <= tol:
            group.append(r)
        else:
            merged.append(mean(group))
            group = [r]
    merged.append(mean(group))
    return merged


def _rank_growth(values, rel_tol, precision, full):
    """Grow k x k Hankels over the data.

    Returns (rank, samples_consumed, singular values per probed size).
    Stops one step after the numerical rank ceases to grow, or when the
    data is exhausted; ``full=True`` disables early stopping and reads the
    rank from the largest Hankel the data supports.
    """
    kmax = (len(values) + 1) // 2
    consumed = 0
    prev = None
    rank = 0
    sv_by_size = {}
    for k in range(1, kmax + 1):
        sv = _numeric.hankel_singular_values(values, k, precision, rel_tol=rel_tol)
        sv_by_size[k] = sv
        consumed = max(consumed, 2 * k - 1)
        rank = _numeric.count_above(sv, rel_tol)
        if not full and prev is not None and rank <= prev:
            return rank, consumed, sv_by_size
        prev = rank
    return rank, consumed, sv_by_size


def _recover_from_values(values, rel_tol, imag_tol, cluster_tol, full, precision):
    """Shared engine: rank growth, coefficient solve with retry, rooting.

    Returns (estimate fields as dict, working-precision roots).
    """
    vals = _numeric.lift(values, precision)
    rank, consumed, sv_by_size = _rank_growth(vals, rel_tol, precision, full)
    if rank == 0:
        raise EmptySupportError(consumed)
    r = rank
    alpha = sigma = None
    while True:
        if 2 * r > len(vals):
            raise InsufficientDataError(
                f"rank {r} needs {2 * r} samples, only {len(vals)} available"
            )
        try:
            alpha, sigma = prony_coefficients(
                vals, r, rel_tol, precision, _singular_values=sv_by_size.get(r)
            )
            break
        except RankDeficientSystemError:
            if r <= 1:
                raise
            r -= 1
    roots = _cluster_roots(polynomial_roots(alpha, imag_tol, precision), cluster_tol, precision)
    residual = _numeric.poly_residual(alpha, roots, precision)
    consumed = max(consumed, 2 * r)
    fields = {
        "rank": r,
        "alpha": _numeric.to_float_array(alpha),
        "roots": _numeric.to_float_array(roots),
        "residual": residual,
        "singular_values": sigma,
        "samples_consumed": consumed,
    }
    return fields, roots


def recover_dt_spectrum(
    series,
    rel_tol=DEFAULT_RANK_REL_TOL,
    *,
    imag_tol=DEFAULT_IMAG_TOL,
    cluster_tol=DEFAULT_ROOT_CLUSTER_TOL,
    full=False,
    precision=None,
):
    """Recover the visible eigenvalues from a discrete-time sequence.

    Raises EmptySupportError for an identically zero window (nothing is
    visible) and propagates ComplexRootsError from the rooting stage.
    """
    if series.domain != DOMAIN_DT:
        raise BadParametersError("recover_dt_spectrum expects a discrete-time series")
    fields, _ = _recover_from_values(
        series.values, rel_tol, imag_tol, cluster_tol, full, precision
    )
    return SpectralEstimate(eigenvalues=fields["roots"], **fields)


def ct_log_transform(roots, tau, precision=None):
    """Map decay factors z = exp(-lambda tau) back to eigenvalues.

    Every z must be strictly positive; a root at or below POSITIVE_ROOT_TOL
    raises NonpositiveRootError (conditioning failure or aliasing).
    """
    if not tau > 0:
        raise BadParametersError(f"tau must be positive, got {tau}")
    out = []
    for z in roots:
        if float(z) <= POSITIVE_ROOT_TOL:
            raise NonpositiveRootError(float(z), POSITIVE_ROOT_TOL)
        if precision is None:
            out.append(float(np.log(float(z)) / -tau))
        else:
            with workdps(precision):
                out.append(_numeric.log_value(z, precision) / mpf(-float(tau)))
    if precision is None:
        return np.asarray(out, dtype=np.float64)
    return out


def recover_ct_spectrum(
    series,
    rel_tol=DEFAULT_RANK_REL_TOL,
    *,
    imag_tol=DEFAULT_IMAG_TOL,
    cluster_tol=DEFAULT_ROOT_CLUSTER_TOL,
    full=False,
    precision=None,
):
    """Recover eigenvalues from a sampled continuous-time sequence.

    Runs the discrete pipeline on the samples (the visible atoms are the
    decay factors exp(-lambda tau)) and maps the roots back through the
    logarithm.
    """
    if series.domain != DOMAIN_CT:
        raise BadParametersError("recover_ct_spectrum expects a continuous-time series")
    fields, working_roots = _recover_from_values(
        series.values, rel_tol, imag_tol, cluster_tol, full, precision
    )
    lams = ct_log_transform(working_roots, series.tau, precision)
    eig = np.sort(_numeric.to_float_array(lams))
    return SpectralEstimate(eigenvalues=eig, **fields)


def binomial_lower_triangular(nu, size):
    """size x size lower-triangular matrix with entry (k, s) = C(k, s) nu[k-s].

    Binomial coefficients use the additive Pascal recurrence in floating
    point (exact through k = 55, far beyond desk scale).
    """
    if size < 1:
        raise BadParametersError(f"size must be >= 1, got {size}")
    if len(nu) < size:
        raise DimensionMismatchError(f"need {size} nu values, got {len(nu)}")
    nu_arr = np.asarray(nu)
    out_dtype = object if nu_arr.dtype == object else np.float64
    out = np.zeros((size, size), dtype=out_dtype)
    row = [1.0]
    for k in range(size):
        for s in range(k + 1):
            out[k, s] = row[s] * nu_arr[k - s]
        row = [1.0] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1.0]
    return out


def unmix_moments(values, nu, precision=None):
    """Invert the binomial mixing: recover moments m from network outputs y.

    Forward substitution of the lower-triangular system
    y[k] = sum_s C(k, s) nu[k-s] m[s]; requires |nu[0]| above NU_ZERO_TOL
    (the agent directions must not be orthogonal).
    """
    if len(values) != len(nu):
        raise DimensionMismatchError(
            f"series has {len(values)} samples but nu has {len(nu)}"
        )
    if abs(float(nu[0])) <= NU_ZERO_TOL:
        raise UnmixingSingularError(
            f"nu[0] = gamma^T beta = {float(nu[0]):.3e} is numerically zero"
        )
    y = _numeric.lift(values, precision)
    nu_w = _numeric.lift(nu, precision)

    def substitute():
        moments = []
        row_prev = None
        for k in range(len(y)):
            if k == 0:
                row = [1.0]
            else:
                row = [1.0] + [row_prev[i] + row_prev[i + 1] for i in range(len(row_prev) - 1)] + [1.0]
            acc = y[k]
            for s in range(k):
                acc = acc - row[s] * nu_w[k - s] * moments[s]
            moments.append(acc / nu_w[0])
            row_prev = row
        return moments

    if precision is None:
        return np.asarray(substitute(), dtype=np.float64)
    with workdps(precision):
        return np.array(substitute(), dtype=object)


def nu_sequence_dt(agent, samples, precision=None):
    """nu_j = gamma^T A^j beta for j = 0..samples-1, by iterated products."""
    if samples < 1:
        raise BadParametersError("need at least one value")
    if precision is None:
        v = agent.beta.copy()
        out = np.empty(samples)
        for j in range(samples):
            out[j] = agent.gamma @ v
            if j + 1 < samples:
                v = agent.a @ v
        return out
    with workdps(precision):
        d = agent.d
        rows = [[mpf(x) for x in r] for r in agent.a]
        g = [mpf(x) for x in agent.gamma]
        v = [mpf(x) for x in agent.beta]
        out = np.empty(samples, dtype=object)
        for j in range(samples):
            out[j] = sum(g[i] * v[i] for i in range(d))
            if j + 1 < samples:
                v = [sum(rows[i][jj] * v[jj] for jj in range(d)) for i in range(d)]
        return out


def nu_sequence_ct(agent, tau, samples, precision=None):
    """nu_k = gamma^T exp(A k tau) beta for k = 0..samples-1."""
    if not tau > 0:
        raise BadParametersError(f"tau must be positive, got {tau}")
    return nu_factors(agent, tau, samples, precision=precision)


def recover_network_spectrum(
    series,
    agent,
    rel_tol=DEFAULT_RANK_REL_TOL,
    *,
    imag_tol=DEFAULT_IMAG_TOL,
    cluster_tol=DEFAULT_ROOT_CLUSTER_TOL,
    full=False,
    precision=None,
):
    """Recover eigenvalues from an identical-agent network's output.

    The per-agent dynamics must be known.  In discrete time the moment
    sequence is unmixed through the binomial lower-triangular system; in
    continuous time the samples factor exactly as y_k = nu_k * m_k, so the
    unmixing is elementwise division (NuVanishesError if some nu_k is
    numerically zero).  The plain pipeline then runs on the moments.
    """
    k_len = len(series.values)
    if series.domain == DOMAIN_DT:
        nu = nu_sequence_dt(agent, k_len, precision=precision)
        moments = unmix_moments(series.values, nu, precision=precision)
        fields, _ = _recover_from_values(
            moments, rel_tol, imag_tol, cluster_tol, full, precision
        )
        return SpectralEstimate(eigenvalues=fields["roots"], **fields)
    if abs(agent.gamma_beta()) <= NU_ZERO_TOL:
        raise UnmixingSingularError(
            f"gamma^T beta = {agent.gamma_beta():.3e} is numerically zero"
        )
    nu = nu_sequence_ct(agent, series.tau, k_len, precision=precision)
    for k, f in enumerate(nu):
        if abs(float(f)) <= NU_ZERO_TOL:
            raise NuVanishesError(k, float(f))
    if precision is None:
        moments = np.asarray(series.values, dtype=np.float64) / nu
    else:
        y = _numeric.lift(series.values, precision)
        with workdps(precision):
            moments = np.array([yi / fi for yi, fi in zip(y, nu)], dtype=object)
    fields, working_roots = _recover_from_values(
        moments, rel_tol, imag_tol, cluster_tol, full, precision
    )
    lams = ct_log_transform(working_roots, series.tau, precision)
    eig = np.sort(_numeric.to_float_array(lams))
    return SpectralEstimate(eigenvalues=eig, **fields)


def write_estimate(estimate, path):
    """Serialize a SpectralEstimate as JSON."""
    with open(path, "w") as fh:
        json.dump(estimate.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_estimate(path):
    with open(path) as fh:
        return SpectralEstimate.from_dict(json.load(fh))
