"""Precision-dispatching numerical kernels.

Every public estimator accepts ``precision=None`` (IEEE double, the default)
or ``precision=<decimal digits>`` (mpmath arbitrary precision).  The paper's
guarantees hold in exact arithmetic; the mp path is what makes the
exact-arithmetic regime reachable when the decay factors of a sampled
continuous-time system cluster near zero and the square Hankel solve becomes
hopeless in doubles.

The mp path keeps costs sane in two ways: singular values are first computed
in doubles and only recomputed in mp when a threshold decision falls inside
the double-precision noise band, and the symmetric eigenproblems are solved
by a compact cyclic Jacobi instead of mpmath's general-purpose routines.
"""

from __future__ import annotations

import numpy as np
from mpmath import mp, mpf, workdps

from .errors import InsufficientDataError

_EPS = np.finfo(float).eps


def lift(values, precision):
    """Return values in working arithmetic: float64 ndarray or list of mpf."""
    if precision is None:
        if isinstance(values, np.ndarray) and values.dtype == np.float64:
            return values
        return np.array([float(v) for v in values], dtype=np.float64)
    with workdps(precision):
        return [v if isinstance(v, mpf) else mpf(v) for v in values]


def is_mp(values):
    """True when values live in mpmath arithmetic."""
    if isinstance(values, np.ndarray):
        return values.dtype == object
    return len(values) > 0 and not isinstance(values[0], float)


def to_float_array(values):
    return np.array([float(v) for v in values], dtype=np.float64)


def hankel(values, size):
    """size x size Hankel with entry (i, j) = values[i + j]."""
    need = 2 * size - 1
    if len(values) < need:
        raise InsufficientDataError(
            f"a {size}x{size} Hankel needs {need} values, got {len(values)}"
        )
    if isinstance(values, np.ndarray) and values.dtype == np.float64:
        idx = np.arange(size)
        return values[idx[:, None] + idx[None, :]]
    h = np.empty((size, size), dtype=object)
    for i in range(size):
        for j in range(size):
            h[i, j] = values[i + j]
    return h


def hankel_singular_values(values, size, precision, rel_tol=None):
    """Singular values (descending) of the Hankel built from values.

    Double path: LAPACK SVD.  mp path: the Hankel is symmetric, so its
    singular values are the magnitudes of its eigenvalues; a
    double-precision SVD acts as a prescreen and is promoted to an mp
    symmetric eigensolve only when a value is too uncertain in doubles to
    classify against the threshold rel_tol * sigma_1 (or, without a
    threshold, too small to be trusted at all).
    """
    if precision is None:
        h = hankel(lift(values, None), size)
        return np.linalg.svd(h, compute_uv=False)
    window = values[: 2 * size - 1]
    h64 = hankel(to_float_array(window), size)
    sv64 = np.linalg.svd(h64, compute_uv=False)
    band = 100.0 * size * _EPS * (sv64[0] if sv64[0] > 0 else 1.0)
    if sv64[0] > 0:
        if rel_tol is None:
            certain = sv64[-1] > band
        else:
            t = rel_tol * sv64[0]
            certain = not np.any((sv64 > t - band) & (sv64 <= t + band))
        if certain:
            with workdps(precision):
                return [mpf(s) for s in sv64]
    vals = lift(window, precision)
    if all(v == 0 for v in vals):
        with workdps(precision):
            return [mpf(0)] * size
    with workdps(precision):
        rows = [[vals[i + j] for j in range(size)] for i in range(size)]
        eig = mp.eigsy(mp.matrix(rows), eigvals_only=True, overwrite_a=True)
        return sorted((abs(eig[i]) for i in range(size)), reverse=True)


def count_above(singular_values, rel_tol):
    """Number of singular values above rel_tol * sigma_1 (0 if sigma_1 = 0).

    The product rel_tol * sigma_1 rounds at the ambient precision, which
    perturbs the threshold by ~1e-16 relative; thresholds are
    order-of-magnitude knobs, so that is immaterial (comparisons themselves
    are exact in mpmath).
    """
    if len(singular_values) == 0:
        return 0
    top = singular_values[0]
    if top == 0:
        return 0
    return sum(1 for s in singular_values if s > rel_tol * top)


def prony_solve(values, size, rel_tol, precision):
    """Least-squares solution of Hankel(values, size) @ x = -values[size:2 size].

    Double path: SVD pseudo-inverse truncated at rel_tol * sigma_1.  mp path:
    callers only reach this at full effective rank, where the thresholded
    pseudo-inverse coincides with the plain solve, so LU is used.  The
    right-hand side is negated inside the working-precision context; mpmath
    rounds even unary negation to the ambient precision, so forming it
    outside would silently truncate the data.
    """
    if precision is None:
        vals = lift(values, None)
        h = hankel(vals, size)
        rhs = -vals[size : 2 * size]
        u, s, vt = np.linalg.svd(h)
        cutoff = rel_tol * (s[0] if s.size else 0.0)
        proj = u.T @ rhs
        inv = np.where(s > cutoff, np.divide(proj, s, out=np.zeros_like(proj), where=s > cutoff), 0.0)
        return vt.T @ inv
    with workdps(precision):
        vals = lift(values, precision)
        hm = mp.matrix(size, size)
        for i in range(size):
            for j in range(size):
                hm[i, j] = vals[i + j]
        b = mp.matrix([-vals[size + s] for s in range(size)])
        x = mp.lu_solve(hm, b)
        return [x[i] for i in range(size)]


def _horner(coeffs, x):
    """Evaluate p and p' for coefficients ordered highest degree first."""
    p = coeffs[0] * 0
    dp = coeffs[0] * 0
    for c in coeffs:
        dp = dp * x + p
        p = p * x + c
    return p, dp


def monic_roots(alpha, precision, imag_tol):
    """Roots of x^r + alpha[r-1] x^(r-1) + ... + alpha[0] as (re, im) pairs.

    Double path: companion-matrix eigenvalues (numpy.roots).  mp path: the
    double roots seed a Newton polish in mp arithmetic; if the double
    companion solve already reports genuinely complex roots, or the polish
    fails to converge, mpmath's simultaneous root finder takes over.
    """
    r = len(alpha)
    if precision is None:
        coeffs = np.concatenate(([1.0], np.asarray(alpha, dtype=np.float64)[::-1]))
        roots = np.roots(coeffs)
        return [(float(z.real), float(z.imag)) for z in roots]
    with workdps(precision):
        acc = [lift([a], precision)[0] for a in alpha]
        coeffs = [mpf(1)] + list(reversed(acc))
        seeds = np.roots(np.concatenate(([1.0], to_float_array(acc)[::-1])))
        seeds_real = all(
            abs(z.imag) <= imag_tol * max(1.0, abs(z.real)) for z in seeds
        )
        if seeds_real:
            out = []
            ok = True
            stop = mpf(10) ** (-(precision - 3))
            for z in seeds:
                x = mpf(float(z.real))
                for _ in range(12):
                    p, dp = _horner(coeffs, x)
                    if p == 0 or dp == 0:
                        break
                    step = p / dp
                    x = x - step
                    if abs(step) <= (abs(x) + 1) * stop:
                        break
                p, _ = _horner(coeffs, x)
                scale = sum(abs(c) * max(mpf(1), abs(x)) ** (r - i) for i, c in enumerate(coeffs))
                if abs(p) > scale * mpf(10) ** (-(2 * precision // 3)):
                    ok = False
                    break
                out.append((x, mpf(0)))
            if ok:
                return out
        roots = mp.polyroots(coeffs, maxsteps=120, extraprec=2 * precision)
        return [(mp.re(z), mp.im(z)) for z in roots]


def poly_residual(alpha, roots, precision):
    """max |p(root)| for the monic polynomial defined by alpha."""
    if len(roots) == 0:
        return 0.0
    if precision is None:
        coeffs = np.concatenate(([1.0], np.asarray(alpha, dtype=np.float64)[::-1]))
        return float(max(abs(_horner(coeffs, float(z))[0]) for z in roots))
    with workdps(precision):
        acc = [lift([a], precision)[0] for a in alpha]
        coeffs = [mpf(1)] + list(reversed(acc))
        return float(max(abs(_horner(coeffs, z)[0]) for z in roots))


def exp_value(x, precision):
    if precision is None:
        return float(np.exp(x))
    with workdps(precision):
        return mp.e ** (x if isinstance(x, mpf) else mpf(x))


def log_value(x, precision):
    if precision is None:
        return float(np.log(x))
    with workdps(precision):
        return mp.log(x if isinstance(x, mpf) else mpf(x))


def matrix_exp(a, precision):
    """Dense matrix exponential; scaling-and-squaring in both paths."""
    if precision is None:
        from scipy.linalg import expm

        return expm(np.asarray(a, dtype=np.float64))
    with workdps(precision):
        am = mp.matrix([[mpf(float(v)) for v in row] for row in np.asarray(a, dtype=np.float64)])
        em = mp.expm(am)
        d = am.rows
        out = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                out[i, j] = em[i, j]
        return out
