"""Scalar output sequences of networked dynamical systems.

Four system classes are simulated, crossing discrete/continuous time with
single-integrator/identical-agent dynamics.  Simulators are pure functions of
their inputs and emit a MeasurementSeries: the ordered scalars a black-box
network would hand to the estimator, tagged with the time domain and (for
continuous time) the sampling period.

Discrete-time simulation iterates matrix-vector products; continuous-time
simulation goes through the reference eigendecomposition and per-sample
diagonal exponentials, so samples are exact up to arithmetic and halving the
period while doubling the index reproduces identical values by construction.
The identical-agent simulators build the Kronecker-sum system explicitly;
sizes stay at desk scale.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf, workdps

from . import _numeric
from .errors import BadParametersError, DimensionMismatchError
from .graphs import LaplacianKind, eig_reference

DOMAIN_DT = "dt"
DOMAIN_CT = "ct"

GAMMA_BETA_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ObservationSpec:
    """Output functional c and initial condition x0, both length n."""

    c: np.ndarray
    x0: np.ndarray


@dataclass(frozen=True, eq=False)
class AgentModel:
    """Identical per-agent dynamics: state matrix A with input/output
    directions beta (initial) and gamma (observed)."""

    a: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        beta = np.asarray(self.beta, dtype=np.float64).ravel()
        gamma = np.asarray(self.gamma, dtype=np.float64).ravel()
        d = a.shape[0]
        if a.shape != (d, d) or beta.shape != (d,) or gamma.shape != (d,):
            raise DimensionMismatchError(
                f"agent model needs A ({d}x{d}), beta and gamma of length {d}"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(beta)) and np.all(np.isfinite(gamma))):
            raise BadParametersError("agent model entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self):
        return self.a.shape[0]

    def gamma_beta(self):
        return float(self.gamma @ self.beta)


@dataclass(frozen=True, eq=False)
class MeasurementSeries:
    """Ordered scalar outputs y[0..K-1] tagged with their time domain.

    ``meta`` carries provenance (network size, flags); estimators must not
    read it — they see only values, domain, and tau.
    """

    values: np.ndarray
    domain: str
    tau: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = self.values
        if not isinstance(vals, np.ndarray):
            vals = np.asarray(vals)
            if vals.dtype != object:
                vals = vals.astype(np.float64)
        object.__setattr__(self, "values", vals)
        if self.domain not in (DOMAIN_DT, DOMAIN_CT):
            raise BadParametersError(f"unknown time domain {self.domain!r}")
        if len(vals) < 1:
            raise BadParametersError("a measurement series needs at least one sample")
        if self.domain == DOMAIN_CT:
            if self.tau is None or not self.tau > 0:
                raise BadParametersError("continuous-time series need a period tau > 0")
        elif self.tau is not None:
            raise BadParametersError("discrete-time series carry no period")

    def __len__(self):
        return len(self.values)


def _check_observation(m, obs):
    n = m.n
    c = np.asarray(obs.c, dtype=np.float64).ravel()
    x0 = np.asarray(obs.x0, dtype=np.float64).ravel()
    if c.shape != (n,) or x0.shape != (n,):
        raise DimensionMismatchError(
            f"observation vectors have lengths {c.shape[0]} and {x0.shape[0]}, network has n={n}"
        )
    return c, x0


def simulate_dt_integrator(m, obs, samples, precision=None):
    """y[k] = c^T M^k x0 for k = 0..samples-1, by iterated products."""
    c, x0 = _check_observation(m, obs)
    if samples < 1:
        raise BadParametersError("need at least one sample")
    if precision is None:
        values = np.empty(samples)
        x = x0.copy()
        for k in range(samples):
            values[k] = c @ x
            if k + 1 < samples:
                x = m.entries @ x
    else:
        with workdps(precision):
            rows = [[mpf(v) for v in row] for row in m.entries]
            cv = [mpf(v) for v in c]
            x = [mpf(v) for v in x0]
            values = np.empty(samples, dtype=object)
            for k in range(samples):
                values[k] = sum(ci * xi for ci, xi in zip(cv, x))
                if k + 1 < samples:
                    x = [sum(r[j] * x[j] for j in range(len(x))) for r in rows]
    return MeasurementSeries(values=values, domain=DOMAIN_DT, meta={"n": m.n})


def _kron_sum(m, agent):
    n, d = m.n, agent.d
    return np.kron(np.eye(n), agent.a) + np.kron(m.entries, np.eye(d))


def simulate_dt_network(m, agent, c_weights, x0_weights, samples, precision=None):
    """Kronecker-structured network of identical discrete-time agents.

    State is x0 (x) beta in R^(n d); the step matrix is I_n (x) A + M (x) I_d
    and the scalar output functional is c (x) gamma.  When gamma^T beta
    vanishes the series is still valid but the moment unmixing downstream is
    singular; the condition is flagged in the metadata.
    """
    obs = ObservationSpec(c=np.asarray(c_weights, dtype=np.float64),
                          x0=np.asarray(x0_weights, dtype=np.float64))
    c, x0 = _check_observation(m, obs)
    if samples < 1:
        raise BadParametersError("need at least one sample")
    step = _kron_sum(m, agent)
    out = np.kron(c, agent.gamma)
    state0 = np.kron(x0, agent.beta)
    meta = {
        "n": m.n,
        "agent_dim": agent.d,
        "unmixing_singular": abs(agent.gamma_beta()) <= GAMMA_BETA_TOL,
    }
    if precision is None:
        values = np.empty(samples)
        x = state0.copy()
        for k in range(samples):
            values[k] = out @ x
            if k + 1 < samples:
                x = step @ x
    else:
        with workdps(precision):
            rows = [[mpf(v) for v in row] for row in step]
            ov = [mpf(v) for v in out]
            x = [mpf(v) for v in state0]
            values = np.empty(samples, dtype=object)
            for k in range(samples):
                values[k] = sum(oi * xi for oi, xi in zip(ov, x))
                if k + 1 < samples:
                    x = [sum(r[j] * x[j] for j in range(len(x))) for r in rows]
    return MeasurementSeries(values=values, domain=DOMAIN_DT, meta=meta)


_CT_TABLE_CACHE: dict = {}
_CT_TABLE_LIMIT = 16


def _ct_mode_table(m, tau, samples, precision):
    """exp(-lambda_j * (k tau)) per mode j and sample k, cached per system."""
    key = (m.entries.tobytes(), m.n, m.kind, float(tau), samples, precision)
    hit = _CT_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    dec = eig_reference(m, precision=precision)
    if precision is None:
        lam = dec.eigenvalues
        table = np.exp(-np.outer(lam, np.arange(samples) * tau))
    else:
        with workdps(precision):
            taum = mpf(float(tau))
            table = [
                [mp.e ** (-lam_j * (k * taum)) for k in range(samples)]
                for lam_j in dec.eigenvalues
            ]
    if len(_CT_TABLE_CACHE) >= _CT_TABLE_LIMIT:
        _CT_TABLE_CACHE.pop(next(iter(_CT_TABLE_CACHE)))
    _CT_TABLE_CACHE[key] = (dec, table)
    return dec, table


def simulate_ct_integrator(m, obs, tau, samples, precision=None):
    """Sampled output of dx/dt = -M x: y_k = c^T U exp(-Lambda k tau) W x0.

    Requires the combinatorial kind (the continuous-time dynamics are posed
    with L = D - G) and tau > 0.  One eigendecomposition, then per-sample
    diagonal exponentials.
    """
    if m.kind is not LaplacianKind.COMBINATORIAL:
        raise BadParametersError("continuous-time dynamics use the combinatorial Laplacian")
    if not tau > 0:
        raise BadParametersError(f"sampling period must be positive, got {tau}")
    if samples < 1:
        raise BadParametersError("need at least one sample")
    c, x0 = _check_observation(m, obs)
    dec, table = _ct_mode_table(m, tau, samples, precision)
    if precision is None:
        a = c @ dec.right_vectors
        b = dec.left_vectors @ x0
        values = (a * b) @ table
    else:
        with workdps(precision):
            n = m.n
            support = [i for i in range(n) if c[i] != 0.0]
            cv = {i: mpf(c[i]) for i in support}
            xv = [mpf(v) for v in x0]
            a = [sum(cv[i] * dec.right_vectors[i, j] for i in support) for j in range(n)]
            b = [sum(dec.left_vectors[j, i] * xv[i] for i in range(n)) for j in range(n)]
            w = [aj * bj for aj, bj in zip(a, b)]
            values = np.empty(samples, dtype=object)
            for k in range(samples):
                values[k] = sum(w[j] * table[j][k] for j in range(n))
    return MeasurementSeries(values=values, domain=DOMAIN_CT, tau=float(tau), meta={"n": m.n})


def simulate_ct_network(m, agent, c_weights, x0_weights, tau, samples, precision=None):
    """Sampled identical-agent continuous-time network.

    The Kronecker structure factorizes each sample into the integrator
    factor times the agent factor gamma^T exp(A k tau) beta; the agent
    factor is computed from one dense matrix exponential of A tau raised by
    repeated multiplication.
    """
    integ = simulate_ct_integrator(
        m,
        ObservationSpec(c=np.asarray(c_weights, dtype=np.float64),
                        x0=np.asarray(x0_weights, dtype=np.float64)),
        tau,
        samples,
        precision=precision,
    )
    nu = nu_factors(agent, tau, samples, precision=precision)
    if precision is None:
        values = integ.values * nu
    else:
        values = np.array([v * f for v, f in zip(integ.values, nu)], dtype=object)
    meta = {
        "n": m.n,
        "agent_dim": agent.d,
        "unmixing_singular": abs(agent.gamma_beta()) <= GAMMA_BETA_TOL,
    }
    return MeasurementSeries(values=values, domain=DOMAIN_CT, tau=float(tau), meta=meta)


def nu_factors(agent, tau, samples, precision=None):
    """gamma^T exp(A k tau) beta for k = 0..samples-1."""
    e = _numeric.matrix_exp(agent.a * float(tau), precision)
    if precision is None:
        v = agent.beta.copy()
        out = np.empty(samples)
        for k in range(samples):
            out[k] = agent.gamma @ v
            if k + 1 < samples:
                v = e @ v
        return out
    with workdps(precision):
        d = agent.d
        gv = [mpf(val) for val in agent.gamma]
        v = [mpf(val) for val in agent.beta]
        out = np.empty(samples, dtype=object)
        for k in range(samples):
            out[k] = sum(gv[i] * v[i] for i in range(d))
            if k + 1 < samples:
                v = [sum(e[i, j] * v[j] for j in range(d)) for i in range(d)]
        return out


def random_observation(n, seed, agents, weights=None):
    """Observation with x0 ~ Uniform[0,1]^n and c built from observed agents.

    ``agents`` is a single 1-based node index (observe one agent) or a
    sequence of indices; ``weights`` optionally weights each observed agent
    (default: equal weight 1).  Deterministic for a fixed seed.
    """
    if n < 1:
        raise BadParametersError(f"node count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x0 = rng.random(n)
    idx = [agents] if np.isscalar(agents) else list(agents)
    if weights is None:
        wts = [1.0] * len(idx)
    else:
        wts = [float(w) for w in weights]
        if len(wts) != len(idx):
            raise DimensionMismatchError(
                f"{len(idx)} observed agents but {len(wts)} weights"
            )
    c = np.zeros(n)
    seen = set()
    for i, w in zip(idx, wts):
        i = int(i)
        if not 1 <= i <= n:
            raise BadParametersError(f"observed agent {i} outside [1, {n}]")
        if i in seen:
            raise BadParametersError(f"observed agent {i} listed twice")
        seen.add(i)
        c[i - 1] = w
    return ObservationSpec(c=c, x0=x0)


def write_measurements(series, csv_path, sidecar_extra=None, precision=None):
    """Write samples as CSV (header ``k,y``) plus a JSON sidecar.

    The sidecar records domain, tau, and whatever provenance the caller
    passes (seeds, generator parameters, observation vectors).  Values are
    formatted to full round-trip precision.
    """
    mp_values = series.values.dtype == object
    digits = precision
    if mp_values and digits is None:
        digits = mp.dps
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "y"])
        for k, v in enumerate(series.values):
            if mp_values:
                with workdps(digits):
                    writer.writerow([k, mp.nstr(v, digits, strip_zeros=False)])
            else:
                writer.writerow([k, repr(float(v))])
    sidecar = {
        "domain": series.domain,
        "tau": series.tau,
        "length": len(series),
        "precision": digits if mp_values else None,
        "meta": _jsonable(series.meta),
    }
    if sidecar_extra:
        sidecar.update(_jsonable(sidecar_extra))
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_measurements(csv_path):
    """Read a CSV + sidecar pair back into a MeasurementSeries.

    Returns (series, sidecar_dict).
    """
    with open(_sidecar_path(csv_path)) as fh:
        sidecar = json.load(fh)
    raw = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["k", "y"]:
            raise BadParametersError(f"{csv_path} does not have the 'k,y' header")
        for row in reader:
            if row:
                raw.append(row[1])
    digits = sidecar.get("precision")
    if digits:
        with workdps(int(digits)):
            values = np.array([mpf(s) for s in raw], dtype=object)
    else:
        values = np.array([float(s) for s in raw])
    series = MeasurementSeries(
        values=values,
        domain=sidecar["domain"],
        tau=sidecar.get("tau"),
        meta=dict(sidecar.get("meta", {})),
    )
    return series, sidecar


def _sidecar_path(csv_path):
    path = str(csv_path)
    return (path[: -len(".csv")] if path.endswith(".csv") else path) + ".json"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj
