"""Network topologies, their Laplacian matrices, and reference spectra.

Nodes are 1-based.  Graphs are simple and undirected; edges are stored as
normalized (i, j) pairs with i < j.  Two Laplacian conventions are supported:
the combinatorial Laplacian L = D - G and the random-walk normalization
D^-1 G (row-stochastic, real spectrum inside [-1, 1]).  Note the latter is
the degree-inverse times the adjacency matrix, not the symmetric
I - D^-1/2 G D^-1/2 most references call "normalized Laplacian".

``eig_reference`` is the ground-truth eigendecomposition every oracle and
test compares against.  For the random-walk matrix it routes through the
symmetric similarity D^1/2 (D^-1 G) D^-1/2 so eigenvalues come from a
symmetric problem and are guaranteed real.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from mpmath import mp, workdps

from ._numeric import to_float_array
from .errors import (
    BadParametersError,
    DuplicateEdgeError,
    IndexOutOfRangeError,
    IsolatedNodeError,
    NumericalFailureError,
    RingTooSmallError,
    SelfLoopError,
)

EIG_RESIDUAL_TOL = 1e-10


class LaplacianKind(enum.Enum):
    COMBINATORIAL = "combinatorial"
    NORMALIZED_RANDOM_WALK = "normalized-random-walk"


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 1..n."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def degrees(self):
        """Degree of each node, as an int array indexed 0..n-1."""
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i - 1] += 1
            deg[j - 1] += 1
        return deg

    def adjacency(self):
        """Dense 0/1 adjacency matrix."""
        g = np.zeros((self.n, self.n))
        for i, j in self.edges:
            g[i - 1, j - 1] = 1.0
            g[j - 1, i - 1] = 1.0
        return g


@dataclass(frozen=True, eq=False)
class SystemMatrix:
    """Dense Laplacian-type matrix together with its convention tag."""

    entries: np.ndarray
    kind: LaplacianKind

    @property
    def n(self):
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class SpectrumDecomposition:
    """Eigendecomposition M = U diag(eigenvalues) W with W = U^-1.

    Eigenvalues are ascending; right eigenvectors are the columns of U and
    left eigenvectors the rows of W.  Arrays are float64 by default and
    mpmath objects when the decomposition was requested at extended
    precision.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray


def _normalize_pair(pair):
    p = tuple(pair)
    if len(p) == 1:
        p = (p[0], p[0])
    if len(p) != 2:
        raise BadParametersError(f"edge {pair!r} is not a pair of nodes")
    return (int(p[0]), int(p[1]))


def build_graph(n, edges):
    """Validate and normalize an edge list into a Graph.

    Raises SelfLoopError, DuplicateEdgeError, or IndexOutOfRangeError, each
    naming the offending pair.
    """
    if n < 1:
        raise BadParametersError(f"node count must be >= 1, got {n}")
    seen = set()
    normalized = []
    for pair in edges:
        i, j = _normalize_pair(pair)
        if i == j:
            raise SelfLoopError((i, j))
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexOutOfRangeError((i, j), n)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(key)
        seen.add(key)
        normalized.append(key)
    return Graph(n=int(n), edges=tuple(sorted(normalized)))


def generate_ring(n):
    """Cycle graph C_n; every node has degree 2."""
    if n < 3:
        raise RingTooSmallError(n)
    edges = [(i, i + 1) for i in range(1, n)] + [(1, n)]
    return build_graph(n, edges)


def generate_preferential_attachment(n, m=1, seed=0):
    """Grow a connected graph by degree-proportional attachment.

    Starts from a star on m + 1 nodes; each subsequent node attaches to m
    distinct existing nodes sampled proportionally to degree.  Deterministic
    for a fixed seed.  With m = 1 the result is a tree with n - 1 edges.
    """
    if m < 1 or n < m + 1:
        raise BadParametersError(
            f"preferential attachment needs m >= 1 and n >= m + 1, got n={n}, m={m}"
        )
    rng = np.random.default_rng(seed)
    edges = [(1, j) for j in range(2, m + 2)]
    # One entry per endpoint; sampling uniformly from this list is
    # degree-proportional attachment.
    repeated = [1] * m + list(range(2, m + 2))
    for new in range(m + 2, n + 1):
        targets = set()
        while len(targets) < m:
            targets.add(repeated[rng.integers(len(repeated))])
        for t in sorted(targets):
            edges.append((t, new))
            repeated.extend((t, new))
    return build_graph(n, edges)


def laplacian(g, kind):
    """Laplacian matrix of the requested kind.

    Combinatorial: L = D - G.  Random-walk: D^-1 G, which requires every
    node to have degree >= 1.
    """
    adj = g.adjacency()
    deg = g.degrees()
    if kind is LaplacianKind.COMBINATORIAL:
        entries = np.diag(deg.astype(float)) - adj
    elif kind is LaplacianKind.NORMALIZED_RANDOM_WALK:
        for node, d in enumerate(deg, start=1):
            if d == 0:
                raise IsolatedNodeError(node)
        entries = adj / deg[:, None]
    else:
        raise BadParametersError(f"unknown Laplacian kind {kind!r}")
    entries.setflags(write=False)
    return SystemMatrix(entries=entries, kind=kind)


def _degrees_from_matrix(m):
    """Recover node degrees from a Laplacian matrix of either kind."""
    if m.kind is LaplacianKind.COMBINATORIAL:
        return np.diag(m.entries).astype(int)
    return (m.entries > 0).sum(axis=1).astype(int)


def _fix_signs(q):
    """Flip each column so its first significantly nonzero entry is positive."""
    for col in range(q.shape[1]):
        v = q[:, col]
        scale = np.abs(v).max()
        if scale == 0:
            continue
        nz = np.nonzero(np.abs(v) > 1e-12 * scale)[0]
        if nz.size and v[nz[0]] < 0:
            q[:, col] = -v
    return q


_EIG_CACHE: dict = {}
_EIG_CACHE_LIMIT = 64


def eig_reference(m, precision=None):
    """Ground-truth eigendecomposition of a Laplacian-kind matrix.

    Both kinds are reduced to a symmetric eigenproblem: the combinatorial
    Laplacian directly, the random-walk matrix through the D^(+-1/2)
    similarity.  Eigenvalues are sorted ascending with a deterministic sign
    convention on eigenvectors.  Residual invariants are checked and a
    NumericalFailureError raised if they cannot be met.

    With ``precision`` set, the decomposition is carried out in mpmath
    arithmetic on the exact float64 entries.  Results are cached per
    (matrix, precision); all returned arrays are read-only by convention.
    """
    key = (m.entries.tobytes(), m.entries.shape[0], m.kind, precision)
    hit = _EIG_CACHE.get(key)
    if hit is not None:
        return hit
    dec = _decompose(m, precision)
    if len(_EIG_CACHE) >= _EIG_CACHE_LIMIT:
        _EIG_CACHE.pop(next(iter(_EIG_CACHE)))
    _EIG_CACHE[key] = dec
    return dec


def _decompose(m, precision):
    n = m.n
    deg = _degrees_from_matrix(m)
    if m.kind is LaplacianKind.NORMALIZED_RANDOM_WALK:
        sqrt_d = np.sqrt(deg.astype(float))
        sym = m.entries * (sqrt_d[:, None] / sqrt_d[None, :])
    else:
        sqrt_d = None
        sym = m.entries
    sym = (sym + sym.T) / 2.0

    if precision is None:
        lam, q = np.linalg.eigh(sym)
        order = np.argsort(lam, kind="stable")
        lam, q = lam[order], _fix_signs(q[:, order])
        if sqrt_d is None:
            u, w = q, q.T.copy()
        else:
            u = q / sqrt_d[:, None]
            w = q.T * sqrt_d[None, :]
        for arr in (lam, u, w):
            arr.setflags(write=False)
        dec = SpectrumDecomposition(eigenvalues=lam, right_vectors=u, left_vectors=w)
    else:
        with workdps(precision):
            sm = mp.matrix([[mp.mpf(v) for v in row] for row in sym])
            lam_mp, q_mp = mp.eigsy(sm)
            lam_list = [lam_mp[i] for i in range(n)]
            order = sorted(range(n), key=lambda i: float(lam_list[i]))
            lam = np.array([lam_list[i] for i in order], dtype=object)
            q = np.empty((n, n), dtype=object)
            for jj, src in enumerate(order):
                col = [q_mp[i, src] for i in range(n)]
                scale = max(abs(v) for v in col)
                flip = 1
                if scale > 0:
                    for v in col:
                        if abs(v) > 1e-12 * scale:
                            flip = -1 if v < 0 else 1
                            break
                for i in range(n):
                    q[i, jj] = col[i] * flip
            if sqrt_d is None:
                u, w = q, q.T.copy()
            else:
                sd = [mp.sqrt(mp.mpf(int(d))) for d in deg]
                u = np.empty((n, n), dtype=object)
                w = np.empty((n, n), dtype=object)
                for i in range(n):
                    for j in range(n):
                        u[i, j] = q[i, j] / sd[i]
                        w[j, i] = q[i, j] * sd[i]
        dec = SpectrumDecomposition(eigenvalues=lam, right_vectors=u, left_vectors=w)

    _check_residuals(m, dec)
    return dec


def _check_residuals(m, dec):
    lam = to_float_array(dec.eigenvalues)
    u = np.array([[float(v) for v in row] for row in dec.right_vectors])
    w = np.array([[float(v) for v in row] for row in dec.left_vectors])
    norm_m = np.linalg.norm(m.entries, 2)
    resid = np.linalg.norm(m.entries @ u - u * lam[None, :], axis=0)
    if np.any(resid > EIG_RESIDUAL_TOL * max(norm_m, 1e-300)):
        raise NumericalFailureError(
            f"eigenvector residual {resid.max():.3e} exceeds bound for kind {m.kind.value}"
        )
    biorth = np.linalg.norm(w @ u - np.eye(m.n), 2)
    if biorth > EIG_RESIDUAL_TOL:
        raise NumericalFailureError(
            f"left/right eigenvector product deviates from identity by {biorth:.3e}"
        )


def write_graph_file(g, path):
    """Plain-text graph format: first line n, then one 'i j' edge per line."""
    lines = [str(g.n)] + [f"{i} {j}" for i, j in sorted(g.edges)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph_file(path):
    """Read the plain-text graph format; '#' starts a comment."""
    tokens = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                tokens.append(line.split())
    if not tokens:
        raise BadParametersError(f"graph file {path} contains no data")
    if len(tokens[0]) != 1:
        raise BadParametersError(f"graph file {path} must start with the node count")
    n = int(tokens[0][0])
    edges = []
    for tok in tokens[1:]:
        if len(tok) != 2:
            raise BadParametersError(f"malformed edge line {' '.join(tok)!r} in {path}")
        edges.append((int(tok[0]), int(tok[1])))
    return build_graph(n, edges)
