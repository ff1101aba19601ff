"""Exception hierarchy shared by the whole package.

Two broad families matter to callers (and to the CLI exit codes):
``ValidationError`` for inputs that violate a documented precondition, and
``NumericalError`` for computations that completed but produced results the
method cannot vouch for (complex roots, nonpositive decay factors, ...).
"""


class LapspecError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LapspecError):
    """An input violates a documented precondition."""


class GraphError(ValidationError):
    """Invalid graph construction input."""


class SelfLoopError(GraphError):
    def __init__(self, pair):
        super().__init__(f"self-loop edge {pair} is not allowed in a simple graph")
        self.pair = pair


class DuplicateEdgeError(GraphError):
    def __init__(self, pair):
        super().__init__(f"edge {pair} appears more than once")
        self.pair = pair


class IndexOutOfRangeError(GraphError):
    def __init__(self, pair, n):
        super().__init__(f"edge {pair} references a node outside [1, {n}]")
        self.pair = pair
        self.n = n


class RingTooSmallError(GraphError):
    def __init__(self, n):
        super().__init__(f"a cycle needs at least 3 nodes, got n={n}")
        self.n = n


class BadParametersError(ValidationError):
    """Generator or simulator parameters outside their admissible range."""


class IsolatedNodeError(ValidationError):
    def __init__(self, node):
        super().__init__(
            f"node {node} has degree 0; the random-walk normalization needs "
            "every degree to be at least 1"
        )
        self.node = node


class DimensionMismatchError(ValidationError):
    """Vector or matrix dimensions do not agree with the network size."""


class InsufficientDataError(ValidationError):
    """The measurement sequence is too short for the requested operation."""


class UnmixingSingularError(ValidationError):
    """The agent output/initial directions are orthogonal (gamma^T beta = 0),
    so the moment-unmixing system is singular."""


class ConfigError(ValidationError):
    """An experiment configuration fails up-front validation."""


class NumericalError(LapspecError):
    """A numerical computation produced results outside its guarantees."""


class NumericalFailureError(NumericalError):
    """An eigendecomposition failed its residual bounds."""


class RankDeficientSystemError(NumericalError):
    """The square coefficient Hankel has effective rank below its size,
    which signals an overestimated rank; callers retry with rank - 1."""

    def __init__(self, size, effective_rank, singular_values=None):
        super().__init__(
            f"{size}x{size} coefficient system has effective rank "
            f"{effective_rank}; rank was overestimated"
        )
        self.size = size
        self.effective_rank = effective_rank
        self.singular_values = singular_values


class ComplexRootsError(NumericalError):
    """Recovered polynomial roots have imaginary parts beyond tolerance.

    The dynamics guarantee real spectra, so complex output means the solve
    was too ill-conditioned to trust; it is surfaced, never truncated.
    """

    def __init__(self, roots, imag_tol):
        super().__init__(
            f"polynomial roots have imaginary parts beyond {imag_tol:g}: {roots}"
        )
        self.roots = roots
        self.imag_tol = imag_tol


class NonpositiveRootError(NumericalError):
    """A recovered decay factor is not strictly positive, so it cannot be
    mapped back through the logarithm (conditioning failure or aliasing)."""

    def __init__(self, root, pos_tol):
        super().__init__(
            f"recovered root {root} is not positive (tolerance {pos_tol:g}); "
            "cannot take its logarithm"
        )
        self.root = root
        self.pos_tol = pos_tol


class NuVanishesError(NumericalError):
    """A continuous-time agent factor nu_k is numerically zero, so the
    elementwise moment division is undefined."""

    def __init__(self, index, value):
        super().__init__(f"agent factor nu[{index}] = {value} is numerically zero")
        self.index = index
        self.value = value


class EmptySupportError(LapspecError):
    """The observed sequence carries no spectral content (rank 0)."""

    def __init__(self, samples_consumed):
        super().__init__(
            "measurement window is identically zero; no eigenvalue is visible"
        )
        self.samples_consumed = samples_consumed
