"""
Exception hierarchy for holostab.

Every error raised on purpose by the library derives from HolostabError so callers
(and the command line front end) can separate domain failures from bugs. Errors keep
the structured context a caller needs to recover: the offending simplex, the partial
flow state, or the spectral point computed before the failure.

Classes:
    HolostabError
    ComplexError, MissingFace, DuplicateSimplex, SelfLoop
    WeightError, NegativeWeight, NonPositiveVertexWeight
    SolverError, NoConvergence, KernelDimMismatch, BreakdownNegativePivot
    FlowError, ZeroProjectedNorm, MaxInnerIterations, NotConverged
    BenchError, DegenerateConfiguration
    IngestError, MalformedHeader, MalformedRecord, MissingColumn, UnknownZone,
    DisconnectedZones
    DegenerateEigenvalue (warning)
"""


class HolostabError(Exception):
    """Base class for all errors raised by holostab."""


class ComplexError(HolostabError):
    """A simplicial complex failed validation."""


class MissingFace(ComplexError):
    """
    A simplex references a face that is not part of the complex.

    Attributes:
        simplex (tuple): The simplex whose face is missing.
        face (tuple): The missing face.
    """

    def __init__(self, simplex, face):
        self.simplex = simplex
        self.face = face
        super().__init__(f"Simplex {simplex} has missing face {face}")


class DuplicateSimplex(ComplexError):
    """The same simplex was listed twice."""

    def __init__(self, simplex):
        self.simplex = simplex
        super().__init__(f"Duplicate simplex {simplex}")


class SelfLoop(ComplexError):
    """A simplex repeats one of its vertices."""

    def __init__(self, simplex):
        self.simplex = simplex
        super().__init__(f"Simplex {simplex} repeats a vertex")


class WeightError(HolostabError):
    """Weights violate positivity or admissibility."""


class NegativeWeight(WeightError):
    """
    A weight left the admissible set.

    Attributes:
        index (int): Position of the first offending entry.
        value (float): Its value.
    """

    def __init__(self, index, value, what="edge weight"):
        self.index = index
        self.value = value
        super().__init__(f"{what} at position {index} is not admissible: {value!r}")


class NonPositiveVertexWeight(WeightError):
    """A perturbed vertex weight is not strictly positive."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"Vertex weight at position {index} is {value!r}")


class SolverError(HolostabError):
    """A linear-algebra kernel failed."""


class NoConvergence(SolverError):
    """
    An iterative solver hit its iteration cap above tolerance.

    Attributes:
        iterations (int): Iterations performed.
        residual (float): Final residual measure.
    """

    def __init__(self, iterations, residual, what="solver"):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"{what} did not converge after {iterations} iterations (residual {residual:.3e})"
        )


class KernelDimMismatch(SolverError):
    """
    The numerical kernel is larger than the declared one.

    Raised when an eigenvalue that should be strictly positive is numerically zero,
    which means the homology (or the connectivity) already changed.

    Attributes:
        expected (int): Declared kernel dimension.
        found (int): Kernel dimension observed by the solver.
        point (SpectralPoint): The eigenpair found at the declared position.
    """

    def __init__(self, expected, found, point=None):
        self.expected = expected
        self.found = found
        self.point = point
        super().__init__(f"Kernel dimension {found} exceeds declared {expected}")


class BreakdownNegativePivot(SolverError):
    """Incomplete Cholesky met a non-positive pivot for every shift tried."""

    def __init__(self, column, pivot, shift):
        self.column = column
        self.pivot = pivot
        self.shift = shift
        super().__init__(
            f"Non-positive pivot {pivot:.3e} at column {column} (diagonal shift {shift:.3e})"
        )


class FlowError(HolostabError):
    """The gradient flow could not proceed."""


class ZeroProjectedNorm(FlowError):
    """The perturbation vanishes on the free support, so the multiplier is undefined."""

    def __init__(self):
        super().__init__("Projected perturbation has zero norm")


class MaxInnerIterations(FlowError):
    """
    An inner flow used up its step budget.

    Attributes:
        state (FlowState): The state reached when the budget ran out.
    """

    def __init__(self, state, max_inner):
        self.state = state
        super().__init__(f"Inner flow exceeded {max_inner} steps at eps={state.eps:.6g}")


class NotConverged(FlowError):
    """
    The outer continuation stopped without a verified new hole.

    Attributes:
        result (StabilityResult): Partial result carrying the trajectory so far.
    """

    def __init__(self, result, reason):
        self.result = result
        self.reason = reason
        super().__init__(f"Stability flow did not converge: {reason}")


class BenchError(HolostabError):
    """Benchmark generation failed."""


class DegenerateConfiguration(BenchError):
    """Sampled points produce a zero-area triangle."""

    def __init__(self, triangle):
        self.triangle = triangle
        super().__init__(f"Degenerate triangle {triangle} in point configuration")


class IngestError(HolostabError):
    """A transportation dataset could not be ingested."""


class MalformedHeader(IngestError):
    """The metadata block of a TNTP file is missing or unreadable."""

    def __init__(self, path, detail):
        self.path = path
        super().__init__(f"{path}: malformed header ({detail})")


class MalformedRecord(IngestError):
    """A data line of a TNTP file cannot be parsed."""

    def __init__(self, path, line_number, line):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: cannot parse {line.strip()!r}")


class MissingColumn(IngestError):
    """A required column is absent from the link table."""

    def __init__(self, path, column):
        self.path = path
        self.column = column
        super().__init__(f"{path}: missing column {column!r}")


class UnknownZone(IngestError):
    """A trip table references a zone outside the declared range."""

    def __init__(self, zone, num_zones):
        self.zone = zone
        super().__init__(f"Zone {zone} outside 1..{num_zones}")


class DisconnectedZones(IngestError):
    """No path exists between two retained zones."""

    def __init__(self, origin, destination):
        self.origin = origin
        self.destination = destination
        super().__init__(f"No path between zones {origin} and {destination}")


class DegenerateEigenvalue(UserWarning):
    """The tracked eigenvalue is (numerically) multiple; its gradient is a subgradient."""
