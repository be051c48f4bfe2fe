"""Exceptions raised by holostab."""

from holostab._exceptions.errors import (
    HolostabError,
    ComplexError,
    MissingFace,
    DuplicateSimplex,
    SelfLoop,
    WeightError,
    NegativeWeight,
    NonPositiveVertexWeight,
    SolverError,
    NoConvergence,
    KernelDimMismatch,
    BreakdownNegativePivot,
    FlowError,
    ZeroProjectedNorm,
    MaxInnerIterations,
    NotConverged,
    BenchError,
    DegenerateConfiguration,
    IngestError,
    MalformedHeader,
    MalformedRecord,
    MissingColumn,
    UnknownZone,
    DisconnectedZones,
    DegenerateEigenvalue,
)
from holostab._exceptions.http_error import DownloadError
