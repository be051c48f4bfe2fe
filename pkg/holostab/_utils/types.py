"""This module contains custom typing aliases and enumerations for internal use within the library.

Warning:
    Contents of this module are intended to be used internally by the library and *not* by the
    user. Changes to this module are not considered breaking changes and may not be documented in
    the changelog.
"""

from enum import Enum
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

JSONDict = Dict[str, Any]
"""Dictionary ready to be dumped as JSON."""

Edge = Tuple[int, int]
"""Edge as a pair of internal vertex indices, smaller index first."""

Triangle = Tuple[int, int, int]
"""Triangle as a sorted triple of internal vertex indices."""

ArrayLike = Union[np.ndarray, Sequence[float]]
"""Anything numpy can turn into a float vector."""


class SolverMode(str, Enum):
    """Which eigensolver path to use."""

    DENSE = "dense"
    ITERATIVE = "iterative"
    AUTO = "auto"


class Precond(str, Enum):
    """Preconditioner applied inside least-squares solves."""

    NONE = "none"
    ICHOL = "ichol"


class Phase(str, Enum):
    """Tag of the flow segment a trajectory row belongs to."""

    ALPHA = "alpha"
    CONSTRAINED = "constrained"
    FREE = "free"


class Coupling(str, Enum):
    """Rule deriving triangle weights from perturbed edge weights."""

    MIN_RATIO = "min_ratio"
