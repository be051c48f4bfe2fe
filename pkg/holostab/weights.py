"""
Weight triples under edge perturbations.

Edge weights are perturbed directly, W1 + eps E. Vertex weights follow as weighted
degrees shifted by rho, so they never vanish. Triangle weights follow the coupling
f(u1, u2, u3) = 1 + min(u1, u2, u3, 0) of the relative edge perturbations u: they shrink
with their weakest edge, vanish with it, and never grow.
"""

import logging
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from holostab._exceptions import NegativeWeight, ZeroProjectedNorm
from holostab._utils.types import ArrayLike, Coupling
from holostab.complex import SimplicialComplex

logger = logging.getLogger(__name__)

ZERO_WEIGHT_RTOL = 1e-12
"""Perturbed edge weights at most this fraction of the original weight are exactly zero."""


class WeightProfile:
    """
    Initial weights of a complex.

    Attributes:
        complex (SimplicialComplex): The complex the weights live on.
        w1 (np.ndarray): Strictly positive edge weights.
        w2 (np.ndarray): Strictly positive triangle weights.
        rho (float): Vertex-weight shift.
        coupling (Coupling): Triangle coupling rule.
    """

    __slots__ = ("complex", "w1", "w2", "rho", "coupling")

    def __init__(
        self,
        complex_: SimplicialComplex,
        w1: ArrayLike,
        w2: Optional[ArrayLike] = None,
        rho: float = 1.0,
        coupling: Coupling = Coupling.MIN_RATIO,
    ):
        w1 = np.asarray(w1, dtype=float).copy()
        w2 = np.ones(complex_.n_triangles) if w2 is None else np.asarray(w2, dtype=float).copy()
        if w1.shape != (complex_.m,):
            raise ValueError(f"expected {complex_.m} edge weights, got {w1.shape}")
        if w2.shape != (complex_.n_triangles,):
            raise ValueError(f"expected {complex_.n_triangles} triangle weights, got {w2.shape}")
        for values, what in ((w1, "edge weight"), (w2, "triangle weight")):
            bad = np.flatnonzero(~(values > 0))
            if bad.size:
                raise NegativeWeight(int(bad[0]), float(values[bad[0]]), what)
        if not rho > 0:
            raise ValueError("rho must be strictly positive")

        self.complex = complex_
        self.w1 = w1
        self.w2 = w2
        self.rho = float(rho)
        self.coupling = Coupling(coupling)

    @classmethod
    def from_complex(
        cls,
        complex_: SimplicialComplex,
        w1: Optional[ArrayLike] = None,
        w2: Optional[ArrayLike] = None,
        rho: float = 1.0,
    ) -> "WeightProfile":
        """Profile with unit weights wherever none are given."""
        if w1 is None:
            w1 = np.ones(complex_.m)
        return cls(complex_, w1, w2, rho)

    def lower_bound(self, eps: float) -> np.ndarray:
        """Smallest admissible perturbation entries at level eps: W1 + eps E >= 0."""
        return -self.w1 / eps


class Perturbation:
    """
    Diagonal edge perturbation E.

    Attributes:
        values (np.ndarray): Diagonal of E.
    """

    __slots__ = ("values",)

    def __init__(self, values: ArrayLike):
        self.values = np.asarray(values, dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_admissible(self, profile: WeightProfile, eps: float) -> bool:
        return bool(np.all(profile.w1 + eps * self.values >= -ZERO_WEIGHT_RTOL * profile.w1))

    def support(self, profile: WeightProfile, eps: float) -> np.ndarray:
        """Edges whose perturbed weight stays positive."""
        return profile.w1 + eps * self.values > ZERO_WEIGHT_RTOL * profile.w1


# pylint: disable=too-many-instance-attributes
class PerturbedWeights:
    """
    Weight triple after a perturbation.

    Attributes:
        eps (float): Perturbation level.
        E (np.ndarray): Perturbation direction.
        w1_tilde (np.ndarray): Perturbed edge weights, exact zeros for eliminated edges.
        w0_tilde (np.ndarray): Weighted degrees plus rho.
        w2_tilde (np.ndarray): Coupled triangle weights.
        u (np.ndarray): Relative edge perturbation (w1_tilde - w1) / w1.
        argmin_edge (np.ndarray): Per triangle, the edge attaining min u (smallest position
            among ties).
        coupled (np.ndarray): Per triangle, whether min u <= 0 so the weight follows its
            weakest edge instead of being clamped.
    """

    __slots__ = (
        "eps",
        "E",
        "w1_tilde",
        "w0_tilde",
        "w2_tilde",
        "u",
        "argmin_edge",
        "coupled",
    )

    # pylint: disable=too-many-arguments
    def __init__(self, eps, E, w1_tilde, w0_tilde, w2_tilde, u, argmin_edge, coupled):
        self.eps = eps
        self.E = E
        self.w1_tilde = w1_tilde
        self.w0_tilde = w0_tilde
        self.w2_tilde = w2_tilde
        self.u = u
        self.argmin_edge = argmin_edge
        self.coupled = coupled

    @property
    def zero_edges(self) -> np.ndarray:
        return self.w1_tilde == 0

    @property
    def support(self) -> np.ndarray:
        return self.w1_tilde > 0


def perturb(p: WeightProfile, eps: float, E) -> PerturbedWeights:
    """
    Apply eps E to the edge weights and derive vertex and triangle weights.

    Raises:
        NegativeWeight: Some edge weight would become negative.
        ValueError: ``E`` has norm above one.
    """
    E = np.asarray(getattr(E, "values", E), dtype=float)
    c = p.complex
    if E.shape != (c.m,):
        raise ValueError(f"perturbation has shape {E.shape}, expected ({c.m},)")
    if np.linalg.norm(E) > 1 + 1e-8:
        raise ValueError("perturbation direction must have norm at most one")

    w1_tilde = p.w1 + eps * E
    tiny = ZERO_WEIGHT_RTOL * p.w1
    bad = np.flatnonzero(w1_tilde < -tiny)
    if bad.size:
        raise NegativeWeight(int(bad[0]), float(w1_tilde[bad[0]]))
    w1_tilde = np.where(w1_tilde <= tiny, 0.0, w1_tilde)
    u = (w1_tilde - p.w1) / p.w1

    w0_tilde = c.abs_b1 @ w1_tilde + p.rho

    faces = c.triangle_edges
    if faces.shape[0]:
        face_u = u[faces]
        column = np.argmin(face_u, axis=1)
        argmin_edge = faces[np.arange(faces.shape[0]), column]
        u_min = face_u[np.arange(faces.shape[0]), column]
    else:
        argmin_edge = np.zeros(0, dtype=np.int64)
        u_min = np.zeros(0)
    coupled = u_min <= 0
    w2_tilde = p.w2 * (1.0 + np.minimum(u_min, 0.0))
    w2_tilde = np.where(u_min <= -1.0, 0.0, w2_tilde)

    return PerturbedWeights(eps, E, w1_tilde, w0_tilde, w2_tilde, u, argmin_edge, coupled)


def weight_jacobians(p: WeightProfile, pw: PerturbedWeights) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
    """
    Jacobians of vertex and triangle weights with respect to the perturbed edge weights.

    Returns:
        tuple: J10 (m x n), entry 1 when the edge contains the vertex, and J12 (m x t),
        with entry w2(t) / w1(e*) at the arg-min edge e* of each coupled triangle.
    """
    c = p.complex
    j10 = c.abs_b1.T.tocsr()
    tri = np.flatnonzero(pw.coupled)
    rows = pw.argmin_edge[tri]
    j12 = sp.coo_matrix(
        (p.w2[tri] / p.w1[rows], (rows, tri)), shape=(c.m, c.n_triangles)
    ).tocsr()
    return j10, j12


def project_admissible(direction: ArrayLike, w1: np.ndarray, eps: float) -> np.ndarray:
    """
    Map a direction onto the unit sphere intersected with {E : w1 + eps E >= 0}.

    Entries below the lower bound are clamped to it and the remaining entries are
    rescaled to restore unit norm; clamping is repeated until no entry violates its bound.
    The active set only grows, so the loop ends after at most m rounds.

    Raises:
        ZeroProjectedNorm: Nothing remains on the free entries to rescale.
    """
    lower = -np.asarray(w1, dtype=float) / eps
    point = np.asarray(direction, dtype=float).copy()
    active = point < lower
    while True:
        point[active] = lower[active]
        clamped = float(np.dot(lower[active], lower[active]))
        if clamped >= 1.0:
            # the bounds alone reach the sphere
            point[~active] = 0.0
            return point / np.sqrt(clamped)
        free = ~active
        free_norm = float(np.linalg.norm(point[free]))
        if free_norm == 0.0:
            raise ZeroProjectedNorm()
        point[free] *= np.sqrt(1.0 - clamped) / free_norm
        violated = free & (point < lower)
        if not violated.any():
            return point
        active |= violated
