"""
Target functional and its gradients.

    F(eps, E) = lambda_plus^2 / 2 + alpha / 2 * max(0, 1 - mu2 / mu_bar)^2

lambda_plus is the first nonzero eigenvalue of L1_up and mu2 that of L0. Writing x for
the unit eigenvector of lambda_plus, y for the one of mu2, z = x / sqrt(w1) and
q = y / sqrt(w0), the derivatives with respect to the perturbed edge weights are

    d lambda_plus / d w1 = -lambda_plus x^2 / w1 + J12 (B2^T z)^2
    d mu2 / d w1         = (B1^T q)^2 - J10 (mu2 y^2 / w0)

and the free gradient with respect to E is eps times the chain rule through F.
"""

import logging
import warnings
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from holostab._exceptions import DegenerateEigenvalue, ZeroProjectedNorm
from holostab._validators.configs import FunctionalParams
from holostab.complex import SimplicialComplex
from holostab.laplacians import LaplacianBundle
from holostab.spectral import SpectralPoint
from holostab.weights import PerturbedWeights

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10
"""A perturbation with norm within BOUNDARY_TOL of one is on the sphere."""


# pylint: disable=too-few-public-methods
class GradientInfo:
    """
    Free gradient at a point, with its projection on the positive-weight support.

    Attributes:
        G (np.ndarray): Free gradient.
        G_projected (np.ndarray): G with entries of zero-weight edges removed.
        kappa (float): <G, P+E> / ||P+E||^2, zero when P+E vanishes.
        active_set (np.ndarray): Edges where the projection zeroes the direction.
        lambda_block (np.ndarray): Contribution of the lambda_plus term.
        mu_block (np.ndarray): Contribution of the penalty term.
        penalty_active (bool): Whether mu2 < mu_bar.
    """

    __slots__ = (
        "G",
        "G_projected",
        "kappa",
        "active_set",
        "lambda_block",
        "mu_block",
        "penalty_active",
    )

    # pylint: disable=too-many-arguments
    def __init__(self, G, G_projected, kappa, active_set, lambda_block, mu_block, penalty_active):
        self.G = G
        self.G_projected = G_projected
        self.kappa = kappa
        self.active_set = active_set
        self.lambda_block = lambda_block
        self.mu_block = mu_block
        self.penalty_active = penalty_active


def _hinge(mu2: float, p: FunctionalParams) -> float:
    return max(0.0, 1.0 - mu2 / p.mu_bar)


def eval_functional(
    b: LaplacianBundle, sp_lambda: SpectralPoint, sp_mu: SpectralPoint, p: FunctionalParams
) -> float:
    """F = lambda_plus^2 / 2 + alpha / 2 * max(0, 1 - mu2 / mu_bar)^2."""
    del b  # the spectral points already summarize the bundle
    return 0.5 * sp_lambda.value**2 + 0.5 * p.alpha * _hinge(sp_mu.value, p) ** 2


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    out = np.zeros_like(numerator, dtype=float)
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    return out


def lambda_gradient(
    c: SimplicialComplex, pw: PerturbedWeights, sp_lambda: SpectralPoint, j12: sp.spmatrix
) -> np.ndarray:
    """Derivative of lambda_plus with respect to each perturbed edge weight."""
    x = sp_lambda.vector
    z = _safe_divide(x, np.sqrt(pw.w1_tilde))
    through_triangles = j12 @ (c.b2.T @ z) ** 2
    return -sp_lambda.value * _safe_divide(x**2, pw.w1_tilde) + through_triangles


def mu_gradient(
    c: SimplicialComplex, pw: PerturbedWeights, sp_mu: SpectralPoint, j10: sp.spmatrix
) -> np.ndarray:
    """Derivative of mu2 with respect to each perturbed edge weight."""
    y = sp_mu.vector
    q = y / np.sqrt(pw.w0_tilde)
    return (c.b1.T @ q) ** 2 - j10 @ (sp_mu.value * y**2 / pw.w0_tilde)


# pylint: disable=too-many-arguments
def free_gradient(
    c: SimplicialComplex,
    pw: PerturbedWeights,
    b: LaplacianBundle,
    sp_lambda: SpectralPoint,
    sp_mu: SpectralPoint,
    jac: Tuple[sp.spmatrix, sp.spmatrix],
    p: FunctionalParams,
    eps: float,
) -> GradientInfo:
    """
    Free gradient of F with respect to E at level eps.

    The penalty block is present only while mu2 < mu_bar; at mu2 == mu_bar it is zero.
    A DegenerateEigenvalue warning is emitted when either eigenvalue is flagged as
    multiple, in which case the result is one element of the subdifferential.
    """
    del b
    if sp_lambda.multiplicity_flag or sp_mu.multiplicity_flag:
        warnings.warn(
            DegenerateEigenvalue(
                f"multiple eigenvalue (lambda_plus={sp_lambda.value:.3e}, mu2={sp_mu.value:.3e})"
            ),
            stacklevel=2,
        )
    j10, j12 = jac

    lambda_block = eps * sp_lambda.value * lambda_gradient(c, pw, sp_lambda, j12)
    hinge = _hinge(sp_mu.value, p)
    if hinge > 0:
        mu_block = -eps * (p.alpha / p.mu_bar) * hinge * mu_gradient(c, pw, sp_mu, j10)
    else:
        mu_block = np.zeros(c.m)

    G = lambda_block + mu_block
    active_set = ~(pw.w1_tilde > 0)
    G_projected = np.where(active_set, 0.0, G)
    projected_E = np.where(active_set, 0.0, pw.E)
    squared = float(projected_E @ projected_E)
    kappa = float(G @ projected_E) / squared if squared > 0 else 0.0

    return GradientInfo(G, G_projected, kappa, active_set, lambda_block, mu_block, hinge > 0)


def _projected(E: np.ndarray, g: GradientInfo) -> np.ndarray:
    return np.where(g.active_set, 0.0, np.asarray(getattr(E, "values", E), dtype=float))


def constrained_direction(E, g: GradientInfo) -> np.ndarray:
    """
    Steepest admissible descent on the unit sphere: -P+G + kappa P+E.

    Raises:
        ZeroProjectedNorm: P+E vanishes.
    """
    projected_E = _projected(E, g)
    squared = float(projected_E @ projected_E)
    if squared == 0.0:
        raise ZeroProjectedNorm()
    kappa = float(g.G @ projected_E) / squared
    return -g.G_projected + kappa * projected_E


def free_direction(E, g: GradientInfo) -> np.ndarray:
    """
    Free-flow direction: -P+G inside the unit ball, and on the sphere -P+G + min(0, kappa) E
    so that the norm of E never exceeds one.
    """
    E = np.asarray(getattr(E, "values", E), dtype=float)
    if np.linalg.norm(E) < 1.0 - BOUNDARY_TOL:
        return -g.G_projected
    projected_E = _projected(E, g)
    squared = float(projected_E @ projected_E)
    if squared == 0.0:
        return -g.G_projected
    kappa = float(g.G @ projected_E) / squared
    return -g.G_projected + min(0.0, kappa) * E


def stationarity(E, g: GradientInfo) -> float:
    """
    ||P+G - <P+G, E> E|| / ||P+G|| with E read on the positive support and renormalized,
    which is the plain formula whenever no edge is eliminated. Zero when the projected
    gradient vanishes.
    """
    norm = float(np.linalg.norm(g.G_projected))
    if norm == 0.0:
        return 0.0
    projected_E = _projected(E, g)
    length = float(np.linalg.norm(projected_E))
    if length == 0.0:
        return 1.0
    unit = projected_E / length
    tangent = g.G_projected - float(g.G_projected @ unit) * unit
    return float(np.linalg.norm(tangent)) / norm
