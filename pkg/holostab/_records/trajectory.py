"""This module contains the object that represents one row of a flow trajectory."""

from holostab._records.record import Record
from holostab._utils.types import Phase


# pylint: disable=too-many-instance-attributes
class TrajectoryRow(Record):
    """
    One attempted Euler step of the gradient flow.

    Attributes:
        step (int): Running index over all attempted steps of a run.
        segment (int): Index of the inner run the step belongs to; F is non-increasing
            over accepted rows of one segment.
        phase (Phase): alpha, constrained or free.
        eps (float): Perturbation norm level.
        alpha (float): Penalty weight in force.
        F (float): Functional value at the proposed point.
        lambda_plus (float): First nonzero eigenvalue of the up-Laplacian.
        mu2 (float): Algebraic connectivity of the vertex Laplacian.
        normE (float): Norm of the proposed perturbation direction.
        h (float): Step length used.
        accepted (bool): Whether the step decreased F.
        support (int): Number of edges with positive perturbed weight.
        lsmr_iterations (int): Cumulative least-squares iterations at this point.
    """

    __slots__ = (
        "step",
        "segment",
        "phase",
        "eps",
        "alpha",
        "F",
        "lambda_plus",
        "mu2",
        "normE",
        "h",
        "accepted",
        "support",
        "lsmr_iterations",
    )

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        step: int,
        segment: int,
        phase: Phase,
        eps: float,
        alpha: float,
        F: float,
        lambda_plus: float,
        mu2: float,
        normE: float,
        h: float,
        accepted: bool,
        support: int,
        lsmr_iterations: int = 0,
    ):
        self.step = step
        self.segment = segment
        self.phase = Phase(phase)
        self.eps = float(eps)
        self.alpha = float(alpha)
        self.F = float(F)
        self.lambda_plus = float(lambda_plus)
        self.mu2 = float(mu2)
        self.normE = float(normE)
        self.h = float(h)
        self.accepted = bool(accepted)
        self.support = int(support)
        self.lsmr_iterations = int(lsmr_iterations)

    @property
    def _id_attrs(self):
        return (self.step, self.segment)

    def to_dict(self):
        data = super().to_dict()
        data["phase"] = self.phase.value
        return data
