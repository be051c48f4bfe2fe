"""
This file defines the Pydantic models validating every configuration object.

- SolverConfig: eigensolver and least-squares settings.
- FunctionalParams: penalty weight and connectivity threshold of the target functional.
- FlowConfig: step control, continuation and stopping rules of the gradient flow.
- BenchSpec: one cell of the triangulation benchmark.

Note:
- Unknown fields are rejected (``extra="forbid"``) so that a typo in a config file or a
  manifest replay fails loudly instead of silently falling back to a default.
- Cross-field invariants are enforced by model validators.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from holostab._utils.types import Precond, SolverMode


class SolverConfig(BaseModel):
    """
    Settings of the spectral solvers.

    Args:
        mode (SolverMode): dense, iterative, or auto (dense below ``dense_threshold``).
        lsqr_tol (float): Relative normal-equation residual target of least-squares solves.
        eig_tol (float): Relative eigen-residual target of the iterative eigensolver.
        max_iters (int): Subspace-iteration cap of the iterative eigensolver.
        lsqr_max_iters (int, optional): Cap per least-squares solve; defaults to 10 x dimension.
        precond (Precond): none or ichol.
        dense_threshold (int): Largest matrix dimension solved densely in auto mode.
        block_size (int): Block width of the inverse subspace iteration.
        damp (float): Tikhonov damping of each least-squares solve.
        seed (int): Seed for the start block of the iterative eigensolver.
    """

    model_config = ConfigDict(extra="forbid")

    mode: SolverMode = SolverMode.AUTO
    lsqr_tol: float = Field(default=1e-10, gt=0)
    eig_tol: float = Field(default=1e-9, gt=0)
    max_iters: int = Field(default=500, gt=0)
    lsqr_max_iters: Optional[int] = Field(default=None, gt=0)
    precond: Precond = Precond.NONE
    dense_threshold: int = Field(default=400, ge=0)
    block_size: int = Field(default=3, gt=0)
    damp: float = Field(default=0.0, ge=0)
    seed: int = 0


class FunctionalParams(BaseModel):
    """
    Parameters of the target functional.

    Args:
        alpha (float): Penalty weight.
        mu_bar (float): Connectivity threshold below which the penalty is active.
    """

    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(gt=0)
    mu_bar: float = Field(gt=0)

    def penalty_active(self, mu2: float) -> bool:
        """Whether the hinge penalty contributes at this algebraic connectivity."""
        return mu2 < self.mu_bar


class FlowConfig(BaseModel):
    """
    Settings of the constrained/free gradient flow.

    Args:
        eps0 (float): Perturbation level of the calibration phase.
        delta_eps (float, optional): Continuation increment; defaults to
            ``delta_eps_factor`` times the norm of the edge weights.
        delta_eps_factor (float): See ``delta_eps``.
        alpha_lo (float): First penalty weight tried.
        alpha_hi (float): Cap of the penalty weight.
        alpha_factor (float): Growth of the penalty weight per calibration round.
        alpha_change_tol (float): Calibration stops when the minimizer moves less than this.
        h0 (float): Initial Euler step.
        beta_step (float): Step shrink factor on rejection and growth factor after two
            consecutive acceptances.
        h_min (float): Step length below which an inner run is considered stalled.
        f_tol (float): Global stopping threshold on the functional.
        max_outer (int): Cap on continuation steps.
        max_inner (int): Cap on attempted Euler steps per inner run.
        mu_factor (float): Threshold factor, mu_bar = mu_factor * initial mu2.
        stall_window (int): Accepted steps over which the relative decrease is measured.
        stall_tol (float): Relative decrease below which an inner run is converged.
        stationarity_tol (float): Tolerance of the stationarity test.
        refine_steps (int): Bisection steps on the last continuation interval.
        snap_ratio (float): Edges whose remaining relative weight is at most this are
            candidates for elimination.
        max_starts (int): Cap on the flows started when the first nonzero eigenvalue of
            L1_up is multiple at the unperturbed weights, one per localized eigenvector.
    """

    model_config = ConfigDict(extra="forbid")

    eps0: float = Field(default=1e-3, gt=0)
    delta_eps: Optional[float] = Field(default=None, gt=0)
    delta_eps_factor: float = Field(default=0.05, gt=0)
    alpha_lo: float = Field(default=1.0, gt=0)
    alpha_hi: float = Field(default=100.0, gt=0)
    alpha_factor: float = Field(default=10.0, gt=1)
    alpha_change_tol: float = Field(default=1e-8, gt=0)
    h0: float = Field(default=0.1, gt=0)
    beta_step: float = Field(default=1.5, gt=1)
    h_min: float = Field(default=1e-12, gt=0)
    f_tol: float = Field(default=1e-6, gt=0)
    max_outer: int = Field(default=60, gt=0)
    max_inner: int = Field(default=2000, gt=0)
    mu_factor: float = Field(default=0.75, gt=0)
    stall_window: int = Field(default=10, gt=0)
    stall_tol: float = Field(default=1e-9, gt=0)
    stationarity_tol: float = Field(default=1e-4, gt=0)
    refine_steps: int = Field(default=8, ge=0)
    snap_ratio: float = Field(default=0.05, gt=0, lt=1)
    max_starts: int = Field(default=4, gt=0)

    @model_validator(mode="after")
    def _check_alpha_range(self):
        if self.alpha_lo > self.alpha_hi:
            raise ValueError("alpha_lo must not exceed alpha_hi")
        return self


class BenchSpec(BaseModel):
    """
    One cell of the triangulation benchmark.

    Args:
        N (int): Number of points sampled in the unit square.
        nu (float): Target sparsity; the graph gets round(nu * N (N - 1) / 2) edges.
        seed (int): Base seed.
        repeats (int): Instances generated for this cell.
        weight_low (float): Lower bound of the uniform edge weights.
        weight_high (float): Upper bound of the uniform edge weights.
        precond (Precond): Preconditioner used when solving the instances.
    """

    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=4)
    nu: float = Field(gt=0, le=1)
    seed: int = 0
    repeats: int = Field(default=1, gt=0)
    weight_low: float = Field(default=0.25, gt=0)
    weight_high: float = Field(default=0.75, gt=0)
    precond: Precond = Precond.NONE

    @model_validator(mode="after")
    def _check_weight_bounds(self):
        if self.weight_low >= self.weight_high:
            raise ValueError("weight_low must be smaller than weight_high")
        return self
