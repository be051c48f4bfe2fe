"""
Constrained and free gradient flow for the topological stability of a weighted complex.

A run has three parts:

- calibration: at a small fixed eps the constrained flow is run for growing penalty
  weights until the minimizer stops moving (or the penalty never mattered);
- continuation: eps grows by a fixed increment; after each increase the perturbation is
  rescaled into the unit ball, pushed back to the sphere by the free flow and polished by
  the constrained flow;
- verification: once F is below tolerance the last eps interval is bisected, nearly
  eliminated edges are set to zero and the reduced complex must show an extra hole.
"""

import logging
import time
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from holostab._exceptions import (
    BreakdownNegativePivot,
    KernelDimMismatch,
    MaxInnerIterations,
    NotConverged,
    ZeroProjectedNorm,
)
from holostab._records.results import StabilityResult
from holostab._records.trajectory import TrajectoryRow
from holostab._utils.types import Phase, Precond, SolverMode
from holostab._validators.configs import FlowConfig, FunctionalParams, SolverConfig
from holostab.complex import SimplicialComplex, betti_numbers, connected_components, up_kernel_dim
from holostab.functional import (
    BOUNDARY_TOL,
    GradientInfo,
    constrained_direction,
    eval_functional,
    free_direction,
    free_gradient,
    stationarity,
)
from holostab.laplacians import (
    LaplacianBundle,
    assemble,
    structural_up_kernel_dim,
    vertex_kernel_basis,
)
from holostab.spectral import (
    Preconditioner,
    SolverStats,
    SpectralPoint,
    eigen_cluster,
    smallest_nonzero_eig,
)
from holostab.weights import (
    Perturbation,
    PerturbedWeights,
    WeightProfile,
    perturb,
    project_admissible,
    weight_jacobians,
)

logger = logging.getLogger(__name__)


# pylint: disable=too-few-public-methods
class FlowPoint:
    """
    Everything evaluated at one (eps, E).

    Attributes:
        weights (PerturbedWeights): Perturbed weight triple.
        bundle (LaplacianBundle): Normalized operators.
        sp_lambda (SpectralPoint): First nonzero eigenpair of L1_up (zero when an exact new
            hole is present).
        sp_mu (SpectralPoint): Algebraic connectivity of L0 (zero when the support splits a
            component).
        F (float): Functional value.
    """

    __slots__ = ("weights", "bundle", "sp_lambda", "sp_mu", "F")

    def __init__(self, weights, bundle, sp_lambda, sp_mu, F):
        self.weights = weights
        self.bundle = bundle
        self.sp_lambda = sp_lambda
        self.sp_mu = sp_mu
        self.F = F


class FlowProblem:
    """
    Spectral evaluator bound to one complex and weight profile.

    Holds the reference topology, the connectivity threshold and the solver state
    (constant preconditioners and counters) shared by every evaluation of a run.

    Args:
        profile (WeightProfile): Complex and initial weights.
        solver (SolverConfig, optional): Eigensolver settings.
        mu_factor (float): mu_bar = mu_factor * mu2 of the unperturbed complex.
    """

    # pylint: disable=too-many-instance-attributes
    __slots__ = (
        "complex",
        "profile",
        "solver",
        "stats",
        "beta0",
        "beta1",
        "up_kernel",
        "mu_bar",
        "_precond_up",
        "_precond_l0",
        "_reduced_betti",
        "_up_kernel_dims",
    )

    def __init__(
        self,
        profile: WeightProfile,
        solver: Optional[SolverConfig] = None,
        mu_factor: float = 0.75,
    ):
        self.complex: SimplicialComplex = profile.complex
        self.profile = profile
        self.solver = solver or SolverConfig()
        self.stats = SolverStats()
        self.beta0, self.beta1 = betti_numbers(self.complex)
        self.up_kernel = up_kernel_dim(self.complex)
        self._reduced_betti: Dict[FrozenSet[int], Tuple[int, int]] = {}
        self._up_kernel_dims: Dict[bytes, int] = {}
        self._precond_up = None
        self._precond_l0 = None

        base = assemble(self.complex, perturb(profile, 0.0, np.zeros(self.complex.m)))
        if self.solver.precond == Precond.ICHOL:
            if self._iterative(self.complex.m):
                self._precond_up = self._build_precond(base.L1_up, "L1_up")
            if self._iterative(self.complex.n):
                self._precond_l0 = self._build_precond(base.L0, "L0")
        self.mu_bar = mu_factor * self._connectivity(base).value
        logger.info(
            "Problem with beta=(%d, %d), up-kernel %d, mu_bar=%.6g",
            self.beta0,
            self.beta1,
            self.up_kernel,
            self.mu_bar,
        )

    def _build_precond(self, matrix, name: str) -> Optional[Preconditioner]:
        try:
            return Preconditioner.build(matrix, stats=self.stats)
        except BreakdownNegativePivot as exc:
            logger.warning("No preconditioner for %s, solving without one: %s", name, exc)
            # stops smallest_nonzero_eig from retrying the factorization on every call
            self.solver = self.solver.model_copy(update={"precond": Precond.NONE})
            return None

    def _iterative(self, dim: int) -> bool:
        mode = self.solver.mode
        return mode == SolverMode.ITERATIVE or (
            mode == SolverMode.AUTO and dim > self.solver.dense_threshold
        )

    def reduced_betti(self, removed: np.ndarray) -> Tuple[int, int]:
        """Betti numbers of the complex without the given edges, cached per edge set."""
        key = frozenset(int(e) for e in np.flatnonzero(removed))
        if not key:
            return self.beta0, self.beta1
        if key not in self._reduced_betti:
            self._reduced_betti[key] = betti_numbers(self.complex.reduced(key))
        return self._reduced_betti[key]

    def params(self, alpha: float) -> FunctionalParams:
        return FunctionalParams(alpha=alpha, mu_bar=self.mu_bar)

    def _eig(self, matrix, kernel_dim, kernel_basis, precond) -> SpectralPoint:
        if kernel_dim >= matrix.shape[0]:
            return SpectralPoint.zero(np.zeros(matrix.shape[0]))
        try:
            return smallest_nonzero_eig(
                matrix, kernel_dim, self.solver, kernel_basis, precond, self.stats
            )
        except KernelDimMismatch as exc:
            # numerically vanished eigenvalue: keep tracking the eigenpair at that index
            logger.debug("Kernel larger than %d (found %d)", exc.expected, exc.found)
            if exc.point is None:
                raise
            return exc.point

    def _curvature(self, b: LaplacianBundle, reduced: Tuple[int, int]) -> SpectralPoint:
        if reduced[1] > self.beta1:
            return SpectralPoint.zero(np.zeros(self.complex.m))
        return self._eig(b.L1_up, self.up_kernel_dim(b.weights), None, self._precond_up)

    def up_kernel_dim(self, pw: PerturbedWeights) -> int:
        """Exact dim ker L1_up, cached per set of triangles with positive weight."""
        key = np.packbits(pw.w2_tilde > 0).tobytes()
        if key not in self._up_kernel_dims:
            self._up_kernel_dims[key] = structural_up_kernel_dim(self.complex, pw)
        return self._up_kernel_dims[key]

    def curvature_cluster(self, point: FlowPoint) -> List[SpectralPoint]:
        """
        Every eigenpair of L1_up tied with the tracked one, as localized eigenvectors.

        A single-element list when the tracked eigenvalue is simple or zero.
        """
        if not point.sp_lambda.multiplicity_flag or point.sp_lambda.value == 0:
            return [point.sp_lambda]
        try:
            values, vectors = eigen_cluster(
                point.bundle.L1_up,
                self.up_kernel_dim(point.weights),
                self.solver,
                None,
                self._precond_up,
                self.stats,
            )
        except KernelDimMismatch:
            return [point.sp_lambda]
        return [SpectralPoint(value, vectors[:, j]) for j, value in enumerate(values)]

    def _split_vector(self, pw: PerturbedWeights) -> np.ndarray:
        """Kernel vector of L0 separating two support components of one original component."""
        original = connected_components(self.complex)
        current = connected_components(self.complex, pw.support)
        root = np.sqrt(pw.w0_tilde)
        for comp in np.unique(original):
            parts = np.unique(current[original == comp])
            if parts.size >= 2:
                first, second = current == parts[0], current == parts[1]
                vector = root * (
                    first / pw.w0_tilde[first].sum() - second / pw.w0_tilde[second].sum()
                )
                return vector
        return np.zeros(self.complex.n)

    def _connectivity(self, b: LaplacianBundle, reduced: Optional[Tuple[int, int]] = None):
        reduced = reduced or (self.beta0, self.beta1)
        if reduced[0] > self.beta0:
            return SpectralPoint.zero(self._split_vector(b.weights))
        basis = vertex_kernel_basis(self.complex, b.weights)
        return self._eig(b.L0, basis.shape[1], basis, self._precond_l0)

    def evaluate(self, eps: float, E, alpha: float) -> FlowPoint:
        """Perturb, assemble, solve both eigenproblems and evaluate F."""
        pw = perturb(self.profile, eps, E)
        b = assemble(self.complex, pw)
        reduced = self.reduced_betti(pw.zero_edges)
        sp_lambda = self._curvature(b, reduced)
        sp_mu = self._connectivity(b, reduced)
        F = eval_functional(b, sp_lambda, sp_mu, self.params(alpha))
        return FlowPoint(pw, b, sp_lambda, sp_mu, F)

    def gradient(self, point: FlowPoint, alpha: float) -> GradientInfo:
        """Free gradient of F at an evaluated point."""
        pw = point.weights
        return free_gradient(
            self.complex,
            pw,
            point.bundle,
            point.sp_lambda,
            point.sp_mu,
            weight_jacobians(self.profile, pw),
            self.params(alpha),
            pw.eps,
        )


# pylint: disable=too-many-instance-attributes
class FlowState:
    """
    Mutable state of one flow run.

    Attributes:
        problem (FlowProblem): The evaluator.
        eps (float): Current perturbation level.
        E (np.ndarray): Current direction, admissible at eps.
        h (float): Current Euler step.
        F_val (float): F at (eps, E).
        phase (Phase): Tag of the running segment.
        alpha (float): Penalty weight.
        accept_streak (int): Consecutive accepted steps on an unchanged support.
        segment (int): Index of the running segment.
        trajectory (list[TrajectoryRow]): Every attempted step of the run.
        penalty_seen (bool): Whether mu2 dropped below mu_bar during the current segment.
        point (FlowPoint): Evaluation at (eps, E), None when stale.
    """

    __slots__ = (
        "problem",
        "eps",
        "E",
        "h",
        "F_val",
        "phase",
        "alpha",
        "accept_streak",
        "segment",
        "trajectory",
        "penalty_seen",
        "point",
    )

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        problem: FlowProblem,
        eps: float,
        E,
        alpha: float,
        h: float = 0.1,
        phase: Phase = Phase.CONSTRAINED,
    ):
        self.problem = problem
        self.eps = float(eps)
        self.E = np.asarray(getattr(E, "values", E), dtype=float).copy()
        self.h = h
        self.F_val = np.inf
        self.phase = Phase(phase)
        self.alpha = float(alpha)
        self.accept_streak = 0
        self.segment = -1
        self.trajectory: List[TrajectoryRow] = []
        self.penalty_seen = False
        self.point: Optional[FlowPoint] = None

    def move_to(self, eps: float, E) -> None:
        """Jump to a new point and mark the cached evaluation as stale."""
        self.eps = float(eps)
        self.E = np.asarray(getattr(E, "values", E), dtype=float).copy()
        self.point = None

    def current(self) -> FlowPoint:
        """Evaluation at (eps, E), computed on demand."""
        if self.point is None:
            self.point = self.problem.evaluate(self.eps, self.E, self.alpha)
            self.F_val = self.point.F
            self._observe(self.point)
        return self.point

    def _observe(self, point: FlowPoint) -> None:
        if point.sp_mu.value < self.problem.mu_bar:
            self.penalty_seen = True

    def record(self, point: FlowPoint, E: np.ndarray, accepted: bool) -> None:
        self.trajectory.append(
            TrajectoryRow(
                step=len(self.trajectory),
                segment=self.segment,
                phase=self.phase,
                eps=self.eps,
                alpha=self.alpha,
                F=point.F,
                lambda_plus=point.sp_lambda.value,
                mu2=point.sp_mu.value,
                normE=float(np.linalg.norm(E)),
                h=self.h,
                accepted=accepted,
                support=int(np.count_nonzero(point.weights.support)),
                lsmr_iterations=self.problem.stats.lsmr_iterations,
            )
        )
        logger.debug(
            "%s step eps=%.6g F=%.6e h=%.3e accepted=%s",
            self.phase.value,
            self.eps,
            point.F,
            self.h,
            accepted,
        )

    def try_step(self, E_new: np.ndarray, cfg: FlowConfig) -> bool:
        """
        Evaluate a proposed direction; accept it iff F strictly decreases.

        Accepted steps grow h after two consecutive acceptances on an unchanged support;
        rejected steps shrink h.
        """
        current = self.current()
        candidate = self.problem.evaluate(self.eps, E_new, self.alpha)
        self._observe(candidate)
        accepted = candidate.F < current.F
        self.record(candidate, E_new, accepted)
        if not accepted:
            self.h /= cfg.beta_step
            self.accept_streak = 0
            return False

        if np.array_equal(candidate.weights.support, current.weights.support):
            self.accept_streak += 1
        else:
            self.accept_streak = 0
        if self.accept_streak >= 2:
            self.h *= cfg.beta_step
            self.accept_streak = 0
        self.E = np.asarray(E_new, dtype=float).copy()
        self.point = candidate
        self.F_val = candidate.F
        return True


def _stalled(history: List[float], cfg: FlowConfig) -> bool:
    if len(history) <= cfg.stall_window:
        return False
    before = history[-cfg.stall_window - 1]
    if before <= 0:
        return True
    return (before - history[-1]) / before < cfg.stall_tol


def inner_constrained_flow(state: FlowState, cfg: FlowConfig) -> FlowState:
    """
    Norm-corrected Euler integration of the constrained gradient flow at fixed eps.

    Each step moves along -P+G + kappa P+E, projects back onto the admissible part of the
    unit sphere and is accepted only if F decreases. The run stops when F is below
    ``f_tol``, the point is stationary, the relative decrease stalls, or h underflows.

    Raises:
        MaxInnerIterations: ``max_inner`` steps were attempted without stopping.
    """
    state.segment += 1
    state.h = cfg.h0
    state.accept_streak = 0
    w1 = state.problem.profile.w1
    history = [state.current().F]

    for _ in range(cfg.max_inner):
        point = state.current()
        if point.F <= cfg.f_tol:
            return state
        g = state.problem.gradient(point, state.alpha)
        if stationarity(state.E, g) < cfg.stationarity_tol:
            logger.debug("Stationary at eps=%.6g F=%.6e", state.eps, point.F)
            return state
        try:
            direction = constrained_direction(state.E, g)
        except ZeroProjectedNorm:
            logger.debug("Perturbation vanished on the support at eps=%.6g", state.eps)
            return state

        try:
            E_new = project_admissible(state.E + state.h * direction, w1, state.eps)
        except ZeroProjectedNorm:
            state.h /= cfg.beta_step
            state.accept_streak = 0
            E_new = None
        if E_new is not None and state.try_step(E_new, cfg):
            history.append(state.F_val)
            if _stalled(history, cfg):
                return state
        elif state.h < cfg.h_min:
            return state

    raise MaxInnerIterations(state, cfg.max_inner)


def free_transition(state: FlowState, cfg: FlowConfig) -> FlowState:
    """
    Free gradient flow from the interior of the unit ball back to its boundary.

    Steps follow -P+G (with the min(0, kappa) E correction once on the sphere), clamped
    to the admissible box and renormalized whenever they would leave the ball. If the
    flow stalls before reaching the sphere, the point is projected onto it.

    Raises:
        MaxInnerIterations: ``max_inner`` steps were attempted without stopping.
    """
    state.segment += 1
    state.phase = Phase.FREE
    state.h = cfg.h0
    state.accept_streak = 0
    w1 = state.problem.profile.w1
    lower = -w1 / state.eps

    for _ in range(cfg.max_inner):
        point = state.current()
        if point.F <= cfg.f_tol:
            return state
        if np.linalg.norm(state.E) >= 1.0 - BOUNDARY_TOL:
            return state
        direction = free_direction(state.E, state.problem.gradient(point, state.alpha))
        if not direction.any():
            break
        proposal = np.maximum(state.E + state.h * direction, lower)
        if np.linalg.norm(proposal) > 1.0:
            proposal = project_admissible(proposal, w1, state.eps)
        if not state.try_step(proposal, cfg) and state.h < cfg.h_min:
            break
    else:
        raise MaxInnerIterations(state, cfg.max_inner)

    logger.debug("Free flow stalled at |E|=%.6g; projecting to the sphere", np.linalg.norm(state.E))
    state.move_to(state.eps, project_admissible(state.E, w1, state.eps))
    state.current()
    return state


def _run_inner(state: FlowState, cfg: FlowConfig, runner=inner_constrained_flow) -> FlowState:
    try:
        return runner(state, cfg)
    except MaxInnerIterations as exc:
        logger.warning("%s", exc)
        return exc.state


def start_directions(
    problem: FlowProblem, eps: float, alpha: float, limit: Optional[int] = None
) -> List[np.ndarray]:
    """
    Admissible unit directions of steepest descent from the unperturbed weights.

    One direction per localized eigenvector of the tracked eigenvalue of L1_up: when the
    eigenvalue is multiple, each eigenvector gives its own gradient and the flow started
    from it may end at a different hole. Falls back to shrinking every edge uniformly when
    no gradient survives the projection.
    """
    w1 = problem.profile.w1
    point = problem.evaluate(eps, np.zeros(problem.complex.m), alpha)
    cluster = problem.curvature_cluster(point)[:limit]
    if len(cluster) > 1:
        logger.info("lambda_plus=%.6g has multiplicity %d at E=0", cluster[0].value, len(cluster))

    directions: List[np.ndarray] = []
    for sp_lambda in cluster:
        tracked = FlowPoint(point.weights, point.bundle, sp_lambda, point.sp_mu, point.F)
        g = problem.gradient(tracked, alpha)
        if not g.G.any():
            continue
        try:
            direction = project_admissible(-g.G, w1, eps)
        except ZeroProjectedNorm:
            continue
        if all(np.linalg.norm(direction - seen) > 1e-8 for seen in directions):
            directions.append(direction)
    return directions or [project_admissible(-w1 / np.linalg.norm(w1), w1, eps)]


def initial_direction(problem: FlowProblem, eps: float, alpha: float) -> np.ndarray:
    """First of :func:`start_directions`."""
    return start_directions(problem, eps, alpha, limit=1)[0]


# pylint: disable=too-many-arguments
def alpha_phase(
    c: SimplicialComplex,
    profile: WeightProfile,
    cfg: Optional[FlowConfig] = None,
    solver: Optional[SolverConfig] = None,
    state: Optional[FlowState] = None,
    start: Optional[np.ndarray] = None,
) -> Tuple[float, Perturbation]:
    """
    Calibrate the penalty weight at eps = eps0.

    The constrained flow is rerun with alpha multiplied by ``alpha_factor`` from
    ``alpha_lo`` until the minimizer moves less than ``alpha_change_tol``, the penalty is
    never active during a run, or alpha reaches ``alpha_hi``.

    Args:
        c: The complex (must be the one of ``profile``).
        profile: Initial weights.
        cfg: Flow settings.
        solver: Eigensolver settings, used when no ``state`` is given.
        state: Flow state to run in; its trajectory receives the calibration rows.
        start: Admissible unit direction at eps0 to start from; defaults to
            :func:`initial_direction`.

    Returns:
        tuple: The selected alpha and the unit-norm minimizer at eps0.
    """
    cfg = cfg or FlowConfig()
    if profile.complex is not c:
        raise ValueError("weight profile belongs to a different complex")
    if state is None:
        problem = FlowProblem(profile, solver, cfg.mu_factor)
        state = FlowState(problem, cfg.eps0, np.zeros(c.m), cfg.alpha_lo, cfg.h0)
    problem = state.problem

    alpha = cfg.alpha_lo
    state.alpha = alpha
    if start is None:
        start = initial_direction(problem, cfg.eps0, alpha)
    state.move_to(cfg.eps0, start)
    previous = None
    while True:
        state.alpha = alpha
        state.phase = Phase.ALPHA
        state.penalty_seen = False
        state.point = None
        state = _run_inner(state, cfg)
        logger.info("Calibration run alpha=%g F=%.6e", alpha, state.F_val)

        if not state.penalty_seen:
            break
        if previous is not None and np.linalg.norm(state.E - previous) < cfg.alpha_change_tol:
            break
        if alpha >= cfg.alpha_hi:
            logger.warning("Penalty weight reached its cap alpha=%g", cfg.alpha_hi)
            break
        previous = state.E.copy()
        alpha = min(alpha * cfg.alpha_factor, cfg.alpha_hi)

    return alpha, Perturbation(state.E)


def _refine(state: FlowState, cfg: FlowConfig, eps_lo: float) -> None:
    """Bisect [eps_lo, state.eps] for the smallest level still reaching F <= f_tol."""
    w1 = state.problem.profile.w1
    best_eps, best_E, best_point = state.eps, state.E.copy(), state.current()
    low, high = eps_lo, state.eps
    for _ in range(cfg.refine_steps):
        middle = 0.5 * (low + high)
        try:
            start = project_admissible(best_E, w1, middle)
        except ZeroProjectedNorm:
            low = middle
            continue
        state.phase = Phase.CONSTRAINED
        state.move_to(middle, start)
        state = _run_inner(state, cfg)
        if state.F_val <= cfg.f_tol:
            high = middle
            best_eps, best_E, best_point = middle, state.E.copy(), state.current()
        else:
            low = middle
    state.move_to(best_eps, best_E)
    state.point = best_point
    state.F_val = best_point.F


def _snap(problem: FlowProblem, pw: PerturbedWeights, snap_ratio: float):
    """
    Zero the nearly eliminated edges, smallest remaining weight first, until the reduced
    complex has more holes than the input.

    Returns:
        tuple: (removed edge positions, eps_star, beta1 after), or None.
    """
    w1 = problem.profile.w1
    ratio = pw.w1_tilde / w1
    candidates = np.flatnonzero(ratio <= snap_ratio)
    candidates = candidates[np.argsort(ratio[candidates], kind="stable")]
    for count in range(1, candidates.size + 1):
        removed = np.zeros(problem.complex.m, dtype=bool)
        removed[candidates[:count]] = True
        beta1_after = problem.reduced_betti(removed)[1]
        if beta1_after > problem.beta1:
            chosen = np.sort(candidates[:count])
            return chosen, float(np.linalg.norm(w1[chosen])), beta1_after
    return None


def _shared_edge(c: SimplicialComplex, removed: np.ndarray, beta1: int) -> bool:
    if beta1 < 2 or not c.n_triangles:
        return False
    per_edge = np.bincount(c.triangle_edges.ravel(), minlength=c.m)
    return bool((per_edge[removed] >= 2).any())


# pylint: disable=too-many-arguments
def _result(state, started, converged, eps_star=None, removed=(), beta1_after=None, shared=False):
    problem, c = state.problem, state.problem.complex
    return StabilityResult(
        converged=converged,
        eps_star=eps_star,
        eps_flow=state.eps if converged else None,
        eliminated_edges=[c.edge_labels(int(e)) for e in removed],
        betti_before=problem.beta1,
        betti_after=problem.beta1 if beta1_after is None else beta1_after,
        alpha=state.alpha,
        mu_bar=problem.mu_bar,
        runtime_seconds=time.perf_counter() - started,
        solver_stats=problem.stats.to_dict(),
        shared_edge_warning=shared,
        trajectory=state.trajectory,
    )


def _continue(state: FlowState, cfg: FlowConfig, start: np.ndarray, started: float):
    """Calibration and continuation from one start direction."""
    problem, c = state.problem, state.problem.complex
    alpha, _ = alpha_phase(c, problem.profile, cfg, state=state, start=start)
    state.alpha = alpha
    delta = cfg.delta_eps or cfg.delta_eps_factor * float(np.linalg.norm(problem.profile.w1))
    previous_eps = cfg.eps0 - delta

    for outer in range(cfg.max_outer + 1):
        if state.F_val <= cfg.f_tol:
            _refine(state, cfg, max(previous_eps, 0.0))
            snapped = _snap(problem, state.current().weights, cfg.snap_ratio)
            if snapped is not None:
                removed, eps_star, beta1_after = snapped
                shared = _shared_edge(c, removed, problem.beta1)
                if shared:
                    logger.warning(
                        "Eliminated edges %s lie in several triangles of a complex with %d holes",
                        [c.edge_labels(int(e)) for e in removed],
                        problem.beta1,
                    )
                logger.info("Converged: eps*=%.6g, removed %d edge(s)", eps_star, removed.size)
                return _result(state, started, True, eps_star, removed, beta1_after, shared)
            logger.info("F below tolerance at eps=%.6g without a verified hole", state.eps)
        if outer == cfg.max_outer:
            break

        previous_eps, eps = state.eps, state.eps + delta
        logger.info("Continuation step %d: eps=%.6g", outer + 1, eps)
        state.move_to(eps, state.E * previous_eps / eps)
        state = _run_inner(state, cfg, free_transition)
        if state.F_val > cfg.f_tol:
            state.phase = Phase.CONSTRAINED
            state = _run_inner(state, cfg)

    reason = f"F > {cfg.f_tol:g} after {cfg.max_outer} continuation steps"
    raise NotConverged(_result(state, started, False), reason)


def run_stability(
    c: SimplicialComplex,
    profile: WeightProfile,
    cfg: Optional[FlowConfig] = None,
    solver: Optional[SolverConfig] = None,
) -> StabilityResult:
    """
    Smallest perturbation norm eps* whose optimal perturbation creates a new hole.

    When the tracked eigenvalue of L1_up is multiple at the unperturbed weights, one flow is
    run per start direction (see :func:`start_directions`) and the converged run with the
    smallest eps* is returned; ties keep the earlier run.

    Args:
        c: The complex.
        profile: Its weights.
        cfg: Flow settings.
        solver: Eigensolver settings.

    Returns:
        StabilityResult: eps*, the eliminated edges and the full trajectory of the
        selected run.

    Raises:
        NotConverged: No run verified a new hole within ``max_outer`` continuation steps,
            or the complex has no triangles to unfill. The exception carries the partial
            result of the first run.
    """
    started = time.perf_counter()
    cfg = cfg or FlowConfig()
    if profile.complex is not c:
        raise ValueError("weight profile belongs to a different complex")

    problem = FlowProblem(profile, solver, cfg.mu_factor)
    if not c.n_triangles:
        state = FlowState(problem, cfg.eps0, np.zeros(c.m), cfg.alpha_lo, cfg.h0)
        raise NotConverged(_result(state, started, False), "complex has no triangles to remove")

    starts = start_directions(problem, cfg.eps0, cfg.alpha_lo, cfg.max_starts)
    best: Optional[StabilityResult] = None
    failure: Optional[NotConverged] = None
    for index, start in enumerate(starts):
        if len(starts) > 1:
            logger.info("Flow %d of %d", index + 1, len(starts))
        state = FlowState(problem, cfg.eps0, np.zeros(c.m), cfg.alpha_lo, cfg.h0)
        try:
            outcome = _continue(state, cfg, start, started)
        except NotConverged as exc:
            failure = failure or exc
            continue
        if best is None or outcome.eps_star < best.eps_star:
            best = outcome

    if best is None:
        raise failure
    best.runtime_seconds = time.perf_counter() - started
    best.solver_stats = problem.stats.to_dict()
    return best
