"""This module contains the objects returned by stability runs and benchmark sweeps."""

from typing import List, Optional, Sequence, Tuple

from holostab._records.record import Record
from holostab._records.trajectory import TrajectoryRow


# pylint: disable=too-many-instance-attributes
class StabilityResult(Record):
    """
    Outcome of a stability run.

    Attributes:
        converged (bool): Whether a verified new hole was found.
        eps_star (float): Norm of the final perturbation (eliminated edges set to zero),
            None when not converged.
        eps_flow (float): Perturbation level at which the flow reached F <= f_tol.
        eliminated_edges (list): Edge labels driven to zero weight.
        betti_before (int): First Betti number of the input complex.
        betti_after (int): First Betti number of the reduced complex.
        alpha (float): Penalty weight selected by the calibration phase.
        mu_bar (float): Connectivity threshold used by the penalty.
        runtime_seconds (float): Wall-clock time of the run.
        solver_stats (dict): Eigensolver and least-squares counters.
        shared_edge_warning (bool): Whether an eliminated edge lies in at least two
            triangles while the complex already has at least two holes.
        trajectory (list[TrajectoryRow]): Every attempted step.
    """

    __slots__ = (
        "converged",
        "eps_star",
        "eps_flow",
        "eliminated_edges",
        "betti_before",
        "betti_after",
        "alpha",
        "mu_bar",
        "runtime_seconds",
        "solver_stats",
        "shared_edge_warning",
        "trajectory",
    )

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        converged: bool,
        eps_star: Optional[float],
        eps_flow: Optional[float],
        eliminated_edges: Sequence[Tuple],
        betti_before: int,
        betti_after: int,
        alpha: float,
        mu_bar: float,
        runtime_seconds: float,
        solver_stats: dict,
        shared_edge_warning: bool = False,
        trajectory: Optional[List[TrajectoryRow]] = None,
    ):
        self.converged = converged
        self.eps_star = eps_star
        self.eps_flow = eps_flow
        self.eliminated_edges = [list(edge) for edge in eliminated_edges]
        self.betti_before = betti_before
        self.betti_after = betti_after
        self.alpha = alpha
        self.mu_bar = mu_bar
        self.runtime_seconds = runtime_seconds
        self.solver_stats = dict(solver_stats)
        self.shared_edge_warning = shared_edge_warning
        self.trajectory = list(trajectory or [])

    @property
    def _id_attrs(self):
        return (self.eps_star, tuple(map(tuple, self.eliminated_edges)))

    def summary(self) -> dict:
        """The result without its trajectory, as written to result.json."""
        data = self.to_dict()
        data.pop("trajectory")
        return data


class BenchRecord(Record):
    """
    One benchmark instance.

    Attributes:
        N (int): Number of sampled points.
        nu (float): Target sparsity.
        seed (int): Base seed of the sweep.
        repeat (int): Instance index within its (N, nu) cell.
        m (int): Number of edges.
        triangles (int): Number of triangles.
        runtime (float): Seconds spent in the stability run.
        eps_star (float): Result of the run, None on failure.
        eliminated (int): Number of eliminated edges.
        precond (str): Preconditioner used.
        status (str): ok, not_converged or error.
        lsmr_iterations (int): Total least-squares iterations.
        resamples (int): Degenerate point sets discarded before this instance.
    """

    __slots__ = (
        "N",
        "nu",
        "seed",
        "repeat",
        "m",
        "triangles",
        "runtime",
        "eps_star",
        "eliminated",
        "precond",
        "status",
        "lsmr_iterations",
        "resamples",
    )

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        N: int,
        nu: float,
        seed: int,
        repeat: int,
        m: int,
        triangles: int,
        runtime: float,
        eps_star: Optional[float],
        eliminated: int,
        precond: str,
        status: str,
        lsmr_iterations: int = 0,
        resamples: int = 0,
    ):
        self.N = N
        self.nu = nu
        self.seed = seed
        self.repeat = repeat
        self.m = m
        self.triangles = triangles
        self.runtime = runtime
        self.eps_star = eps_star
        self.eliminated = eliminated
        self.precond = precond
        self.status = status
        self.lsmr_iterations = lsmr_iterations
        self.resamples = resamples

    @property
    def _id_attrs(self):
        return (self.N, self.nu, self.seed, self.repeat, self.precond)


class RunManifest(Record):
    """
    Everything needed to replay a command.

    Attributes:
        command (str): Subcommand name.
        inputs (dict): Input paths by role.
        config (dict): Fully resolved configuration, defaults included.
        seed (int): Seed of the run, if any.
        version (str): Package version.
        wall_clock (float): Seconds spent in the command.
        started_at (str): ISO-8601 UTC start time.
    """

    __slots__ = ("command", "inputs", "config", "seed", "version", "wall_clock", "started_at")

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        command: str,
        inputs: dict,
        config: dict,
        seed: Optional[int],
        version: str,
        wall_clock: float,
        started_at: str,
    ):
        self.command = command
        self.inputs = {key: str(value) for key, value in inputs.items()}
        self.config = config
        self.seed = seed
        self.version = version
        self.wall_clock = wall_clock
        self.started_at = started_at

    @property
    def _id_attrs(self):
        return (self.command, self.started_at)
