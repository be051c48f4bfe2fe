"""
Quasi-planar triangulation benchmark.

Points are sampled uniformly on the unit square and triangulated (Bowyer-Watson); edges
are then removed or added at random to reach a target sparsity, every 3-clique is
filled and edge weights are drawn uniformly. Each instance is solved independently.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from holostab._exceptions import DegenerateConfiguration, HolostabError, NotConverged
from holostab._records.results import BenchRecord
from holostab._settings import Settings
from holostab._validators.configs import BenchSpec, FlowConfig, SolverConfig
from holostab.complex import SimplicialComplex, build_complex, complex_document
from holostab.flow import run_stability
from holostab.weights import WeightProfile

logger = logging.getLogger(__name__)

GHOST = -1
"""Vertex index standing for the point at infinity closing every hull edge."""
COLLINEAR_RTOL = 1e-12
MAX_RESAMPLES = 100
MAX_REMOVAL_TRIES = 100


def _circumcircle(coords: np.ndarray, triangle: Tuple[int, int, int]) -> Tuple[np.ndarray, float]:
    a, b, c = coords[list(triangle)]
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    spread = max(np.ptp(coords[list(triangle)], axis=0).max(), 1e-300)
    if abs(d) <= COLLINEAR_RTOL * spread**2:
        raise DegenerateConfiguration(triangle)
    sa, sb, sc = a @ a, b @ b, c @ c
    center = np.array(
        [
            (sa * (b[1] - c[1]) + sb * (c[1] - a[1]) + sc * (a[1] - b[1])) / d,
            (sa * (c[0] - b[0]) + sb * (a[0] - c[0]) + sc * (b[0] - a[0])) / d,
        ]
    )
    return center, float((a - center) @ (a - center))


def _orient(coords: np.ndarray, a: int, b: int, point: np.ndarray) -> float:
    """Twice the signed area of (a, b, point); positive when point is left of a -> b."""
    ab, ap = coords[b] - coords[a], point - coords[a]
    return float(ab[0] * ap[1] - ab[1] * ap[0])


def _in_conflict(coords, triangle, circle, point) -> bool:
    a, b, c = triangle
    if c != GHOST:
        center, radius2 = circle
        return (point - center) @ (point - center) < radius2
    # a ghost triangle's circumcircle is the open half-plane left of the hull edge a -> b,
    # together with the open edge itself
    side = _orient(coords, a, b, point)
    if side != 0:
        return side > 0
    return (point - coords[a]) @ (point - coords[b]) < 0


def delaunay_triangles(points) -> List[Tuple[int, int, int]]:
    """
    Delaunay triangulation by incremental Bowyer-Watson insertion.

    The outside of the convex hull is covered by ghost triangles, one per hull edge,
    instead of a finite super triangle, so hull triangles with large circumcircles are
    kept.

    Returns:
        list: Sorted index triples.

    Raises:
        DegenerateConfiguration: All points are collinear, or three points involved in a
            triangle are.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 3:
        return []
    span = max(float(np.ptp(pts, axis=0).max()), 1e-300)
    third = next(
        (k for k in range(2, n) if abs(_orient(pts, 0, 1, pts[k])) > COLLINEAR_RTOL * span**2),
        None,
    )
    if third is None:
        raise DegenerateConfiguration((0, 1, 2))

    a, b = (0, 1) if _orient(pts, 0, 1, pts[third]) > 0 else (1, 0)
    first = (a, b, third)
    triangulation: Dict[Tuple[int, int, int], Optional[Tuple[np.ndarray, float]]] = {
        first: _circumcircle(pts, first),
        (b, a, GHOST): None,
        (third, b, GHOST): None,
        (a, third, GHOST): None,
    }
    for p in range(2, n):
        if p == third:
            continue
        point = pts[p]
        bad = [
            tri for tri, circle in triangulation.items() if _in_conflict(pts, tri, circle, point)
        ]
        if not bad:
            logger.warning("Point %d coincides with a vertex and is left out", p)
            continue
        # triangles are counterclockwise, so the cavity boundary is made of the directed
        # edges whose reverse is not used by another bad triangle
        directed = {(tri[i], tri[(i + 1) % 3]) for tri in bad for i in range(3)}
        for tri in bad:
            del triangulation[tri]
        for i, j in directed:
            if (j, i) in directed:
                continue
            if i == GHOST:
                triangulation[(j, p, GHOST)] = None
            elif j == GHOST:
                triangulation[(p, i, GHOST)] = None
            else:
                triangulation[(i, j, p)] = _circumcircle(pts, (i, j, p))

    return sorted(tuple(sorted(tri)) for tri in triangulation if GHOST not in tri)


def delaunay_edges(points) -> List[Tuple[int, int]]:
    """Edges of the Delaunay triangulation, sorted."""
    edges = set()
    for i, j, k in delaunay_triangles(points):
        edges.update(((i, j), (i, k), (j, k)))
    return sorted(edges)


def target_edge_count(N: int, nu: float) -> int:
    """round(nu * N (N - 1) / 2), halves rounded up."""
    return int(np.floor(nu * N * (N - 1) / 2 + 0.5))


def adjust_edge_count(
    edges: Sequence[Tuple[int, int]], n: int, target: int, rng: np.random.Generator
) -> List[Tuple[int, int]]:
    """
    Remove or add random edges until exactly ``target`` remain.

    Removals pick uniformly among edges whose removal keeps their endpoints connected;
    after MAX_REMOVAL_TRIES failed picks a disconnecting edge is removed with a warning.
    Additions pick uniformly among the missing pairs.
    """
    if not 0 <= target <= n * (n - 1) // 2:
        raise ValueError(f"cannot place {target} edges on {n} vertices")
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(tuple(sorted(edge)) for edge in edges)

    while graph.number_of_edges() > target:
        current = sorted(tuple(sorted(edge)) for edge in graph.edges)
        for _ in range(MAX_REMOVAL_TRIES):
            i, j = current[rng.integers(len(current))]
            graph.remove_edge(i, j)
            if nx.has_path(graph, i, j):
                break
            graph.add_edge(i, j)
        else:
            i, j = current[rng.integers(len(current))]
            graph.remove_edge(i, j)
            logger.warning("Removing edge (%d, %d) disconnects the benchmark graph", i, j)

    missing = target - graph.number_of_edges()
    if missing > 0:
        absent = sorted(tuple(sorted(edge)) for edge in nx.non_edges(graph))
        for pos in rng.choice(len(absent), size=missing, replace=False):
            graph.add_edge(*absent[pos])

    return sorted(tuple(sorted(edge)) for edge in graph.edges)


def instance_rng(spec: BenchSpec, repeat: int) -> np.random.Generator:
    """Counter-based generator of one benchmark instance."""
    entropy = [spec.seed, spec.N, int(round(spec.nu * 1000)), repeat]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


# pylint: disable=too-few-public-methods
class BenchInstance:
    """
    One generated benchmark complex.

    Attributes:
        spec (BenchSpec): The cell it belongs to.
        repeat (int): Its index within the cell.
        points (np.ndarray): N x 2 sampled coordinates.
        complex (SimplicialComplex): Clique complex of the adjusted graph.
        profile (WeightProfile): Uniform random edge weights, unit triangle weights.
        resamples (int): Degenerate point sets discarded before this one.
    """

    __slots__ = ("spec", "repeat", "points", "complex", "profile", "resamples")

    # pylint: disable=too-many-arguments
    def __init__(self, spec, repeat, points, complex_, profile, resamples):
        self.spec = spec
        self.repeat = repeat
        self.points = points
        self.complex: SimplicialComplex = complex_
        self.profile: WeightProfile = profile
        self.resamples = resamples


def generate(spec: BenchSpec, repeat: int = 0) -> BenchInstance:
    """
    Build one benchmark instance, deterministic in (seed, N, nu, repeat).

    Raises:
        DegenerateConfiguration: MAX_RESAMPLES point sets in a row were degenerate.
    """
    rng = instance_rng(spec, repeat)
    resamples = 0
    while True:
        points = rng.random((spec.N, 2))
        try:
            edges = delaunay_edges(points)
            break
        except DegenerateConfiguration:
            resamples += 1
            if resamples >= MAX_RESAMPLES:
                raise
            logger.debug("Degenerate point set, resampling (%d)", resamples)

    edges = adjust_edge_count(edges, spec.N, target_edge_count(spec.N, spec.nu), rng)
    complex_ = build_complex(range(spec.N), edges)
    w1 = rng.uniform(spec.weight_low, spec.weight_high, size=complex_.m)
    return BenchInstance(spec, repeat, points, complex_, WeightProfile(complex_, w1), resamples)


def solve_instance(
    spec: BenchSpec,
    repeat: int,
    cfg: Optional[FlowConfig] = None,
    solver: Optional[SolverConfig] = None,
) -> Tuple[BenchRecord, Optional[dict]]:
    """Generate and solve one instance; failures are recorded in the returned row."""
    solver = (solver or SolverConfig()).model_copy(update={"precond": spec.precond})
    row = dict(
        N=spec.N,
        nu=spec.nu,
        seed=spec.seed,
        repeat=repeat,
        precond=spec.precond.value,
    )
    try:
        instance = generate(spec, repeat)
    except DegenerateConfiguration as exc:
        logger.warning("Instance %s/%d could not be generated: %s", spec, repeat, exc)
        return (
            BenchRecord(
                m=0, triangles=0, runtime=0.0, eps_star=None, eliminated=0, status="error",
                resamples=MAX_RESAMPLES, **row,
            ),
            None,
        )

    c = instance.complex
    document = complex_document(c, instance.profile.w1)
    started = time.perf_counter()
    try:
        result = run_stability(c, instance.profile, cfg, solver)
        status = "ok"
    except NotConverged as exc:
        result = exc.result
        status = "not_converged"
    except HolostabError as exc:
        logger.warning("Instance N=%d nu=%g repeat=%d failed: %s", spec.N, spec.nu, repeat, exc)
        result = None
        status = "error"
    runtime = time.perf_counter() - started

    record = BenchRecord(
        m=c.m,
        triangles=c.n_triangles,
        runtime=runtime,
        eps_star=result.eps_star if result is not None else None,
        eliminated=len(result.eliminated_edges) if result is not None else 0,
        status=status,
        lsmr_iterations=result.solver_stats["lsmr_iterations"] if result is not None else 0,
        resamples=instance.resamples,
        **row,
    )
    return record, document


def _solve_job(job):
    return solve_instance(*job)


class BenchReport:
    """
    Rows of a benchmark sweep with their aggregates.

    Attributes:
        records (list[BenchRecord]): One row per instance, in job order.
        complexes (list[dict]): Complex documents aligned with ``records`` (None when
            generation failed).
    """

    __slots__ = ("records", "complexes")

    def __init__(
        self, records: List[BenchRecord], complexes: Optional[List[Optional[dict]]] = None
    ):
        self.records = list(records)
        self.complexes = list(complexes) if complexes is not None else [None] * len(self.records)

    def _solved(self) -> List[BenchRecord]:
        return [row for row in self.records if row.status == "ok"]

    def medians(self) -> Dict[Tuple[int, float], Dict[str, float]]:
        """Median eps* and runtime of the solved instances of every (N, nu) cell."""
        cells: Dict[Tuple[int, float], List[BenchRecord]] = {}
        for row in self._solved():
            cells.setdefault((row.N, row.nu), []).append(row)
        return {
            key: {
                "eps_star": float(np.median([row.eps_star for row in rows])),
                "runtime": float(np.median([row.runtime for row in rows])),
                "count": len(rows),
            }
            for key, rows in sorted(cells.items())
        }

    def runtime_slope(self) -> float:
        """Least-squares slope of log runtime against log m; NaN with fewer than two sizes."""
        rows = [row for row in self._solved() if row.runtime > 0 and row.m > 0]
        sizes = np.array([row.m for row in rows], dtype=float)
        if np.unique(sizes).size < 2:
            return float("nan")
        runtimes = np.array([row.runtime for row in rows])
        return float(np.polyfit(np.log(sizes), np.log(runtimes), 1)[0])

    def eps_star_trend(self) -> Dict[float, List[Tuple[int, float]]]:
        """Median eps* against N for every nu, in increasing N."""
        trend: Dict[float, List[Tuple[int, float]]] = {}
        for (N, nu), values in self.medians().items():
            trend.setdefault(nu, []).append((N, values["eps_star"]))
        return trend

    def eps_star_non_decreasing(self) -> Dict[float, bool]:
        """Whether the median eps* never drops from one size to the next, per nu."""
        return {
            nu: all(later >= earlier for (_, earlier), (_, later) in zip(points, points[1:]))
            for nu, points in self.eps_star_trend().items()
        }

    def summary(self) -> dict:
        return {
            "instances": len(self.records),
            "solved": len(self._solved()),
            "runtime_slope": self.runtime_slope(),
            "eps_star_non_decreasing": [
                {"nu": nu, "holds": holds} for nu, holds in self.eps_star_non_decreasing().items()
            ],
            "cells": [
                {"N": N, "nu": nu, **values} for (N, nu), values in self.medians().items()
            ],
        }


def run_benchmark(
    specs: Sequence[BenchSpec],
    cfg: Optional[FlowConfig] = None,
    solver: Optional[SolverConfig] = None,
    threads: Optional[int] = None,
) -> BenchReport:
    """
    Solve every repeat of every cell, in parallel processes when ``threads`` > 1.

    Args:
        specs: Benchmark cells.
        cfg: Flow settings shared by all instances.
        solver: Eigensolver settings; the preconditioner comes from each spec.
        threads: Worker processes; defaults to HOLOSTAB_THREADS.
    """
    threads = threads or Settings().threads
    jobs = [(spec, repeat, cfg, solver) for spec in specs for repeat in range(spec.repeats)]
    logger.info("Benchmark with %d instances on %d worker(s)", len(jobs), threads)
    if threads == 1 or len(jobs) <= 1:
        outcomes = [_solve_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_solve_job, jobs))
    return BenchReport([row for row, _ in outcomes], [doc for _, doc in outcomes])
