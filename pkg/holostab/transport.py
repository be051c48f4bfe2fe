"""
Zone complexes from transportation networks in TNTP format.

A road network is lifted to its traffic zones: zone-to-zone travel times come from
Dijkstra on the road graph, distant pairs are filtered out by a quantile of the time
distribution, the longest side of every degenerate triangle (t_long = t_a + t_b) is
dropped, and the remaining pairs carry logarithmically scaled travel demand as weights.
"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from holostab._exceptions import (
    DisconnectedZones,
    MalformedHeader,
    MalformedRecord,
    MissingColumn,
    UnknownZone,
)
from holostab._records.record import Record
from holostab._records.results import StabilityResult
from holostab._settings import Settings
from holostab._validators.configs import FlowConfig, SolverConfig
from holostab.complex import SimplicialComplex, build_complex, complex_document, harmonic_basis
from holostab.flow import run_stability
from holostab.weights import WeightProfile

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("init_node", "term_node", "free_flow_time")
DEGENERATE_RTOL = 1e-9
DEMAND_SCALE = 0.95
DEFAULT_QUANTILES = (0.8, 0.85, 0.9, 0.95)

_METADATA = re.compile(r"<([^>]+)>\s*(.*)")
_ORIGIN = re.compile(r"^\s*Origin\s+(\d+)", re.IGNORECASE)
_TRIP = re.compile(r"(\d+)\s*:\s*([0-9.eE+-]+)")

Pair = Tuple[int, int]


# pylint: disable=too-few-public-methods
class RoadNetwork:
    """
    Road graph with its zones and trip table.

    Attributes:
        num_zones (int): Zones are the nodes 1..num_zones.
        first_thru_node (int): Nodes below this id (other than a path's origin) are
            not traversed.
        links (dict): Free-flow time per directed (init, term) pair, the fastest one
            when a pair is listed twice.
        demand (dict): Trips per directed (origin, destination) zone pair.
        metadata (dict): Header values by upper-case key.
    """

    __slots__ = ("num_zones", "first_thru_node", "links", "demand", "metadata")

    # pylint: disable=too-many-arguments
    def __init__(self, num_zones, first_thru_node, links, demand=None, metadata=None):
        self.num_zones = int(num_zones)
        self.first_thru_node = int(first_thru_node)
        self.links: Dict[Pair, float] = dict(links)
        self.demand: Dict[Pair, float] = dict(demand or {})
        self.metadata = dict(metadata or {})

    @property
    def zones(self) -> List[int]:
        return list(range(1, self.num_zones + 1))

    @property
    def nodes(self) -> List[int]:
        found = set(self.zones)
        for i, j in self.links:
            found.update((i, j))
        return sorted(found)

    def symmetric_demand(self, i: int, j: int) -> float:
        """d(i, j) + d(j, i)."""
        return self.demand.get((i, j), 0.0) + self.demand.get((j, i), 0.0)

    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        graph.add_weighted_edges_from(
            ((i, j, time) for (i, j), time in self.links.items()), weight="time"
        )
        return graph


def _split_metadata(path: Path, lines: List[str]) -> Tuple[Dict[str, str], int]:
    metadata = {}
    for number, line in enumerate(lines):
        stripped = line.strip()
        if not stripped or stripped.startswith("~"):
            continue
        match = _METADATA.match(stripped)
        if match is None:
            raise MalformedHeader(path, f"line {number + 1} is not a <KEY> value pair")
        key = match.group(1).strip().upper()
        if key == "END OF METADATA":
            return metadata, number + 1
        metadata[key] = match.group(2).strip()
    raise MalformedHeader(path, "missing <END OF METADATA>")


def _int_field(path: Path, metadata: Dict[str, str], key: str, default=None) -> int:
    raw = metadata.get(key)
    if raw is None:
        if default is None:
            raise MalformedHeader(path, f"missing <{key}>")
        return default
    try:
        return int(float(raw))
    except ValueError as exc:
        raise MalformedHeader(path, f"<{key}> is not a number: {raw!r}") from exc


def _column_names(line: str) -> List[str]:
    body = line.strip().lstrip("~").replace(";", "")
    parts = body.split("\t") if "\t" in body else body.split()
    return [re.sub(r"\s+", "_", part.strip().lower()) for part in parts if part.strip()]


def _parse_links(path: Path, lines: List[str], start: int) -> Dict[Pair, float]:
    columns = None
    links: Dict[Pair, float] = {}
    for number in range(start, len(lines)):
        stripped = lines[number].strip()
        if not stripped:
            continue
        if stripped.startswith("~"):
            if columns is None:
                columns = _column_names(stripped)
                for name in REQUIRED_COLUMNS:
                    if name not in columns:
                        raise MissingColumn(path, name)
                positions = [columns.index(name) for name in REQUIRED_COLUMNS]
            continue
        if columns is None:
            raise MalformedHeader(path, "link table has no '~' column header")
        values = stripped.rstrip(";").split()
        try:
            init, term, time = (values[pos] for pos in positions)
            init, term, time = int(float(init)), int(float(term)), float(time)
        except (IndexError, ValueError) as exc:
            raise MalformedRecord(path, number + 1, lines[number]) from exc
        if time < 0:
            raise MalformedRecord(path, number + 1, lines[number])
        links[(init, term)] = min(time, links.get((init, term), np.inf))
    if columns is None:
        raise MalformedHeader(path, "link table has no '~' column header")
    return links


def _parse_trips(path: Path, num_zones: int) -> Dict[Pair, float]:
    lines = path.read_text(encoding="utf-8").splitlines()
    _, start = _split_metadata(path, lines)
    demand: Dict[Pair, float] = {}
    origin = None
    for number in range(start, len(lines)):
        line = lines[number]
        stripped = line.strip()
        if not stripped or stripped.startswith("~"):
            continue
        match = _ORIGIN.match(line)
        if match is not None:
            origin = int(match.group(1))
            if not 1 <= origin <= num_zones:
                raise UnknownZone(origin, num_zones)
            continue
        if origin is None:
            raise MalformedRecord(path, number + 1, line)
        entries = _TRIP.findall(stripped)
        if not entries:
            raise MalformedRecord(path, number + 1, line)
        for destination, value in entries:
            destination = int(destination)
            if not 1 <= destination <= num_zones:
                raise UnknownZone(destination, num_zones)
            try:
                trips = float(value)
            except ValueError as exc:
                raise MalformedRecord(path, number + 1, line) from exc
            if trips < 0:
                raise MalformedRecord(path, number + 1, line)
            if trips > 0:
                demand[(origin, destination)] = demand.get((origin, destination), 0.0) + trips
    return demand


def parse_tntp(
    net_file: Union[str, Path], trips_file: Optional[Union[str, Path]] = None
) -> RoadNetwork:
    """
    Read a TNTP network file and, optionally, its trip table.

    Raises:
        MalformedHeader: The metadata block or the column header is missing or invalid.
        MissingColumn: A required link column is absent.
        MalformedRecord: A link or trip line cannot be parsed.
        UnknownZone: A trip refers to a zone outside 1..NUMBER OF ZONES.
    """
    net_file = Path(net_file)
    lines = net_file.read_text(encoding="utf-8").splitlines()
    metadata, start = _split_metadata(net_file, lines)
    num_zones = _int_field(net_file, metadata, "NUMBER OF ZONES")
    first_thru = _int_field(net_file, metadata, "FIRST THRU NODE", default=1)
    links = _parse_links(net_file, lines, start)
    demand = _parse_trips(Path(trips_file), num_zones) if trips_file is not None else {}
    logger.info(
        "Parsed %s: %d zones, %d links, %d trip pairs",
        net_file.name,
        num_zones,
        len(links),
        len(demand),
    )
    return RoadNetwork(num_zones, first_thru, links, demand, metadata)


def _shortest_times(rn: RoadNetwork, graph: nx.DiGraph, source: int) -> Dict[int, float]:
    def time(u, v, data):
        del v
        if u != source and u < rn.first_thru_node:
            return None
        return data["time"]

    return nx.single_source_dijkstra_path_length(graph, source, weight=time)


def zone_times(rn: RoadNetwork, threads: Optional[int] = None) -> Dict[Pair, float]:
    """
    Symmetrized shortest travel time of every zone pair i < j.

    Raises:
        DisconnectedZones: Some zone cannot reach another.
    """
    threads = threads or Settings().threads
    graph = rn.graph()
    zones = rn.zones
    with ThreadPoolExecutor(max_workers=threads) as pool:
        reach = dict(zip(zones, pool.map(lambda z: _shortest_times(rn, graph, z), zones)))

    times = {}
    for i, j in combinations(zones, 2):
        if j not in reach[i]:
            raise DisconnectedZones(i, j)
        if i not in reach[j]:
            raise DisconnectedZones(j, i)
        times[(i, j)] = 0.5 * (reach[i][j] + reach[j][i])
    return times


def degenerate_edges(times: Dict[Pair, float]) -> set:
    """Longest sides of triangles whose length equals the sum of the two others."""
    graph = nx.Graph()
    graph.add_edges_from(times)
    flagged = set()
    for clique in nx.enumerate_all_cliques(graph):
        if len(clique) < 3:
            continue
        if len(clique) > 3:
            break
        sides = sorted(
            (times[tuple(sorted(pair))], tuple(sorted(pair))) for pair in combinations(clique, 2)
        )
        (t_a, _), (t_b, _), (t_long, longest) = sides
        if abs(t_long - (t_a + t_b)) <= DEGENERATE_RTOL * t_long:
            flagged.add(longest)
    return flagged


class ZoneComplex:
    """
    Weighted clique complex over the zones of a road network.

    Attributes:
        complex (SimplicialComplex): Zones as vertices, retained pairs as edges.
        profile (WeightProfile): log10(d / (0.95 min d)) edge weights.
        times (np.ndarray): Symmetrized travel time per edge.
        demands (np.ndarray): Symmetric demand per edge.
        quantile (float): Filter quantile used.
        threshold (float): Time above which pairs were filtered out.
    """

    __slots__ = ("complex", "profile", "times", "demands", "quantile", "threshold")

    # pylint: disable=too-many-arguments
    def __init__(self, complex_, profile, times, demands, quantile, threshold):
        self.complex: SimplicialComplex = complex_
        self.profile: WeightProfile = profile
        self.times = times
        self.demands = demands
        self.quantile = quantile
        self.threshold = threshold

    def document(self) -> dict:
        """Complex file contents for this complex."""
        return complex_document(self.complex, self.profile.w1)

    def provenance(self) -> dict:
        """Sidecar with the travel time and raw demand behind every edge."""
        return {
            "quantile": self.quantile,
            "threshold": self.threshold,
            "edges": [
                {
                    "edge": list(self.complex.edge_labels(pos)),
                    "time": float(self.times[pos]),
                    "demand": float(self.demands[pos]),
                }
                for pos in range(self.complex.m)
            ],
        }


def build_zone_complex(
    rn: RoadNetwork, times: Dict[Pair, float], filter_quantile: float = 0.9
) -> ZoneComplex:
    """Filter zone pairs by time and demand and weight the survivors."""
    if not 0 < filter_quantile <= 1:
        raise ValueError("filter_quantile must lie in (0, 1]")
    threshold = float(np.quantile(list(times.values()), filter_quantile))
    kept = {pair: time for pair, time in times.items() if time <= threshold}
    for pair in degenerate_edges(kept):
        del kept[pair]
    edges = [pair for pair in sorted(kept) if rn.symmetric_demand(*pair) > 0]
    logger.info(
        "Zone graph: %d pairs, %d within %.4g, %d with demand",
        len(times),
        len(kept),
        threshold,
        len(edges),
    )

    complex_ = build_complex(rn.zones, edges)
    labels = [complex_.edge_labels(pos) for pos in range(complex_.m)]
    demands = np.array([rn.symmetric_demand(*pair) for pair in labels])
    edge_times = np.array([kept[pair] for pair in labels])
    if demands.size:
        w1 = np.log10(demands / (DEMAND_SCALE * demands.min()))
    else:
        w1 = np.zeros(0)
    return ZoneComplex(
        complex_, WeightProfile(complex_, w1), edge_times, demands, filter_quantile, threshold
    )


def lift_to_zones(
    rn: RoadNetwork, filter_quantile: float = 0.9, threads: Optional[int] = None
) -> ZoneComplex:
    """
    Lift a road network to its weighted zone complex.

    Raises:
        DisconnectedZones: Some zone pair has no path.
    """
    return build_zone_complex(rn, zone_times(rn, threads), filter_quantile)


def calibrate_quantile(
    rn: RoadNetwork,
    target_m: int,
    target_triangles: int,
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
    threads: Optional[int] = None,
) -> Tuple[float, ZoneComplex]:
    """Filter quantile whose complex best matches the target edge and triangle counts."""
    times = zone_times(rn, threads)
    best = None
    for quantile in quantiles:
        zc = build_zone_complex(rn, times, quantile)
        score = abs(zc.complex.m - target_m) + abs(zc.complex.n_triangles - target_triangles)
        logger.info(
            "quantile %.3g: m=%d triangles=%d", quantile, zc.complex.m, zc.complex.n_triangles
        )
        if best is None or score < best[0]:
            best = (score, quantile, zc)
    return best[1], best[2]


class TransportReport(Record):
    """
    Stability of a zone complex.

    Attributes:
        eps_star (float): Smallest perturbation norm creating a new hole.
        percentile (float): eps_star relative to the total edge weight.
        eliminated_edges (list): Zone pairs driven to zero weight.
        betti_before (int): Holes of the zone complex.
        betti_after (int): Holes after the elimination.
        created_from_zero (bool): Whether the zone complex had no hole at all.
        new_hole_support (list): Zone pairs carrying the harmonic representative of the
            created hole.
        result (StabilityResult): Full result of the flow.
    """

    __slots__ = (
        "eps_star",
        "percentile",
        "eliminated_edges",
        "betti_before",
        "betti_after",
        "created_from_zero",
        "new_hole_support",
        "result",
    )

    # pylint: disable=too-many-arguments
    def __init__(
        self,
        eps_star,
        percentile,
        eliminated_edges,
        betti_before,
        betti_after,
        created_from_zero,
        new_hole_support,
        result,
    ):
        self.eps_star = eps_star
        self.percentile = percentile
        self.eliminated_edges = eliminated_edges
        self.betti_before = betti_before
        self.betti_after = betti_after
        self.created_from_zero = created_from_zero
        self.new_hole_support = new_hole_support
        self.result: StabilityResult = result

    @property
    def _id_attrs(self):
        return (self.eps_star, tuple(map(tuple, self.eliminated_edges)))


def new_hole_support(c: SimplicialComplex, removed: Sequence[int], rtol: float = 1e-8) -> List:
    """
    Edges of the reduced complex carrying its harmonic flow that is not inherited from the
    original complex.
    """
    reduced = c.reduced(removed)
    created = harmonic_basis(reduced)
    if created.shape[1] == 0:
        return []
    original = harmonic_basis(c)
    removed = set(int(e) for e in removed)
    surviving = [pos for pos in range(c.m) if pos not in removed]
    if original.shape[1]:
        inherited = np.linalg.qr(original[surviving])[0]
        created = created - inherited @ (inherited.T @ created)
    vectors, values, _ = np.linalg.svd(created, full_matrices=False)
    if values[0] <= rtol:
        return []
    vector = vectors[:, 0]
    scale = np.abs(vector).max()
    return [
        list(reduced.edge_labels(pos))
        for pos in np.flatnonzero(np.abs(vector) > rtol * scale)
    ]


def stability_report(
    zc: ZoneComplex, cfg: Optional[FlowConfig] = None, solver: Optional[SolverConfig] = None
) -> TransportReport:
    """Run the stability flow on a zone complex and describe the created hole."""
    c = zc.complex
    result = run_stability(c, zc.profile, cfg, solver)
    removed = [c.edge_id(*edge) for edge in result.eliminated_edges]
    total = float(zc.profile.w1.sum())
    return TransportReport(
        eps_star=result.eps_star,
        percentile=result.eps_star / total if total > 0 else float("nan"),
        eliminated_edges=result.eliminated_edges,
        betti_before=result.betti_before,
        betti_after=result.betti_after,
        created_from_zero=result.betti_before == 0,
        new_hole_support=new_hole_support(c, removed),
        result=result,
    )
