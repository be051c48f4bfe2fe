"""
Order-2 simplicial complexes: canonical construction, boundary matrices and Betti numbers.

Vertices are stored as contiguous 0-based indices in the lexicographic order of their
external labels; edges and triangles are sorted tuples of those indices, listed
lexicographically. All matrices built from a complex use that order.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.linalg
import scipy.sparse as sp

from holostab._exceptions import DuplicateSimplex, MissingFace, SelfLoop
from holostab._utils.files import atomic_write_text
from holostab._utils.json_serializer import RecordEncoder
from holostab._utils.types import Edge, Triangle
from holostab._validators.complex_file import ComplexFile

logger = logging.getLogger(__name__)

EXACT_RANK_LIMIT = 2000
"""Complexes with at most this many simplices get exact integer ranks."""

RANK_RTOL = 1e-10
"""Singular values below RANK_RTOL * largest singular value count as zero."""

_INT64_SAFE = 2**62


def _sort_labels(labels: Sequence[Hashable]) -> List[Hashable]:
    try:
        return sorted(labels)
    except TypeError:
        return sorted(labels, key=lambda label: (type(label).__name__, label))


class BoundaryMatrix:
    """Signed boundary operator of order 1 (vertices x edges) or 2 (edges x triangles)."""

    __slots__ = ("order", "matrix")

    def __init__(self, order: int, matrix: sp.csr_matrix):
        self.order = order
        self.matrix = matrix

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


class SimplicialComplex:
    """
    A validated, canonically ordered 2-dimensional simplicial complex.

    Use :func:`build_complex` to construct one; the constructor trusts its input.
    Instances are immutable; derived matrices are cached on first use.

    Attributes:
        labels (list): External vertex labels, position = internal index.
        edges (list[tuple[int, int]]): Edges in lexicographic order.
        triangles (list[tuple[int, int, int]]): Triangles in lexicographic order.
        edge_index (dict): Edge tuple to position.
        triangle_index (dict): Triangle tuple to position.
    """

    __slots__ = ("labels", "edges", "triangles", "edge_index", "triangle_index", "_cache")

    def __init__(self, labels: List[Hashable], edges: List[Edge], triangles: List[Triangle]):
        self.labels = list(labels)
        self.edges = list(edges)
        self.triangles = list(triangles)
        self.edge_index: Dict[Edge, int] = {edge: pos for pos, edge in enumerate(self.edges)}
        self.triangle_index: Dict[Triangle, int] = {
            tri: pos for pos, tri in enumerate(self.triangles)
        }
        self._cache = {}

    def __repr__(self):
        return (
            f"SimplicialComplex(n={self.n}, m={self.m}, triangles={self.n_triangles})"
        )

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def vertices(self) -> List[Hashable]:
        return list(self.labels)

    def vertex_index(self, label: Hashable) -> int:
        """Internal index of an external vertex label."""
        if "label_index" not in self._cache:
            self._cache["label_index"] = {lab: pos for pos, lab in enumerate(self.labels)}
        return self._cache["label_index"][label]

    def edge_id(self, a: Hashable, b: Hashable) -> int:
        """Position of the edge joining two labelled vertices."""
        i, j = sorted((self.vertex_index(a), self.vertex_index(b)))
        return self.edge_index[(i, j)]

    def edge_labels(self, position: int) -> Tuple[Hashable, Hashable]:
        i, j = self.edges[position]
        return self.labels[i], self.labels[j]

    def triangle_labels(self, position: int) -> Tuple[Hashable, Hashable, Hashable]:
        return tuple(self.labels[v] for v in self.triangles[position])

    @property
    def edge_array(self) -> np.ndarray:
        """(m, 2) array of edge endpoints."""
        if "edge_array" not in self._cache:
            self._cache["edge_array"] = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        return self._cache["edge_array"]

    @property
    def triangle_edges(self) -> np.ndarray:
        """(t, 3) array with the positions of edges (i,j), (i,k), (j,k) of each triangle."""
        if "triangle_edges" not in self._cache:
            index = self.edge_index
            rows = [
                (index[(i, j)], index[(i, k)], index[(j, k)]) for i, j, k in self.triangles
            ]
            self._cache["triangle_edges"] = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return self._cache["triangle_edges"]

    @property
    def b1(self) -> sp.csr_matrix:
        """Vertex-edge boundary matrix: -1 at the tail, +1 at the head."""
        if "b1" not in self._cache:
            ends = self.edge_array
            cols = np.arange(self.m)
            matrix = sp.coo_matrix(
                (
                    np.concatenate([-np.ones(self.m), np.ones(self.m)]),
                    (np.concatenate([ends[:, 0], ends[:, 1]]), np.concatenate([cols, cols])),
                ),
                shape=(self.n, self.m),
            )
            self._cache["b1"] = matrix.tocsr()
        return self._cache["b1"]

    @property
    def b2(self) -> sp.csr_matrix:
        """Edge-triangle boundary matrix: +1 at (j,k), -1 at (i,k), +1 at (i,j)."""
        if "b2" not in self._cache:
            faces = self.triangle_edges
            count = self.n_triangles
            cols = np.arange(count)
            matrix = sp.coo_matrix(
                (
                    np.concatenate([np.ones(count), -np.ones(count), np.ones(count)]),
                    (
                        np.concatenate([faces[:, 2], faces[:, 1], faces[:, 0]]),
                        np.concatenate([cols, cols, cols]),
                    ),
                ),
                shape=(self.m, count),
            )
            self._cache["b2"] = matrix.tocsr()
        return self._cache["b2"]

    @property
    def abs_b1(self) -> sp.csr_matrix:
        """Unsigned incidence pattern of B1."""
        if "abs_b1" not in self._cache:
            self._cache["abs_b1"] = abs(self.b1).tocsr()
        return self._cache["abs_b1"]

    def graph(self, active_edges: Optional[np.ndarray] = None) -> nx.Graph:
        """The 1-skeleton on internal indices, optionally restricted to a boolean edge mask."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        if active_edges is None:
            graph.add_edges_from(self.edges)
        else:
            graph.add_edges_from(
                edge for edge, keep in zip(self.edges, active_edges) if keep
            )
        return graph

    def reduced(self, removed_edges: Iterable[int]) -> "SimplicialComplex":
        """The complex without the given edges and every triangle containing one of them."""
        removed = set(int(e) for e in removed_edges)
        if not removed:
            return self
        edges = [edge for pos, edge in enumerate(self.edges) if pos not in removed]
        faces = self.triangle_edges
        triangles = [
            tri
            for tri, tri_faces in zip(self.triangles, faces)
            if not removed.intersection(tri_faces.tolist())
        ]
        return SimplicialComplex(self.labels, edges, triangles)


def _clique_triangles(n: int, edges: Sequence[Edge]) -> List[Triangle]:
    higher = [set() for _ in range(n)]
    for i, j in edges:
        higher[i].add(j)
    triangles = []
    for i, j in edges:
        for k in sorted(higher[i] & higher[j]):
            triangles.append((i, j, k))
    return sorted(triangles)


def build_complex(
    vertices: Sequence[Hashable],
    edges: Iterable[Sequence[Hashable]],
    triangles: Optional[Iterable[Sequence[Hashable]]] = None,
) -> SimplicialComplex:
    """
    Build a canonically ordered complex from labelled simplices.

    Args:
        vertices: Distinct vertex labels.
        edges: Label pairs.
        triangles: Label triples; when omitted every 3-clique of the edge set is filled.

    Returns:
        SimplicialComplex: The validated complex.

    Raises:
        DuplicateSimplex: A vertex, edge or triangle is listed twice.
        SelfLoop: A simplex repeats a vertex.
        MissingFace: A simplex references a vertex or edge that is not in the complex.
    """
    labels = list(vertices)
    seen = set()
    for label in labels:
        if label in seen:
            raise DuplicateSimplex((label,))
        seen.add(label)
    labels = _sort_labels(labels)
    index = {label: pos for pos, label in enumerate(labels)}

    edge_set = set()
    for raw in edges:
        raw = tuple(raw)
        if raw[0] == raw[1]:
            raise SelfLoop(raw)
        for label in raw:
            if label not in index:
                raise MissingFace(raw, (label,))
        key = tuple(sorted((index[raw[0]], index[raw[1]])))
        if key in edge_set:
            raise DuplicateSimplex(raw)
        edge_set.add(key)
    edge_list = sorted(edge_set)

    if triangles is None:
        triangle_list = _clique_triangles(len(labels), edge_list)
    else:
        triangle_set = set()
        for raw in triangles:
            raw = tuple(raw)
            if len(set(raw)) < 3:
                raise SelfLoop(raw)
            for label in raw:
                if label not in index:
                    raise MissingFace(raw, (label,))
            i, j, k = sorted(index[label] for label in raw)
            if (i, j, k) in triangle_set:
                raise DuplicateSimplex(raw)
            for face in ((i, j), (i, k), (j, k)):
                if face not in edge_set:
                    raise MissingFace(raw, (labels[face[0]], labels[face[1]]))
            triangle_set.add((i, j, k))
        triangle_list = sorted(triangle_set)

    complex_ = SimplicialComplex(labels, edge_list, triangle_list)
    logger.debug("Built %r", complex_)
    return complex_


def boundary_matrix(c: SimplicialComplex, k: int) -> BoundaryMatrix:
    """Signed boundary matrix of order ``k`` (1 or 2) in lexicographic order."""
    if k == 1:
        return BoundaryMatrix(1, c.b1)
    if k == 2:
        return BoundaryMatrix(2, c.b2)
    raise ValueError(f"Only boundary orders 1 and 2 exist for a 2-complex, got {k}")


def _exact_rank(matrix: np.ndarray) -> int:
    """Rank by fraction-free (Bareiss) elimination on an integer matrix."""
    work = np.array(matrix, dtype=np.int64)
    rows, cols = work.shape
    previous = 1
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        candidates = np.flatnonzero(work[rank:, col])
        if candidates.size == 0:
            continue
        pivot_row = rank + int(candidates[0])
        if pivot_row != rank:
            work[[rank, pivot_row]] = work[[pivot_row, rank]]
        if work.dtype != object:
            largest = int(np.abs(work[rank:, col:]).max())
            if 2 * largest * largest >= _INT64_SAFE:
                work = work.astype(object)
        pivot = int(work[rank, col])
        lower = work[rank + 1 :, col + 1 :]
        work[rank + 1 :, col + 1 :] = (
            pivot * lower - np.outer(work[rank + 1 :, col], work[rank, col + 1 :])
        ) // previous
        work[rank + 1 :, col] = 0
        previous = pivot
        rank += 1
    return rank


def _numeric_rank(matrix: np.ndarray) -> int:
    values = np.linalg.svd(matrix, compute_uv=False)
    if values.size == 0 or values[0] == 0:
        return 0
    return int(np.count_nonzero(values > RANK_RTOL * values[0]))


def matrix_rank(matrix: Union[sp.spmatrix, np.ndarray], exact: bool = True) -> int:
    """Rank of an integer boundary matrix, exact or by counting singular values."""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    if dense.size == 0:
        return 0
    if exact:
        return _exact_rank(np.rint(dense).astype(np.int64))
    return _numeric_rank(dense.astype(float))


def _use_exact(c: SimplicialComplex) -> bool:
    return c.n + c.m + c.n_triangles <= EXACT_RANK_LIMIT


def betti_numbers(c: SimplicialComplex) -> Tuple[int, int]:
    """(beta0, beta1); beta0 counts components, beta1 = m - rank B1 - rank B2."""
    if c.n == 0:
        return 0, 0
    beta0 = nx.number_connected_components(c.graph())
    exact = _use_exact(c)
    beta1 = c.m - matrix_rank(c.b1, exact) - matrix_rank(c.b2, exact)
    return beta0, beta1


def up_kernel_dim(c: SimplicialComplex, active_triangles: Optional[np.ndarray] = None) -> int:
    """dim ker B2^T restricted to the active triangles, i.e. m - rank B2[:, active]."""
    b2 = c.b2 if active_triangles is None else c.b2[:, np.flatnonzero(active_triangles)]
    return c.m - matrix_rank(b2, _use_exact(c))


def connected_components(
    c: SimplicialComplex, active_edges: Optional[np.ndarray] = None
) -> np.ndarray:
    """Component label per vertex, numbered by smallest member, ignoring inactive edges."""
    labels = np.empty(c.n, dtype=np.int64)
    components = sorted(
        (sorted(members) for members in nx.connected_components(c.graph(active_edges))),
        key=lambda members: members[0],
    )
    for number, members in enumerate(components):
        labels[members] = number
    return labels


def harmonic_basis(c: SimplicialComplex) -> np.ndarray:
    """Orthonormal basis (m x beta1) of ker B1 intersected with ker B2^T."""
    if c.m == 0:
        return np.zeros((0, 0))
    stacked = np.vstack([c.b1.toarray(), c.b2.toarray().T])
    return scipy.linalg.null_space(stacked, rcond=RANK_RTOL)


def load_complex(
    path: Union[str, Path],
) -> Tuple[SimplicialComplex, np.ndarray, Optional[np.ndarray]]:
    """
    Read a complex file.

    Returns:
        tuple: The complex, edge weights in canonical edge order (ones when absent) and
        triangle weights in canonical triangle order (None when absent).

    Raises:
        json.JSONDecodeError: The file is not JSON.
        pydantic.ValidationError: The document does not match the complex file schema.
        ComplexError: The simplices do not form a valid complex.
    """
    with open(path, "r", encoding="utf-8") as handle:
        document = ComplexFile.model_validate(json.load(handle))

    complex_ = build_complex(document.vertices, document.edges, document.triangles)

    w1 = np.ones(complex_.m)
    if document.edge_weights is not None:
        for raw, weight in zip(document.edges, document.edge_weights):
            w1[complex_.edge_id(*raw)] = weight

    w2 = None
    if document.triangle_weights is not None:
        w2 = np.ones(complex_.n_triangles)
        for raw, weight in zip(document.triangles, document.triangle_weights):
            key = tuple(sorted(complex_.vertex_index(label) for label in raw))
            w2[complex_.triangle_index[key]] = weight

    return complex_, w1, w2


def complex_document(
    c: SimplicialComplex, w1: Optional[np.ndarray] = None, w2: Optional[np.ndarray] = None
) -> dict:
    """JSON-ready dictionary in the complex file format."""
    document = {
        "vertices": list(c.labels),
        "edges": [list(c.edge_labels(pos)) for pos in range(c.m)],
        "triangles": [list(c.triangle_labels(pos)) for pos in range(c.n_triangles)],
    }
    if w1 is not None:
        document["edge_weights"] = [float(w) for w in w1]
    if w2 is not None:
        document["triangle_weights"] = [float(w) for w in w2]
    return document


def save_complex(
    path: Union[str, Path],
    c: SimplicialComplex,
    w1: Optional[np.ndarray] = None,
    w2: Optional[np.ndarray] = None,
) -> Path:
    """Write a complex file atomically."""
    document = complex_document(c, w1, w2)
    return atomic_write_text(path, json.dumps(document, cls=RecordEncoder, indent=2))
