"""
Normalized weighted boundary operators and Laplacians.

With square-root weight matrices Wk = Diag(wk^(1/2)) the normalized operators are
B1_bar = W0^-1 B1 W1 and B2_bar = W1^-1 B2 W2, and

    L0 = B1_bar B1_bar^T,   L1_down = B1_bar^T B1_bar,   L1_up = B2_bar B2_bar^T.

Edges of zero perturbed weight stay in the matrices; their rows of B2_bar are exactly
zero because every triangle containing them has zero weight.
"""

import logging
from itertools import product
from pathlib import Path
from typing import Union

import numpy as np
import scipy.io
import scipy.sparse as sp

from holostab._exceptions import NonPositiveVertexWeight
from holostab.complex import SimplicialComplex, connected_components, up_kernel_dim
from holostab.weights import PerturbedWeights

logger = logging.getLogger(__name__)

KERNEL_RTOL = 1e-10
"""Eigenvalues below KERNEL_RTOL * max(1, ||A||) are counted as zero."""


def _safe_inverse_sqrt(values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=float)
    positive = values > 0
    out[positive] = 1.0 / np.sqrt(values[positive])
    return out


class LaplacianBundle:
    """
    Normalized operators of one weight state.

    Attributes:
        complex (SimplicialComplex): The complex.
        weights (PerturbedWeights): The weight snapshot the matrices were built from.
        B1_bar (sp.csr_matrix): n x m normalized vertex-edge operator.
        B2_bar (sp.csr_matrix): m x t normalized edge-triangle operator.
        L0 (sp.csr_matrix): n x n vertex Laplacian.
        L1_up (sp.csr_matrix): m x m up-Laplacian.
        L1_down (sp.csr_matrix): m x m down-Laplacian.
    """

    __slots__ = ("complex", "weights", "B1_bar", "B2_bar", "L0", "L1_up", "L1_down")

    # pylint: disable=too-many-arguments
    def __init__(self, complex_, weights, B1_bar, B2_bar, L0, L1_up, L1_down):
        self.complex = complex_
        self.weights = weights
        self.B1_bar = B1_bar
        self.B2_bar = B2_bar
        self.L0 = L0
        self.L1_up = L1_up
        self.L1_down = L1_down

    @property
    def l1_full(self) -> sp.csr_matrix:
        """Hodge Laplacian L1 = L1_down + L1_up."""
        return (self.L1_down + self.L1_up).tocsr()

    @property
    def support(self) -> np.ndarray:
        """Edges with positive perturbed weight."""
        return self.weights.w1_tilde > 0

    def export_matrix_market(self, directory: Union[str, Path]) -> list:
        """Write every operator as a MatrixMarket coordinate file; returns the paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name in ("B1_bar", "B2_bar", "L0", "L1_up", "L1_down"):
            path = directory / f"{name}.mtx"
            scipy.io.mmwrite(str(path), sp.coo_matrix(getattr(self, name)))
            written.append(path)
        logger.info("Exported %d matrices to %s", len(written), directory)
        return written


def assemble(c: SimplicialComplex, pw: PerturbedWeights) -> LaplacianBundle:
    """
    Assemble the normalized operators for a weight state.

    Raises:
        NonPositiveVertexWeight: A vertex weight is not strictly positive.
    """
    bad = np.flatnonzero(~(pw.w0_tilde > 0))
    if bad.size:
        raise NonPositiveVertexWeight(int(bad[0]), float(pw.w0_tilde[bad[0]]))

    B1_bar = (
        sp.diags(1.0 / np.sqrt(pw.w0_tilde)) @ c.b1 @ sp.diags(np.sqrt(pw.w1_tilde))
    ).tocsr()
    B2_bar = (
        sp.diags(_safe_inverse_sqrt(pw.w1_tilde)) @ c.b2 @ sp.diags(np.sqrt(pw.w2_tilde))
    ).tocsr()
    B1_bar.eliminate_zeros()
    B2_bar.eliminate_zeros()

    return LaplacianBundle(
        c,
        pw,
        B1_bar,
        B2_bar,
        (B1_bar @ B1_bar.T).tocsr(),
        (B2_bar @ B2_bar.T).tocsr(),
        (B1_bar.T @ B1_bar).tocsr(),
    )


def kernel_count(matrix: Union[sp.spmatrix, np.ndarray]) -> int:
    """Number of eigenvalues of a symmetric PSD matrix below the kernel tolerance."""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    if dense.size == 0:
        return 0
    values = np.linalg.eigvalsh(dense)
    scale = max(1.0, float(np.abs(values).max()))
    return int(np.count_nonzero(values < KERNEL_RTOL * scale))


def betti_weighted(b: LaplacianBundle) -> int:
    """First Betti number read off the numerical kernel of the weighted Hodge Laplacian."""
    return kernel_count(b.l1_full)


def _positive_spectrum(matrix) -> np.ndarray:
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    if dense.size == 0:
        return np.zeros(0)
    values = np.linalg.eigvalsh(dense)
    scale = max(1.0, float(np.abs(values).max()))
    return values[values >= KERNEL_RTOL * scale]


def inheritance_residual(b: LaplacianBundle) -> float:
    """
    Largest relative mismatch between the positive spectra of L0 and L1_down, which
    coincide in exact arithmetic (both are nonzero squared singular values of B1_bar).
    """
    vertex = _positive_spectrum(b.L0)
    edge = _positive_spectrum(b.L1_down)
    if vertex.size != edge.size:
        return float("inf")
    if not vertex.size:
        return 0.0
    return float(np.max(np.abs(vertex - edge) / np.maximum(1.0, np.abs(vertex))))


def eigenvector_transport_residual(b: LaplacianBundle) -> float:
    """
    Largest defect of the map v -> B1_bar^T v / sqrt(lambda) from eigenvectors of L0 with
    lambda > 0 to unit eigenvectors of L1_down with the same eigenvalue.

    Each pair contributes | ||u|| - 1 | + ||L1_down u - lambda u|| / max(1, lambda).
    """
    dense = b.L0.toarray()
    if not dense.size:
        return 0.0
    values, vectors = np.linalg.eigh(dense)
    scale = max(1.0, float(np.abs(values).max()))
    positive = values >= KERNEL_RTOL * scale
    if not positive.any():
        return 0.0
    values, vectors = values[positive], vectors[:, positive]
    images = (b.B1_bar.T @ vectors) / np.sqrt(values)
    norms = np.abs(np.linalg.norm(images, axis=0) - 1.0)
    defects = np.linalg.norm(b.L1_down @ images - images * values, axis=0)
    return float(np.max(norms + defects / np.maximum(1.0, values)))


def structural_up_kernel_dim(c: SimplicialComplex, pw: PerturbedWeights) -> int:
    """Exact dim ker L1_up: m minus the rank of B2 on triangles of positive weight."""
    return up_kernel_dim(c, pw.w2_tilde > 0)


def vertex_kernel_basis(c: SimplicialComplex, pw: PerturbedWeights) -> np.ndarray:
    """Orthonormal basis of ker L0: sqrt(w0) restricted to each component of the support."""
    labels = connected_components(c, pw.w1_tilde > 0)
    count = int(labels.max()) + 1 if labels.size else 0
    basis = np.zeros((c.n, count))
    root = np.sqrt(pw.w0_tilde)
    for comp in range(count):
        members = labels == comp
        basis[members, comp] = root[members]
        basis[:, comp] /= np.linalg.norm(basis[:, comp])
    return basis


def cheeger_constant(c: SimplicialComplex, pw: PerturbedWeights) -> float:
    """
    Brute-force weighted Cheeger constant
    h = min_S w1(S, S^c) / min(w0(S), w0(S^c)) over proper vertex subsets.

    Intended as a test oracle; limited to 16 vertices.
    """
    n = c.n
    if n > 16:
        raise ValueError("cheeger_constant enumerates all bipartitions; use n <= 16")
    if n < 2:
        return 0.0
    # the last vertex is pinned outside S so each bipartition is visited once
    masks = np.array(list(product((False, True), repeat=n - 1)), dtype=bool)[1:]
    masks = np.hstack([masks, np.zeros((masks.shape[0], 1), dtype=bool)])
    ends = c.edge_array
    cut = (masks[:, ends[:, 0]] != masks[:, ends[:, 1]]).astype(float) @ pw.w1_tilde
    inside = masks.astype(float) @ pw.w0_tilde
    outside = pw.w0_tilde.sum() - inside
    return float(np.min(cut / np.minimum(inside, outside)))
