"""
Spectral points of the normalized Laplacians.

The flow needs the first nonzero eigenpair of a PSD matrix whose kernel dimension is
known in advance. Small matrices are diagonalized densely. Large ones use inverse
subspace iteration in which every application of the pseudoinverse is a least-squares
solve with LSMR: the minimum-norm solution never picks up a kernel component, so no
kernel eigenvector has to be computed first.

An incomplete Cholesky factor of the unperturbed matrix may be used as a constant right
preconditioner. Right preconditioning returns a least-squares solution that is no longer
of minimum norm, so the pseudoinverse is then applied as A LS(A, LS(A, b)).
"""

import logging
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import qr
from scipy.sparse.linalg import LinearOperator, aslinearoperator, lsmr, spsolve_triangular

from holostab._exceptions import BreakdownNegativePivot, KernelDimMismatch, NoConvergence
from holostab._records.record import Record
from holostab._utils.types import Precond, SolverMode
from holostab._validators.configs import SolverConfig
from holostab.laplacians import KERNEL_RTOL

logger = logging.getLogger(__name__)

SIMPLICITY_RTOL = 1e-9
"""Eigen-gaps below SIMPLICITY_RTOL * ||A|| flag a multiple eigenvalue."""

ICHOL_SHIFTS = (1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 1e-1)
"""Diagonal shifts tried by the incomplete Cholesky factorization, relative to mean(diag A)."""

LSMR_SLACK = 100.0
"""Allowance between LSMR's running residual estimates and the recomputed residuals."""

KERNEL_CHECK_VECTORS = 2
KERNEL_CHECK_LIMIT = 32
"""Undeflated kernels larger than this are trusted to the caller's count."""


class SpectralPoint(Record):
    """
    An eigenpair with its quality measures.

    Attributes:
        value (float): Eigenvalue, clipped at zero.
        vector (np.ndarray): Unit-norm eigenvector.
        residual (float): ||A v - value v||.
        multiplicity_flag (bool): The gap to a neighbouring eigenvalue is below the
            simplicity tolerance.
        iterations (int): Subspace iterations used (0 for dense solves).
    """

    __slots__ = ("value", "vector", "residual", "multiplicity_flag", "iterations")

    # pylint: disable=too-many-arguments
    def __init__(self, value, vector, residual=0.0, multiplicity_flag=False, iterations=0):
        self.value = max(float(value), 0.0)
        self.vector = vector
        self.residual = float(residual)
        self.multiplicity_flag = bool(multiplicity_flag)
        self.iterations = int(iterations)

    @property
    def _id_attrs(self):
        return (self.value,)

    @classmethod
    def zero(cls, vector: np.ndarray) -> "SpectralPoint":
        """A kernel vector reported as a (vanished) tracked eigenvalue."""
        norm = np.linalg.norm(vector)
        return cls(0.0, vector / norm if norm > 0 else vector)


class SolverStats(Record):
    """Running counters of one run, reported in result files and benchmark rows."""

    __slots__ = (
        "eigensolves",
        "dense_solves",
        "iterative_solves",
        "subspace_iterations",
        "lsmr_calls",
        "lsmr_iterations",
        "precond_builds",
    )

    def __init__(self):
        self.eigensolves = 0
        self.dense_solves = 0
        self.iterative_solves = 0
        self.subspace_iterations = 0
        self.lsmr_calls = 0
        self.lsmr_iterations = 0
        self.precond_builds = 0

    @property
    def _id_attrs(self):
        return tuple(getattr(self, slot) for slot in self.__slots__)


def _canonical_sign(vector: np.ndarray) -> np.ndarray:
    pivot = np.argmax(np.abs(vector))
    return -vector if vector[pivot] < 0 else vector


def ichol_factor(A, shift: Optional[float] = None) -> sp.csr_matrix:
    """
    Zero-fill incomplete Cholesky factor L of A + shift I, with L L^T ~ A on the pattern.

    The first shift is ``shift`` when given, 1e-8 * mean(diag A) otherwise. A non-positive
    pivot triggers a retry with the next larger shift of ``ICHOL_SHIFTS`` * mean(diag A),
    up to a tenth of the mean diagonal.

    Raises:
        BreakdownNegativePivot: Every shift tried produced a non-positive pivot.
    """
    A = sp.csc_matrix(A, dtype=float)
    dim = A.shape[0]
    mean_diag = float(A.diagonal().mean()) if dim else 0.0
    unit = mean_diag if mean_diag > 0 else 1.0
    base = ICHOL_SHIFTS[0] * unit if shift is None else float(shift)
    shifts = [base] + [unit * relative for relative in ICHOL_SHIFTS if unit * relative > base]

    error = None
    for value in shifts:
        try:
            factor = _ic0(A, value)
        except BreakdownNegativePivot as exc:
            logger.info("Incomplete Cholesky broke down with shift %.3e, retrying", value)
            error = exc
            continue
        logger.debug("Incomplete Cholesky factor built with shift %.3e", value)
        return factor
    raise error


def _ic0(A: sp.csc_matrix, shift: float) -> sp.csr_matrix:
    dim = A.shape[0]
    lower = (sp.tril(A, format="csc") + shift * sp.identity(dim, format="csc")).tocsc()
    lower.sort_indices()
    columns = []
    for col in range(dim):
        start, end = lower.indptr[col], lower.indptr[col + 1]
        columns.append(dict(zip(lower.indices[start:end].tolist(), lower.data[start:end].tolist())))

    for col in range(dim):
        entries = columns[col]
        pivot = entries.get(col, 0.0)
        if not pivot > 0:
            raise BreakdownNegativePivot(col, pivot, shift)
        diag = np.sqrt(pivot)
        entries[col] = diag
        below = sorted(row for row in entries if row > col)
        for row in below:
            entries[row] /= diag
        for offset, k in enumerate(below):
            l_kj = entries[k]
            target = columns[k]
            for row in below[offset:]:
                if row in target:
                    target[row] -= entries[row] * l_kj

    rows, cols, data = [], [], []
    for col, entries in enumerate(columns):
        for row, value in entries.items():
            rows.append(row)
            cols.append(col)
            data.append(value)
    return sp.csr_matrix((data, (rows, cols)), shape=(dim, dim))


class Preconditioner:
    """
    Constant preconditioner M = L L^T from an incomplete Cholesky factor.

    Attributes:
        factor (sp.csr_matrix): Lower-triangular factor L.
    """

    __slots__ = ("factor", "_factor_t")

    def __init__(self, factor):
        self.factor = sp.csr_matrix(factor)
        self._factor_t = self.factor.T.tocsr()

    @classmethod
    def build(cls, A, shift: Optional[float] = None, stats: Optional[SolverStats] = None):
        if stats is not None:
            stats.precond_builds += 1
        return cls(ichol_factor(A, shift))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply M^-1 = L^-T L^-1."""
        inner = spsolve_triangular(self.factor, rhs, lower=True)
        return spsolve_triangular(self._factor_t, inner, lower=False)


# pylint: disable=too-many-arguments
def lsqr_solve(
    A,
    b,
    precond: Optional[Preconditioner] = None,
    tol: float = 1e-10,
    max_iters: Optional[int] = None,
    damp: float = 0.0,
    stats: Optional[SolverStats] = None,
) -> np.ndarray:
    """
    Least-squares solution of A x = b by LSMR, optionally right-preconditioned.

    Without a preconditioner the minimum-norm solution is returned.

    Raises:
        NoConvergence: When LSMR stops, the recomputed residuals meet neither of its
            stopping tests ||r|| <= tol (||b|| + ||A|| ||x||) and
            ||A^T r|| <= tol ||A|| ||r||, within a factor LSMR_SLACK.
    """
    A = sp.csr_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if not b.any():
        return np.zeros(A.shape[1])
    max_iters = max_iters or 10 * max(A.shape)

    if precond is None:
        operator = aslinearoperator(A)
    else:
        operator = LinearOperator(
            A.shape,
            matvec=lambda y: A @ precond.solve(y),
            rmatvec=lambda r: precond.solve(A.T @ r),
            dtype=float,
        )

    inner, _, itn, _, _, norm_a = lsmr(
        operator, b, damp=damp, atol=tol, btol=tol, conlim=0, maxiter=max_iters
    )[:6]
    solution = inner if precond is None else precond.solve(inner)

    if stats is not None:
        stats.lsmr_calls += 1
        stats.lsmr_iterations += int(itn)

    # both tests are checked on the operator LSMR saw, damping included
    residual = b - A @ solution
    normal = np.linalg.norm(operator.rmatvec(residual) - damp**2 * inner)
    stacked = np.hypot(np.linalg.norm(residual), damp * np.linalg.norm(inner))
    consistent = stacked <= LSMR_SLACK * tol * (np.linalg.norm(b) + norm_a * np.linalg.norm(inner))
    least_squares = normal <= LSMR_SLACK * tol * norm_a * stacked
    if not (consistent or least_squares):
        raise NoConvergence(int(itn), normal / max(norm_a * stacked, np.finfo(float).tiny), "LSMR")
    return solution


def _pinv_apply(A, rhs, cfg, precond, stats):
    kwargs = dict(tol=cfg.lsqr_tol, max_iters=cfg.lsqr_max_iters, damp=cfg.damp, stats=stats)
    if precond is None:
        return lsqr_solve(A, rhs, None, **kwargs)
    first = lsqr_solve(A, rhs, precond, **kwargs)
    second = lsqr_solve(A, first, precond, **kwargs)
    return A @ second


def _dense_eigh(A):
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    values, vectors = np.linalg.eigh(dense)
    return dense, values, vectors, max(1.0, float(np.abs(values).max()))


def _dense_eig(A, kernel_dim: int) -> SpectralPoint:
    dense, values, vectors, scale = _dense_eigh(A)
    found = int(np.count_nonzero(values < KERNEL_RTOL * scale))
    vector = _canonical_sign(vectors[:, kernel_dim])
    value = values[kernel_dim]
    flag = (
        kernel_dim + 1 < values.size
        and values[kernel_dim + 1] - value < SIMPLICITY_RTOL * scale
        and found <= kernel_dim
    )
    point = SpectralPoint(
        value,
        vector,
        residual=np.linalg.norm(dense @ vector - value * vector),
        multiplicity_flag=flag,
    )
    if found > kernel_dim:
        raise KernelDimMismatch(kernel_dim, found, point)
    return point


def _unexpected_kernel(A, expected, deflate, apply_pinv, rng, zero_tol) -> np.ndarray:
    """
    Orthonormal kernel directions of A left by random vectors after removing their range
    component x - A A^+ x. Returns them when there are more than ``expected``.
    """
    dim = A.shape[0]
    samples = deflate(rng.standard_normal((dim, expected + KERNEL_CHECK_VECTORS)))
    leftover = deflate(
        samples - np.column_stack([A @ apply_pinv(samples[:, j]) for j in range(samples.shape[1])])
    )
    q, r = np.linalg.qr(leftover)
    keep = np.abs(np.diag(r)) > 1e-8 * float(np.linalg.norm(samples, axis=0).max())
    q = q[:, keep]
    if q.shape[1]:
        q = q[:, np.linalg.norm(A @ q, axis=0) <= zero_tol]
    return q if q.shape[1] > expected else np.zeros((dim, 0))


# pylint: disable=too-many-locals
def _subspace_iteration(A, kernel_dim, cfg, kernel_basis, precond, stats, block=None):
    """
    Block inverse subspace iteration on the complement of the kernel.

    Returns:
        tuple: (ritz values, ritz vectors, per-vector residuals, iterations, scale).

    Raises:
        KernelDimMismatch: The kernel is larger than ``kernel_dim``.
        NoConvergence: The first Ritz pair did not reach ``cfg.eig_tol``.
    """
    A = sp.csr_matrix(A, dtype=float)
    dim = A.shape[0]
    block = min(block or cfg.block_size, dim - kernel_dim)
    scale = max(1.0, float(abs(A).sum(axis=1).max()))
    zero_tol = KERNEL_RTOL * scale

    deflation = np.zeros((dim, 0)) if kernel_basis is None else np.linalg.qr(kernel_basis)[0]

    def deflate(block_vectors):
        if deflation.shape[1]:
            block_vectors = block_vectors - deflation @ (deflation.T @ block_vectors)
        return block_vectors

    def apply_pinv(vector):
        return _pinv_apply(A, vector, cfg, precond, stats)

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    basis = np.linalg.qr(deflate(rng.standard_normal((dim, block))))[0]

    free_kernel = kernel_dim - deflation.shape[1]
    if free_kernel <= KERNEL_CHECK_LIMIT:
        extra = _unexpected_kernel(A, max(free_kernel, 0), deflate, apply_pinv, rng, zero_tol)
        if extra.shape[1]:
            found = deflation.shape[1] + extra.shape[1]
            raise KernelDimMismatch(
                kernel_dim, found, SpectralPoint.zero(_canonical_sign(extra[:, -1]))
            )
    else:
        logger.debug("Kernel of dimension %d taken as given", kernel_dim)

    residual = np.inf
    for iteration in range(1, cfg.max_iters + 1):
        images = np.column_stack([apply_pinv(basis[:, j]) for j in range(basis.shape[1])])
        basis = np.linalg.qr(deflate(images))[0]
        applied = A @ basis
        ritz_values, ritz_vectors = np.linalg.eigh(basis.T @ applied)
        basis = basis @ ritz_vectors
        applied = applied @ ritz_vectors
        residuals = np.linalg.norm(applied - basis * ritz_values, axis=0)
        residual = float(residuals[0])
        stats.subspace_iterations += 1
        if residual <= cfg.eig_tol * scale:
            if ritz_values[0] < zero_tol:
                point = SpectralPoint(
                    ritz_values[0], _canonical_sign(basis[:, 0]), residual, iterations=iteration
                )
                raise KernelDimMismatch(kernel_dim, kernel_dim + 1, point)
            return ritz_values, basis, residuals, iteration, scale
    raise NoConvergence(cfg.max_iters, residual, "inverse subspace iteration")


def _iterative_eig(A, kernel_dim, cfg, kernel_basis, precond, stats) -> SpectralPoint:
    values, vectors, residuals, iterations, scale = _subspace_iteration(
        A, kernel_dim, cfg, kernel_basis, precond, stats
    )
    flag = values.size > 1 and values[1] - values[0] < SIMPLICITY_RTOL * scale
    return SpectralPoint(
        values[0],
        _canonical_sign(vectors[:, 0]),
        residual=residuals[0],
        multiplicity_flag=flag,
        iterations=iterations,
    )


def _check_kernel_dim(kernel_dim: int, dim: int) -> None:
    if not 0 <= kernel_dim < dim:
        raise ValueError(
            f"kernel dimension {kernel_dim} leaves no eigenvalue of a {dim}x{dim} matrix"
        )


def _use_dense(cfg: SolverConfig, dim: int) -> bool:
    return cfg.mode == SolverMode.DENSE or (
        cfg.mode == SolverMode.AUTO and dim <= cfg.dense_threshold
    )


def smallest_nonzero_eig(
    A,
    kernel_dim: int,
    cfg: Optional[SolverConfig] = None,
    kernel_basis: Optional[np.ndarray] = None,
    precond: Optional[Preconditioner] = None,
    stats: Optional[SolverStats] = None,
) -> SpectralPoint:
    """
    The (kernel_dim + 1)-th smallest eigenpair of a symmetric PSD matrix.

    Args:
        A: Sparse or dense symmetric PSD matrix.
        kernel_dim: Known dimension of its kernel.
        cfg: Solver settings.
        kernel_basis: Optional kernel basis the iterates are kept orthogonal to.
        precond: Optional constant preconditioner for the iterative path; built from A
            when ``cfg.precond`` asks for one and none is given.
        stats: Counters to update.

    Raises:
        KernelDimMismatch: The numerical kernel is larger than ``kernel_dim``. On the
            iterative path exact kernel directions are counted with random vectors when
            at most KERNEL_CHECK_LIMIT of them lie outside ``kernel_basis``.
        NoConvergence: The iterative path did not reach ``cfg.eig_tol``.
        ValueError: There is no nonzero eigenvalue to return.
    """
    cfg = cfg or SolverConfig()
    stats = stats if stats is not None else SolverStats()
    _check_kernel_dim(kernel_dim, A.shape[0])

    stats.eigensolves += 1
    if _use_dense(cfg, A.shape[0]):
        stats.dense_solves += 1
        return _dense_eig(A, kernel_dim)

    stats.iterative_solves += 1
    if precond is None and cfg.precond == Precond.ICHOL:
        precond = Preconditioner.build(A, stats=stats)
    return _iterative_eig(A, kernel_dim, cfg, kernel_basis, precond, stats)


def localize(vectors: np.ndarray) -> np.ndarray:
    """
    Basis of span(vectors) in which each column vanishes on the pivot rows of the others.

    The pivot rows come from a column-pivoted QR of vectors^T, so the result does not depend
    on which orthonormal basis of the span was given. Columns are unit norm with a
    canonical sign.
    """
    count = vectors.shape[1]
    if count > 1:
        pivots = qr(vectors.T, mode="r", pivoting=True)[1][:count]
        vectors = vectors @ np.linalg.inv(vectors[pivots, :])
    local = vectors / np.linalg.norm(vectors, axis=0)
    for j in range(count):
        local[:, j] = _canonical_sign(local[:, j])
    return local


def eigen_cluster(
    A,
    kernel_dim: int,
    cfg: Optional[SolverConfig] = None,
    kernel_basis: Optional[np.ndarray] = None,
    precond: Optional[Preconditioner] = None,
    stats: Optional[SolverStats] = None,
):
    """
    First nonzero eigenvalue of a symmetric PSD matrix with every eigenvector of its cluster.

    Eigenvalues within SIMPLICITY_RTOL * ||A|| of the first nonzero one belong to the
    cluster. The eigenspace basis is localized (see :func:`localize`). On the iterative
    path at most ``cfg.block_size`` Ritz vectors are returned; a Ritz value that close to the
    converged first one is accurate to the square of its residual.

    Returns:
        tuple: (eigenvalues, unit eigenvectors as columns).

    Raises:
        KernelDimMismatch: As :func:`smallest_nonzero_eig`.
    """
    cfg = cfg or SolverConfig()
    stats = stats if stats is not None else SolverStats()
    _check_kernel_dim(kernel_dim, A.shape[0])

    stats.eigensolves += 1
    if _use_dense(cfg, A.shape[0]):
        stats.dense_solves += 1
        _, values, vectors, scale = _dense_eigh(A)
        found = int(np.count_nonzero(values < KERNEL_RTOL * scale))
        if found > kernel_dim:
            point = SpectralPoint(values[kernel_dim], _canonical_sign(vectors[:, kernel_dim]))
            raise KernelDimMismatch(kernel_dim, found, point)
        values, vectors = values[kernel_dim:], vectors[:, kernel_dim:]
    else:
        stats.iterative_solves += 1
        if precond is None and cfg.precond == Precond.ICHOL:
            precond = Preconditioner.build(A, stats=stats)
        values, vectors, _, _, scale = _subspace_iteration(
            A, kernel_dim, cfg, kernel_basis, precond, stats
        )

    members = values - values[0] < SIMPLICITY_RTOL * scale
    return values[members], localize(vectors[:, members])
