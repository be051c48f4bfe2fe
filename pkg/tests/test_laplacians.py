import numpy as np
import pytest

from holostab.complex import build_complex
from holostab.laplacians import (
    assemble,
    betti_weighted,
    cheeger_constant,
    eigenvector_transport_residual,
    inheritance_residual,
    kernel_count,
    structural_up_kernel_dim,
    vertex_kernel_basis,
)
from holostab.weights import WeightProfile, perturb


def _unperturbed(profile):
    pw = perturb(profile, 0.0, np.zeros(profile.complex.m))
    return pw, assemble(profile.complex, pw)


def test_vertex_laplacian_diagonal(one_hole):
    _, b = _unperturbed(WeightProfile.from_complex(one_hole))
    degrees = np.asarray(abs(one_hole.b1).sum(axis=1)).ravel()
    assert np.allclose(b.L0.diagonal(), degrees / (degrees + 1.0))


def test_unit_weights_reduce_to_plain_boundaries(one_hole):
    _, b = _unperturbed(WeightProfile.from_complex(one_hole))
    assert np.allclose(b.B2_bar.toarray(), one_hole.b2.toarray())
    assert np.allclose(b.L1_up.toarray(), (one_hole.b2 @ one_hole.b2.T).toarray())


def test_operators_are_symmetric(random_complex):
    _, profile = random_complex(5)
    _, b = _unperturbed(profile)
    for matrix in (b.L0, b.L1_up, b.L1_down):
        assert np.allclose(matrix.toarray(), matrix.toarray().T)


def test_vertex_and_down_spectra_coincide(random_complex):
    for seed in range(3):
        _, profile = random_complex(seed)
        _, b = _unperturbed(profile)
        assert inheritance_residual(b) < 1e-10


def test_vertex_eigenvectors_carry_over_to_edges(one_hole):
    profile = WeightProfile(one_hole, np.linspace(0.4, 1.6, one_hole.m), rho=0.5)
    _, b = _unperturbed(profile)
    values, vectors = np.linalg.eigh(b.L0.toarray())
    value, vector = values[1], vectors[:, 1]
    image = b.B1_bar.T @ vector / np.sqrt(value)
    assert np.linalg.norm(image) == pytest.approx(1.0)
    assert np.allclose(b.L1_down @ image, value * image)
    assert eigenvector_transport_residual(b) < 1e-10


def test_transport_residual_detects_a_wrong_operator(one_hole):
    _, b = _unperturbed(WeightProfile.from_complex(one_hole))
    b.L1_down = 2.0 * b.L1_down
    assert eigenvector_transport_residual(b) > 0.1


def test_first_betti_ignores_positive_weights(one_hole):
    rng = np.random.default_rng(3)
    profile = WeightProfile(one_hole, rng.uniform(0.3, 2.0, one_hole.m), rng.uniform(0.3, 2.0, 3))
    _, b = _unperturbed(profile)
    assert betti_weighted(b) == 1


def test_zero_edge_drops_its_triangles(one_hole):
    profile = WeightProfile.from_complex(one_hole)
    E = np.zeros(one_hole.m)
    E[one_hole.edge_id(4, 6)] = -1.0
    pw = perturb(profile, 1.0, E)
    b = assemble(one_hole, pw)

    assert structural_up_kernel_dim(one_hole, pw) == one_hole.m - 1
    assert not b.B2_bar.toarray()[one_hole.edge_id(4, 6)].any()
    assert kernel_count(b.L1_up) == one_hole.m - 1


def test_vertex_kernel_basis_spans_components(bridged):
    profile = WeightProfile.from_complex(bridged)
    E = np.zeros(bridged.m)
    E[[bridged.edge_id(2, 4), bridged.edge_id(3, 5)]] = -1 / np.sqrt(2)
    pw = perturb(profile, np.sqrt(2), E)
    b = assemble(bridged, pw)

    basis = vertex_kernel_basis(bridged, pw)
    assert basis.shape == (7, 2)
    assert np.allclose(basis.T @ basis, np.eye(2))
    assert np.allclose(b.L0 @ basis, 0, atol=1e-12)
    assert kernel_count(b.L0) == 2


def test_cheeger_constant_of_single_edge():
    c = build_complex([1, 2], [(1, 2)])
    pw = perturb(WeightProfile.from_complex(c), 0.0, np.zeros(1))
    assert cheeger_constant(c, pw) == pytest.approx(0.5)


def test_cheeger_constant_bounds_connectivity(one_hole):
    pw, b = _unperturbed(WeightProfile.from_complex(one_hole))
    h = cheeger_constant(one_hole, pw)
    mu2 = np.linalg.eigvalsh(b.L0.toarray())[1]
    assert 0 < mu2 <= 2 * h


def test_cheeger_constant_size_limit():
    c = build_complex(range(17), [(i, i + 1) for i in range(16)])
    pw = perturb(WeightProfile.from_complex(c), 0.0, np.zeros(c.m))
    with pytest.raises(ValueError):
        cheeger_constant(c, pw)


def test_matrix_market_export(tmp_path, one_hole):
    _, b = _unperturbed(WeightProfile.from_complex(one_hole))
    written = b.export_matrix_market(tmp_path / "mtx")
    assert sorted(path.name for path in written) == [
        "B1_bar.mtx",
        "B2_bar.mtx",
        "L0.mtx",
        "L1_down.mtx",
        "L1_up.mtx",
    ]
    assert all(path.stat().st_size > 0 for path in written)
