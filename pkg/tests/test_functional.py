import warnings

import numpy as np
import pytest

from holostab._exceptions import DegenerateEigenvalue, ZeroProjectedNorm
from holostab._validators.configs import FunctionalParams
from holostab.complex import build_complex
from holostab.functional import (
    GradientInfo,
    constrained_direction,
    eval_functional,
    free_direction,
    free_gradient,
    stationarity,
)
from holostab.laplacians import assemble, structural_up_kernel_dim
from holostab.spectral import SpectralPoint, smallest_nonzero_eig
from holostab.weights import WeightProfile, perturb, weight_jacobians


def _evaluate(profile, eps, E, mu_bar, alpha=1.0):
    c = profile.complex
    pw = perturb(profile, eps, E)
    b = assemble(c, pw)
    sp_lambda = smallest_nonzero_eig(b.L1_up, structural_up_kernel_dim(c, pw))
    sp_mu = smallest_nonzero_eig(b.L0, 1)
    p = FunctionalParams(alpha=alpha, mu_bar=mu_bar)
    return pw, b, sp_lambda, sp_mu, p


def _F(profile, eps, E, mu_bar, alpha=1.0):
    _, b, sp_lambda, sp_mu, p = _evaluate(profile, eps, E, mu_bar, alpha)
    return eval_functional(b, sp_lambda, sp_mu, p)


def _gradient(profile, eps, E, mu_bar, alpha=1.0):
    pw, b, sp_lambda, sp_mu, p = _evaluate(profile, eps, E, mu_bar, alpha)
    jac = weight_jacobians(profile, pw)
    return free_gradient(profile.complex, pw, b, sp_lambda, sp_mu, jac, p, eps), sp_lambda, sp_mu


def _info(G, E=None, active=None):
    G = np.asarray(G, dtype=float)
    active = np.zeros(G.size, dtype=bool) if active is None else active
    G_projected = np.where(active, 0.0, G)
    kappa = 0.0
    if E is not None:
        projected = np.where(active, 0.0, E)
        kappa = float(G @ projected) / float(projected @ projected)
    return GradientInfo(G, G_projected, kappa, active, G, np.zeros(G.size), False)


def _unit(vector):
    return vector / np.linalg.norm(vector)


def test_functional_arithmetic():
    p = FunctionalParams(alpha=1.0, mu_bar=1.0)
    value = eval_functional(None, SpectralPoint(0.2, np.ones(1)), SpectralPoint(0.5, np.ones(1)), p)
    assert value == pytest.approx(0.145)


def test_functional_vanishes_with_connected_new_hole():
    p = FunctionalParams(alpha=3.0, mu_bar=0.5)
    value = eval_functional(None, SpectralPoint(0.0, np.ones(1)), SpectralPoint(0.7, np.ones(1)), p)
    assert value == 0.0


def test_functional_of_unperturbed_one_hole(one_hole):
    profile = WeightProfile.from_complex(one_hole)
    pw = perturb(profile, 0.0, np.zeros(one_hole.m))
    mu2 = smallest_nonzero_eig(assemble(one_hole, pw).L0, 1).value
    value = _F(profile, 0.0, np.zeros(one_hole.m), 0.75 * mu2)
    assert value == pytest.approx(0.5 * 2.0**2)


def _finite_difference_cases(one_hole, random_complex):
    rng = np.random.default_rng(11)
    complexes = [one_hole] + [random_complex(seed, n=8, p=0.6)[0] for seed in range(6)]
    for c in complexes:
        if not c.n_triangles:
            continue
        profile = WeightProfile(c, rng.uniform(0.5, 1.5, c.m), rng.uniform(0.5, 1.5, c.n_triangles))
        # strictly shrinking every edge keeps the coupling away from its kink
        E = -0.5 * _unit(rng.uniform(0.2, 1.0, c.m))
        yield profile, E, _unit(rng.standard_normal(c.m))


def test_gradient_matches_central_differences(one_hole, random_complex):
    checked = 0
    for profile, E, D in _finite_difference_cases(one_hole, random_complex):
        eps = 0.2
        pw = perturb(profile, 0.0, np.zeros(profile.complex.m))
        mu2 = smallest_nonzero_eig(assemble(profile.complex, pw).L0, 1).value
        mu_bar = 2.0 * mu2  # keeps the penalty active

        g, sp_lambda, sp_mu = _gradient(profile, eps, E, mu_bar)
        if sp_lambda.multiplicity_flag or sp_mu.multiplicity_flag:
            continue
        assert g.penalty_active

        step = 1e-5
        numeric = (
            _F(profile, eps, E + step * D, mu_bar) - _F(profile, eps, E - step * D, mu_bar)
        ) / (2 * step)
        analytic = float(g.G @ D)
        assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-9)
        checked += 1
    assert checked >= 3


def test_inactive_penalty_leaves_only_the_lambda_block(one_hole):
    profile = WeightProfile.from_complex(one_hole)
    E = -_unit(np.linspace(1.0, 2.0, one_hole.m))
    g, _, _ = _gradient(profile, 0.1, E, mu_bar=1e-6)
    assert not g.penalty_active
    assert not g.mu_block.any()
    assert np.array_equal(g.G, g.lambda_block)


def test_gradient_respects_triangle_symmetry():
    # swapping vertices 1 and 2 fixes the tie-break edge (1,2)
    c = build_complex([1, 2, 3, 4], [(1, 2), (1, 3), (2, 3), (3, 4)])
    profile = WeightProfile.from_complex(c)
    g, _, _ = _gradient(profile, 0.1, np.zeros(c.m), mu_bar=10.0)
    assert g.penalty_active
    assert g.G[c.edge_id(1, 3)] == pytest.approx(g.G[c.edge_id(2, 3)], rel=1e-9)


def test_degenerate_eigenvalue_warns():
    c = build_complex([1, 2, 3], [(1, 2), (1, 3), (2, 3)])
    profile = WeightProfile.from_complex(c)
    with pytest.warns(DegenerateEigenvalue):
        _gradient(profile, 0.1, np.zeros(c.m), mu_bar=10.0)


def test_zero_weight_edges_leave_the_support(one_hole):
    profile = WeightProfile.from_complex(one_hole)
    E = np.zeros(one_hole.m)
    E[one_hole.edge_id(2, 4)] = -0.8
    E[one_hole.edge_id(3, 5)] = -0.6
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEigenvalue)
        g, _, _ = _gradient(profile, 1.0 / 0.8, E, mu_bar=1e-6)
    edge = one_hole.edge_id(2, 4)
    assert g.active_set[edge]
    assert g.G_projected[edge] == 0.0
    assert g.active_set.sum() == 1


def test_constrained_direction_is_tangent():
    rng = np.random.default_rng(4)
    for _ in range(10):
        E = _unit(rng.standard_normal(12))
        direction = constrained_direction(E, _info(rng.standard_normal(12)))
        assert abs(float(E @ direction)) < 1e-10


def test_constrained_direction_vanishes_when_parallel():
    E = _unit(np.arange(1.0, 6.0))
    assert np.allclose(constrained_direction(E, _info(-3.0 * E)), 0.0, atol=1e-14)


def test_constrained_direction_orthogonal_gradient():
    E = np.array([1.0, 0.0, 0.0])
    G = np.array([0.0, 2.0, -1.0])
    assert np.allclose(constrained_direction(E, _info(G)), -G)


def test_constrained_direction_needs_support():
    E = np.array([1.0, 0.0])
    active = np.array([True, False])
    with pytest.raises(ZeroProjectedNorm):
        constrained_direction(E, _info(np.ones(2), active=active))


def test_free_direction_inside_the_ball():
    E = np.array([0.5, 0.0, 0.0])
    G = np.array([-1.0, 1.0, 0.0])
    assert np.allclose(free_direction(E, _info(G, E)), -G)


def test_free_direction_on_sphere_shrinking_gradient():
    E = np.array([1.0, 0.0])
    G = np.array([1.0, 1.0])  # <G, E> >= 0, -G already points inward
    assert np.allclose(free_direction(E, _info(G, E)), -G)


def test_free_direction_on_sphere_keeps_norm():
    E = _unit(np.array([1.0, 1.0]))
    G = np.array([-2.0, 0.5])
    direction = free_direction(E, _info(G, E))
    assert abs(float(E @ direction)) < 1e-12


def test_stationarity_measure():
    E = _unit(np.array([1.0, 2.0, 2.0]))
    assert stationarity(E, _info(4.0 * E)) == pytest.approx(0.0, abs=1e-12)
    assert stationarity(E, _info(np.zeros(3))) == 0.0
    orthogonal = np.array([2.0, -1.0, 0.0])
    assert stationarity(E, _info(orthogonal)) == pytest.approx(1.0)
