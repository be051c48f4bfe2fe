import logging
from itertools import groupby

import numpy as np
import pytest

from holostab import flow as flow_module
from holostab._exceptions import BreakdownNegativePivot, MaxInnerIterations, NotConverged
from holostab._utils.types import Phase, Precond
from holostab._validators.configs import FlowConfig, SolverConfig
from holostab.complex import betti_numbers, build_complex
from holostab.flow import (
    FlowProblem,
    FlowState,
    alpha_phase,
    free_transition,
    inner_constrained_flow,
    initial_direction,
    run_stability,
    start_directions,
)
from holostab.weights import WeightProfile


def test_showcase_eliminates_the_weak_triangle_edge(showcase_result):
    result = showcase_result
    assert result.converged
    assert result.eliminated_edges == [[5, 6]]
    assert result.eps_star == pytest.approx(0.4, rel=0.05)
    assert (result.betti_before, result.betti_after) == (1, 2)
    assert not result.shared_edge_warning
    assert result.alpha >= FlowConfig().alpha_lo


def test_reduced_showcase_has_two_holes(showcase, showcase_result):
    removed = [showcase.edge_id(*edge) for edge in showcase_result.eliminated_edges]
    assert betti_numbers(showcase.reduced(removed))[1] == 2


def test_accepted_steps_decrease_F(showcase_result):
    rows = showcase_result.trajectory
    assert rows
    for _, segment in groupby(rows, key=lambda row: row.segment):
        accepted = [row.F for row in segment if row.accepted]
        assert all(later < earlier for earlier, later in zip(accepted, accepted[1:]))


def test_accepted_constrained_steps_stay_on_sphere(showcase_result):
    for row in showcase_result.trajectory:
        if row.accepted and row.phase in (Phase.CONSTRAINED, Phase.ALPHA):
            assert abs(row.normE - 1.0) <= 1e-10


def test_free_steps_stay_in_ball(showcase_result):
    for row in showcase_result.trajectory:
        if row.phase == Phase.FREE:
            assert row.normE <= 1.0 + 1e-10


def test_rejected_steps_shrink_the_step(showcase_result):
    rows = showcase_result.trajectory
    beta = FlowConfig().beta_step
    for row, following in zip(rows, rows[1:]):
        if not row.accepted and following.segment == row.segment:
            assert following.h == pytest.approx(row.h / beta)


def test_result_summary(showcase_result):
    summary = showcase_result.summary()
    assert summary["converged"] is True
    assert summary["eliminated_edges"] == [[5, 6]]
    assert "trajectory" not in summary


def test_exact_new_hole_zeroes_lambda(showcase, showcase_profile):
    problem = FlowProblem(showcase_profile)
    E = np.zeros(showcase.m)
    E[showcase.edge_id(5, 6)] = -1.0
    point = problem.evaluate(0.4, E, alpha=1.0)
    assert point.sp_lambda.value == 0.0
    assert point.weights.zero_edges.sum() == 1


def test_split_support_zeroes_connectivity(bridged):
    profile = WeightProfile.from_complex(bridged)
    problem = FlowProblem(profile)
    E = np.zeros(bridged.m)
    E[[bridged.edge_id(2, 4), bridged.edge_id(3, 5)]] = -1 / np.sqrt(2)
    point = problem.evaluate(np.sqrt(2), E, alpha=4.0)

    assert point.sp_mu.value == 0.0
    assert np.linalg.norm(point.sp_mu.vector) == pytest.approx(1.0)
    # full hinge penalty alpha / 2 on top of lambda_plus^2 / 2
    assert point.F >= 2.0
    assert problem.reduced_betti(point.weights.zero_edges) == (2, 0)


def test_mu_bar_follows_initial_connectivity(one_hole):
    profile = WeightProfile.from_complex(one_hole)
    low = FlowProblem(profile, mu_factor=0.5)
    high = FlowProblem(profile, mu_factor=1.0)
    assert low.mu_bar == pytest.approx(0.5 * high.mu_bar)


def test_rejected_step_shrinks_h(showcase_profile):
    cfg = FlowConfig()
    problem = FlowProblem(showcase_profile)
    E = initial_direction(problem, cfg.eps0, 1.0)
    state = FlowState(problem, cfg.eps0, E, alpha=1.0, h=cfg.h0)

    assert not state.try_step(state.E.copy(), cfg)
    assert state.h == pytest.approx(cfg.h0 / cfg.beta_step)
    assert len(state.trajectory) == 1
    assert not state.trajectory[0].accepted


def test_initial_direction_is_admissible_unit(showcase_profile):
    problem = FlowProblem(showcase_profile)
    E = initial_direction(problem, 1e-3, 1.0)
    assert np.linalg.norm(E) == pytest.approx(1.0)
    assert np.all(showcase_profile.w1 + 1e-3 * E >= 0)


def test_inner_flow_does_not_increase_F(showcase_profile):
    cfg = FlowConfig(max_inner=200)
    problem = FlowProblem(showcase_profile)
    E = initial_direction(problem, 0.2, 1.0)
    state = FlowState(problem, 0.2, E, alpha=1.0, h=cfg.h0)
    start = state.current().F
    try:
        state = inner_constrained_flow(state, cfg)
    except MaxInnerIterations as exc:
        state = exc.state
    assert state.F_val <= start
    assert np.linalg.norm(state.E) == pytest.approx(1.0)


def test_alpha_phase_returns_unit_minimizer(showcase, showcase_profile):
    cfg = FlowConfig()
    alpha, E = alpha_phase(showcase, showcase_profile, cfg)
    assert cfg.alpha_lo <= alpha <= cfg.alpha_hi
    assert E.norm == pytest.approx(1.0)
    assert E.is_admissible(showcase_profile, cfg.eps0)


def test_complex_without_triangles_is_rejected():
    c = build_complex([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4), (1, 4)])
    with pytest.raises(NotConverged) as info:
        run_stability(c, WeightProfile.from_complex(c))
    assert not info.value.result.converged
    assert info.value.result.eps_star is None


def test_profile_must_match_complex(one_hole, showcase_profile):
    with pytest.raises(ValueError):
        run_stability(one_hole, showcase_profile)


@pytest.mark.parametrize("bridge_weight", [0.2, 0.1])
def test_weak_bridges_do_not_fake_a_hole(bridged, bridge_weight):
    w1 = np.ones(bridged.m)
    w1[[bridged.edge_id(2, 4), bridged.edge_id(3, 5)]] = bridge_weight
    profile = WeightProfile(bridged, w1)
    try:
        result = run_stability(bridged, profile, FlowConfig(max_outer=25))
    except NotConverged:
        return
    assert result.eliminated_edges != [[2, 4], [3, 5]]
    assert result.betti_after > result.betti_before


def test_free_transition_stays_in_the_ball(showcase_profile):
    cfg = FlowConfig(max_inner=300)
    problem = FlowProblem(showcase_profile)
    E = initial_direction(problem, 0.2, 1.0)
    # continuation shrinks |E| below one when eps grows
    state = FlowState(problem, 0.3, E * 0.2 / 0.3, alpha=1.0, h=cfg.h0)
    finished = True
    try:
        state = free_transition(state, cfg)
    except MaxInnerIterations as exc:
        state, finished = exc.state, False

    assert all(row.phase == Phase.FREE for row in state.trajectory)
    assert np.linalg.norm(state.E) <= 1.0 + 1e-10
    assert np.all(showcase_profile.w1 + state.eps * state.E >= -1e-12)
    if finished and state.F_val > cfg.f_tol:
        assert np.linalg.norm(state.E) == pytest.approx(1.0, abs=1e-6)


SHOWCASE_BLOCKS = (
    {(1, 2), (1, 3), (2, 3), (1, 8), (2, 8)},
    {(4, 5), (4, 6), (5, 6), (5, 7), (6, 7)},
)


def test_tied_curvature_gives_one_start_per_block(showcase, showcase_profile):
    problem = FlowProblem(showcase_profile)
    directions = start_directions(problem, 1e-3, 1.0)

    assert len(directions) == 2
    touched = []
    for E in directions:
        assert np.linalg.norm(E) == pytest.approx(1.0)
        assert np.all(showcase_profile.w1 + 1e-3 * E >= 0)
        support = {showcase.edge_labels(e) for e in np.flatnonzero(np.abs(E) > 1e-10)}
        touched.append([i for i, block in enumerate(SHOWCASE_BLOCKS) if support <= block])
    assert sorted(touched) == [[0], [1]]


def test_start_limit_keeps_the_first_direction(showcase_profile):
    problem = FlowProblem(showcase_profile)
    first = start_directions(problem, 1e-3, 1.0, limit=1)
    assert len(first) == 1
    assert np.allclose(first[0], start_directions(problem, 1e-3, 1.0)[0])


def test_simple_curvature_gives_a_single_start(one_hole):
    problem = FlowProblem(WeightProfile.from_complex(one_hole))
    assert len(start_directions(problem, 1e-3, 1.0)) == 1


def test_up_kernel_dimension_is_cached(monkeypatch, showcase, showcase_profile):
    calls = []
    original = flow_module.structural_up_kernel_dim

    def counting(c, pw):
        calls.append(1)
        return original(c, pw)

    monkeypatch.setattr(flow_module, "structural_up_kernel_dim", counting)
    problem = FlowProblem(showcase_profile)
    E = np.zeros(showcase.m)
    E[showcase.edge_id(4, 6)] = -1.0
    problem.evaluate(0.1, E, alpha=1.0)
    problem.evaluate(0.2, E, alpha=1.0)
    problem.evaluate(0.3, E, alpha=1.0)
    # every triangle keeps a positive weight
    assert len(calls) == 1


def test_failed_preconditioner_falls_back(monkeypatch, caplog, one_hole):
    def breakdown(*args, **kwargs):
        raise BreakdownNegativePivot(3, -1.0, 0.1)

    monkeypatch.setattr(flow_module.Preconditioner, "build", breakdown)
    solver = SolverConfig(mode="iterative", precond="ichol")
    with caplog.at_level(logging.WARNING, logger="holostab.flow"):
        problem = FlowProblem(WeightProfile.from_complex(one_hole), solver)

    assert problem.solver.precond == Precond.NONE
    assert problem.mu_bar > 0
    assert any("No preconditioner" in record.getMessage() for record in caplog.records)


@pytest.mark.slow
def test_preconditioner_does_not_change_the_outcome(showcase, showcase_profile):
    results = [
        run_stability(
            showcase,
            showcase_profile,
            solver=SolverConfig(mode="iterative", precond=precond, block_size=4),
        )
        for precond in ("none", "ichol")
    ]
    plain, preconditioned = results
    assert plain.eliminated_edges == preconditioned.eliminated_edges == [[5, 6]]
    assert preconditioned.eps_star == pytest.approx(plain.eps_star, rel=1e-4)
