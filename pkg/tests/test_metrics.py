import math

import numpy as np
import pytest

from monolearn.games import make_bilinear_saddle, make_game
from monolearn.geometry import symmetric_box
from monolearn.harness import ExperimentConfig, run_self_play
from monolearn.metrics import (
    MetricError,
    RunRecord,
    anchored_normal_element,
    csv_header,
    csv_row,
    dynamic_regret,
    external_regret,
    measure_equilibrium,
    potential,
    second_order_variation,
)

RNG = np.random.default_rng(31)


def small_run(game_id="bilinear", T=50, x1=None, **game_params):
    cfg = ExperimentConfig(
        game=game_id,
        game_params=game_params,
        algo="aog",
        T=T,
        stride=1,
        record_potential=True,
        keep_trajectory=True,
        x1=x1,
    )
    return run_self_play(cfg)


def test_measures_at_nash_are_zero():
    game = make_bilinear_saddle(1.0, 1.0, (1, 1))
    m = measure_equilibrium(game, np.zeros(2))
    assert m.r_tan == 0.0
    assert m.gap == 0.0
    assert m.tgap_exact == 0.0


def test_measures_at_corner():
    game = make_bilinear_saddle(1.0, 1.0, (1, 1))
    m = measure_equilibrium(game, np.array([1.0, 1.0]))
    # V(1,1) = (1,-1); realized value 0, support minimum -2 at (-1,1)
    assert math.isclose(m.gap, 2.0, abs_tol=1e-12)
    corners = [np.array([sx, sy]) for sx in (-1, 1) for sy in (-1, 1)]
    v = np.array([1.0, -1.0])
    brute = max(float(v @ (np.array([1.0, 1.0]) - c)) for c in corners)
    assert math.isclose(m.gap, brute, abs_tol=1e-12)


def test_gap_ordering_chain():
    game = make_bilinear_saddle(1.0, 1.0, (2, 2))
    D = game.diameter()
    for _ in range(100):
        z = game.joint_set.sample(RNG)
        m = measure_equilibrium(game, z)
        assert m.tgap_exact <= m.gap + 1e-9
        assert m.gap <= D * m.r_tan + 1e-9


def test_external_regret_examples():
    box = symmetric_box(1.0, 1)
    plays = [np.zeros(1)] * 3
    grads = [np.array([1.0]), np.array([-1.0]), np.array([1.0])]
    assert math.isclose(external_regret(plays, grads, box), 1.0, abs_tol=1e-12)
    # constant gradient played at its own support minimizer: zero regret
    g = np.array([0.7])
    minimizer, _ = box.support_min(g)
    assert external_regret([minimizer] * 5, [g] * 5, box) == 0.0


def test_external_regret_input_validation():
    box = symmetric_box(1.0, 1)
    with pytest.raises(MetricError):
        external_regret([np.zeros(1)], [], box)


def test_dynamic_regret_examples():
    game = make_bilinear_saddle(1.0, 1.0, (1, 1))
    res = dynamic_regret([np.array([1.0, 1.0])], game)
    assert res.exact
    assert math.isclose(res.per_round[0, 0], 2.0, abs_tol=1e-12)
    at_nash = dynamic_regret([np.zeros(2)] * 4, game)
    assert np.allclose(at_nash.per_round, 0.0)
    assert np.array_equal(at_nash.totals, [0.0, 0.0])


def test_dynamic_regret_fallback_is_linearized_gap():
    game = make_game("appendix_e", n=4, box_half_width=1.0)
    z = game.joint_set.sample(RNG)
    res = dynamic_regret([z], game)
    assert not res.exact
    v = game.gradient(z)
    for i, s in enumerate(game.slices()):
        want = game.player_sets[i].linearized_gap(z[s], v[s])
        assert math.isclose(res.per_round[0, i], want, abs_tol=1e-12)


def test_second_order_variation():
    assert second_order_variation([np.ones(2)] * 5) == 0.0
    grads = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    assert second_order_variation(grads) == 2.0
    with pytest.raises(MetricError):
        second_order_variation([np.zeros(1), np.zeros(2)])


def test_learner_variation_matches_metric():
    result = small_run(T=60, dims=(1, 1))
    traj = result.trajectory
    s = slice(0, 1)
    grads = [traj.grad_half[t][s] for t in range(1, traj.rounds + 1)]
    want = second_order_variation(grads)
    got = result.records[-1].S[0]
    assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-15)


def test_potential_dual_path_recomputation():
    result = small_run(T=30, dims=(1, 1))
    game = result.game
    traj = result.trajectory
    eta = result.eta[0]
    for t in (2, 3, 17):
        wit = potential(traj, game, eta, t)
        # independent re-derivation straight from the stored vectors
        x1, x_prev, x_t = traj.x1, traj.base[t - 1], traj.base[t]
        c = (x_prev - eta * traj.grad_half[t - 1] + (x1 - x_prev) / t - x_t) / eta
        v = game.gradient(x_t)
        r = eta * (v + c)
        d = eta * (v - traj.grad_half[t - 1])
        p = t * (t + 1) / 2.0 * (float(r @ r) + float(d @ d)) + t * float(r @ (x_t - x1))
        assert np.allclose(wit.c, c, atol=1e-15)
        assert abs(wit.value - p) <= 1e-12 * max(1.0, abs(p))
        # and the runner's streaming series agrees
        idx = result.certificates["t"].index(t)
        assert abs(result.certificates["potential"][idx] - p) <= 1e-10 * max(1.0, abs(p))


def test_potential_requires_second_round():
    result = small_run(T=10, dims=(1, 1))
    with pytest.raises(MetricError):
        anchored_normal_element(result.trajectory, result.eta[0], 1)


def test_stationary_nash_run_is_flat():
    result = small_run(T=20, dims=(1, 1), x1=[0.0, 0.0])
    traj = result.trajectory
    for t in range(1, 21):
        assert np.array_equal(traj.base[t], np.zeros(2))
        assert np.array_equal(traj.half[t], np.zeros(2))
    wit = potential(traj, result.game, result.eta[0], 5)
    assert np.array_equal(wit.c, np.zeros(2))
    assert wit.value == 0.0
    assert all(r.r_tan == 0.0 for r in result.records)


def test_csv_header_matches_schema():
    assert csv_header(2) == (
        "t,r_tan,gap,tgap_exact,potential,"
        "eta_1,eta_2,S_1,S_2,extreg_1,extreg_2,dynreg_1,dynreg_2,"
        "dist_half,dist_anchor"
    )
    assert csv_header(1).count(",") == 10


def test_csv_row_formatting():
    rec = RunRecord(
        t=3,
        r_tan=0.5,
        gap=None,
        tgap_exact=None,
        potential=1.25,
        eta=(0.1,),
        S=(0.0,),
        extreg=(None,),
        dynreg=(2.0,),
        dist_half=0.0,
        dist_anchor=1.0,
    )
    row = csv_row(rec, 1)
    assert row == "3,0.5,,,1.25,0.1,0.0,,2.0,0.0,1.0"
    # repr round-trips floats exactly
    assert float(row.split(",")[1]) == 0.5
    with pytest.raises(MetricError):
        csv_row(rec, 2)
