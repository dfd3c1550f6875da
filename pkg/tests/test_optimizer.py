import numpy as np
import pytest

from slrecover import (
    DescentConfig,
    LineSearchConfig,
    Potential,
    ProblemVector,
    RobinPair,
    SpectralTarget,
    default_index_set,
    eval_G,
    generate_target,
    pr_cg_minimize,
    reset_potential,
    solve_eigenvalue,
    steepest_descent_step,
)
from slrecover import benchmark_step_ramp


@pytest.fixture(scope="module")
def small_setup():
    truth = ProblemVector(3.0, 3.0, 0.0, benchmark_step_ramp(128))
    target = generate_target(truth, default_index_set(5))
    start = ProblemVector(2.0, 4.0, -1.0, Potential.zero(128))
    return truth, target, start


def test_config_validation():
    with pytest.raises(ValueError):
        DescentConfig(max_iters=0)
    with pytest.raises(ValueError):
        DescentConfig(max_iters=10, reset_schedule=(5, 5))
    with pytest.raises(ValueError):
        LineSearchConfig(growth=0.9)


def test_fixed_point_at_truth(small_setup):
    truth, target, _ = small_setup
    cfg = DescentConfig(max_iters=10)
    pv, rec = steepest_descent_step(truth, target, cfg)
    assert rec.event == "converged"
    assert pv is truth

    history = pr_cg_minimize(truth, target, cfg)
    assert len(history) == 1
    assert history[0].event == "converged"


def test_single_h0_step_reduces_half(small_setup):
    # one-dimensional problem in h0: a single line search should capture
    # most of the quadratic decrease
    truth, _, _ = small_setup
    lam0 = solve_eigenvalue(truth.q, RobinPair(3.0, 3.0), 0)
    target = SpectralTarget.from_entries([(1, 0, lam0, 1.0)])
    trial = ProblemVector(2.0, 3.0, 0.0, truth.q)
    G0 = eval_G(trial, target)
    pv1, rec = steepest_descent_step(trial, target, DescentConfig(max_iters=1))
    assert rec.G <= 0.5 * G0
    # the single entry lives in spectrum 1, so h2 never moves
    assert pv1.h2 == trial.h2


def test_first_step_decreases(small_setup):
    _, target, start = small_setup
    pv1, rec = steepest_descent_step(start, target, DescentConfig(max_iters=1))
    assert rec.G < eval_G(start, target)


def test_reset_potential_identities(small_setup):
    _, target, start = small_setup
    pv = ProblemVector(2.0, 4.0, -1.0, benchmark_step_ramp(128))
    r1 = reset_potential(pv)
    assert (r1.h0, r1.h1, r1.h2) == (pv.h0, pv.h1, pv.h2)
    assert np.all(r1.q.values == 0.0)
    r2 = reset_potential(r1)
    assert np.array_equal(r1.q.values, r2.q.values)
    # G after the reset equals a fresh evaluation from scratch (the reset
    # keeps the boundary values reached by the preceding iteration)
    history = pr_cg_minimize(pv, target, DescentConfig(max_iters=3, reset_schedule=(2,)))
    reset_rec = [r for r in history if r.event == "reset"][0]
    zeroed = ProblemVector(
        reset_rec.h0, reset_rec.h1, reset_rec.h2, Potential.zero(128)
    )
    assert reset_rec.G == eval_G(zeroed, target)


def test_monotone_between_resets(small_setup):
    _, target, start = small_setup
    cfg = DescentConfig(max_iters=25, reset_schedule=(8,), g_tol=1e-16)
    history = pr_cg_minimize(start, target, cfg)
    for prev, cur in zip(history, history[1:]):
        if cur.event != "reset":
            assert cur.G <= prev.G + 1e-14


def test_reset_may_increase_then_recovers(small_setup):
    _, target, start = small_setup
    cfg = DescentConfig(max_iters=20, reset_schedule=(10,), g_tol=1e-16)
    history = pr_cg_minimize(start, target, cfg)
    by_iter = {r.iter: r for r in history}
    assert by_iter[10].event == "reset"
    assert by_iter[11].G <= by_iter[10].G + 1e-14


def test_bit_identical_histories(small_setup):
    _, target, start = small_setup
    cfg = DescentConfig(max_iters=8, reset_schedule=(4,))
    h1 = pr_cg_minimize(start, target, cfg, reference=benchmark_step_ramp(128))
    h2 = pr_cg_minimize(start, target, cfg, reference=benchmark_step_ramp(128))
    assert len(h1) == len(h2)
    for a, b in zip(h1, h2):
        assert (a.iter, a.G, a.h0, a.h1, a.h2, a.delta2, a.event) == (
            b.iter, b.G, b.h0, b.h1, b.h2, b.delta2, b.event,
        )


def test_restart_every_one_is_steepest_and_decreases(small_setup):
    _, target, start = small_setup
    for restart in (0, 1):
        cfg = DescentConfig(max_iters=5, restart_every=restart)
        history = pr_cg_minimize(start, target, cfg)
        assert history[-1].G < history[0].G


def test_delta2_tracking_and_snapshots(small_setup):
    truth, target, start = small_setup
    cfg = DescentConfig(max_iters=6, snapshot_every=3)
    history = pr_cg_minimize(start, target, cfg, reference=truth.q)
    assert all(r.delta2 is not None for r in history)
    assert history[0].delta2 == pytest.approx(
        np.sqrt(np.trapezoid(truth.q.values**2, dx=truth.q.dx)), rel=1e-12
    )
    snap_iters = [r.iter for r in history if r.q_snapshot is not None]
    assert 3 in snap_iters and 6 in snap_iters
    assert history[-1].q_snapshot is not None


def test_reference_grid_mismatch(small_setup):
    _, target, start = small_setup
    with pytest.raises(ValueError):
        pr_cg_minimize(start, target, DescentConfig(max_iters=2),
                       reference=Potential.zero(64))
