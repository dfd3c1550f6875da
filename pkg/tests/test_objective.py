import math

import numpy as np
import pytest

from slrecover import (
    Potential,
    ProblemVector,
    RobinPair,
    SpectralTarget,
    default_index_set,
    eigen_gradient,
    eval_G,
    eval_grad_G,
    generate_target,
    solve_eigenfunction,
    solve_eigenvalue,
)
from slrecover.objective import GradientVector, grad_dot, grad_norm
from slrecover.slcore import solve_eigenvalues_batch

PI2 = math.pi**2


def small_problem(M=256):
    from slrecover import benchmark_step_ramp

    return ProblemVector(3.0, 3.0, 0.0, benchmark_step_ramp(M))


def test_target_validation():
    with pytest.raises(ValueError):
        SpectralTarget.from_entries([])
    with pytest.raises(ValueError):
        SpectralTarget.from_entries([(1, 0, 1.0, 1.0), (1, 0, 2.0, 1.0)])
    with pytest.raises(ValueError):
        SpectralTarget.from_entries([(1, 0, 1.0, 0.0)])
    with pytest.raises(ValueError):
        SpectralTarget.from_entries([(3, 0, 1.0, 1.0)])
    t = SpectralTarget.from_entries([(2, 1, 4.0, 1.0), (1, 0, 1.0, 1.0)])
    assert t.entries() == [(1, 0, 1.0, 1.0), (2, 1, 4.0, 1.0)]


def test_problem_vector_requires_gap():
    q = Potential.zero(64)
    with pytest.raises(ValueError):
        ProblemVector(1.0, 2.0, 2.0, q)
    ProblemVector(1.0, 2.0, 0.0, q)


def test_G_zero_at_truth():
    pv = small_problem()
    target = generate_target(pv, default_index_set(6))
    G = eval_G(pv, target)
    assert G <= 1e-16 * float(np.sum(target.weights * target.lams**2))


def test_G_single_entry():
    pv = small_problem()
    lam0 = solve_eigenvalue(pv.q, RobinPair(3.0, 3.0), 0)
    lam_hat = lam0 + 0.7
    target = SpectralTarget.from_entries([(1, 0, lam_hat, 2.0)])
    assert abs(eval_G(pv, target) - 2.0 * (lam0 - lam_hat) ** 2) < 1e-14


def test_eigen_gradient_neumann_closed_form():
    q = Potential.zero(512)
    bc = RobinPair(0.0, 0.0)
    pair = solve_eigenfunction(q, bc, PI2, 1)
    g = eigen_gradient(pair, 1)
    x = np.arange(513) / 512
    assert abs(g.d_h0 + 2.0) < 1e-6
    assert abs(g.d_h1 - 2.0) < 1e-6
    assert g.d_h2 == 0.0
    assert np.max(np.abs(g.d_q - 2.0 * np.cos(math.pi * x) ** 2)) < 1e-5


def test_eigen_gradient_kronecker_delta():
    pv = small_problem()
    lam = solve_eigenvalue(pv.q, RobinPair(3.0, 0.0), 2)
    pair = solve_eigenfunction(pv.q, RobinPair(3.0, 0.0), lam, 2)
    g2 = eigen_gradient(pair, 2)
    assert g2.d_h1 == 0.0
    assert g2.d_h2 == pair.g1**2
    with pytest.raises(ValueError):
        eigen_gradient(pair, 3)


@pytest.mark.parametrize("n", range(6))
def test_eigen_gradient_fd_boundary(bench_512, n):
    # dlam/dh0 = -g(0)^2 and dlam/dh1 = g(1)^2 against central differences
    eps = 1e-5
    bc = RobinPair(3.0, 3.0)
    lam = solve_eigenvalue(bench_512, bc, n)
    pair = solve_eigenfunction(bench_512, bc, lam, n)
    g = eigen_gradient(pair, 1)

    fd_h0 = (
        solve_eigenvalue(bench_512, RobinPair(3.0 + eps, 3.0), n)
        - solve_eigenvalue(bench_512, RobinPair(3.0 - eps, 3.0), n)
    ) / (2 * eps)
    assert abs(fd_h0 - g.d_h0) < 1e-4 * abs(fd_h0)

    fd_h1 = (
        solve_eigenvalue(bench_512, RobinPair(3.0, 3.0 + eps), n)
        - solve_eigenvalue(bench_512, RobinPair(3.0, 3.0 - eps), n)
    ) / (2 * eps)
    assert abs(fd_h1 - g.d_h1) < 1e-4 * abs(fd_h1)


def test_grad_G_zero_residual():
    pv = small_problem()
    target = generate_target(pv, default_index_set(6))
    G, grad = eval_grad_G(pv, target)
    assert G <= 1e-18
    assert grad_norm(grad, pv.q.dx) < 1e-6


def test_grad_G_matches_eval_G():
    pv = small_problem()
    truth = generate_target(pv, default_index_set(6))
    trial = ProblemVector(2.0, 4.0, -1.0, Potential.zero(256))
    G1 = eval_G(trial, truth)
    G2, _ = eval_grad_G(trial, truth)
    assert G1 == G2


def test_grad_G_directional_fd(bench_512):
    truth = ProblemVector(3.0, 3.0, 0.0, bench_512)
    target = generate_target(truth, default_index_set(29))
    trial = ProblemVector(2.0, 4.0, -1.0, Potential.zero(512))
    _, grad = eval_grad_G(trial, target)
    rng = np.random.default_rng(11)
    eps = 1e-5
    for _ in range(5):
        d = GradientVector(
            rng.standard_normal(),
            rng.standard_normal(),
            rng.standard_normal(),
            rng.standard_normal(513),
        )

        def shifted(t):
            return ProblemVector(
                trial.h0 + t * d.d_h0,
                trial.h1 + t * d.d_h1,
                trial.h2 + t * d.d_h2,
                Potential(trial.q.values + t * d.d_q),
            )

        fd = (eval_G(shifted(eps), target) - eval_G(shifted(-eps), target)) / (2 * eps)
        an = grad_dot(grad, d, trial.q.dx)
        assert abs(fd - an) < 1e-3 * abs(fd)


def test_grad_linear_in_weights():
    pv = small_problem()
    truth = generate_target(pv, default_index_set(4))
    trial = ProblemVector(2.0, 4.0, -1.0, Potential.zero(256))
    G1, g1 = eval_grad_G(trial, truth)
    G2, g2 = eval_grad_G(trial, truth.with_weights(2.0 * truth.weights))
    assert G2 == 2.0 * G1
    assert g2.d_h0 == 2.0 * g1.d_h0
    assert g2.d_h1 == 2.0 * g1.d_h1
    assert g2.d_h2 == 2.0 * g1.d_h2
    assert np.array_equal(g2.d_q, 2.0 * g1.d_q)


def test_other_spectrum_unaffected():
    # perturbing h1 leaves spectrum 2 bit-identical, and vice versa
    q = small_problem().q
    ns = np.arange(5)
    lam2_a = solve_eigenvalues_batch(q, 3.0, np.full(5, 0.0), ns)
    lam2_b = solve_eigenvalues_batch(q, 3.0, np.full(5, 0.0), ns)
    assert np.array_equal(lam2_a, lam2_b)
    # spectrum 1 residuals with different h2 values in the problem vector
    truth = generate_target(small_problem(), default_index_set(4))
    is1 = truth.spectrum_ids == 1
    for h2 in (-1.0, 0.5):
        trial = ProblemVector(2.0, 4.0, h2, Potential.zero(256))
        lams = solve_eigenvalues_batch(
            trial.q, trial.h0, np.where(is1, trial.h1, trial.h2), truth.indices
        )
        if h2 == -1.0:
            first = lams[is1].copy()
        else:
            assert np.array_equal(lams[is1], first)


def test_gradient_nonzero_off_solution():
    # coarse smoke test; the acceptance suite runs the full benchmark version
    pv = small_problem(128)
    target = generate_target(pv, default_index_set(4))
    rng = np.random.default_rng(3)
    for _ in range(10):
        trial = ProblemVector(
            3.0 + rng.uniform(-2, 2),
            3.0 + rng.uniform(-2, 2),
            rng.uniform(-2, 2),
            Potential(rng.uniform(-1, 1) + 0.3 * rng.standard_normal(129)),
        )
        G, grad = eval_grad_G(trial, target)
        if G > 1e-12:
            assert grad_norm(grad, trial.q.dx) > 1e-10
