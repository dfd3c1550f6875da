import math

import numpy as np
import pytest

from slrecover import (
    Potential,
    RobinPair,
    SolverFailure,
    benchmark_step_ramp,
    solve_eigenfunction,
    solve_eigenvalue,
    solve_eigenvalues,
    solve_ivp_backward,
)
from slrecover.slcore import count_sign_changes, ivp_forward_batch, trapezoid

PI2 = math.pi**2

# Frozen oracle for q = 0, h0 = h1 = 3: dense sweep + bisection on the
# closed-form characteristic function chi(lam) = 3 u(1) + u'(1) with
# u = cos(sqrt(lam) x) - (3/sqrt(lam)) sin(sqrt(lam) x) (cosh/sinh branch
# for lam < 0).  chi factors as -(sqrt(lam) + 9/sqrt(lam)) sin(sqrt(lam)),
# so the spectrum is exactly {-9} + {n^2 pi^2 : n >= 1}.
ROBIN33_ORACLE = [
    -9.0,
    9.869604401089358,
    39.47841760435743,
    88.82643960980423,
    157.91367041742973,
]


def test_neumann_exact():
    q = Potential.zero(1024)
    bc = RobinPair(0.0, 0.0)
    lams = solve_eigenvalues(q, bc, range(21))
    for n, lam in enumerate(lams):
        assert abs(lam - n * n * PI2) < 1e-6 * (1 + n * n)


def test_constant_shift_identity():
    bc = RobinPair(3.0, 1.0)
    base = solve_eigenvalues(Potential.zero(512), bc, range(6))
    for c in (-5.0, 1.0, 10.0):
        shifted = solve_eigenvalues(Potential(np.full(513, c)), bc, range(6))
        assert np.max(np.abs(shifted - base - c)) < 1e-8


def test_robin_oracle_values():
    q = Potential.zero(1024)
    bc = RobinPair(3.0, 3.0)
    for n, expected in enumerate(ROBIN33_ORACLE):
        lam = solve_eigenvalue(q, bc, n)
        assert abs(lam - expected) < 1e-9 * (1 + abs(expected))


def test_shift_covariance_benchmark():
    q = benchmark_step_ramp(1024)
    bc = RobinPair(3.0, 3.0)
    base = solve_eigenvalues(q, bc, range(11))
    for c in (-5.0, 1.0, 10.0):
        shifted = solve_eigenvalues(Potential(q.values + c), bc, range(11))
        assert np.max(np.abs(shifted - base - c)) < 1e-8


def test_eigenvalues_strictly_increasing(bench_512):
    for h_right in (3.0, 0.0):
        lams = solve_eigenvalues(bench_512, RobinPair(3.0, h_right), range(30))
        assert np.all(np.diff(lams) > 0)


def test_negative_index_rejected():
    with pytest.raises(ValueError):
        solve_eigenvalue(Potential.zero(64), RobinPair(0.0, 0.0), -1)


def test_potential_validation():
    with pytest.raises(ValueError):
        Potential(np.array([0.0, np.nan, 0.0]))
    with pytest.raises(ValueError):
        Potential(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        RobinPair(np.inf, 0.0)


def test_eigenfunction_neumann_cosines():
    q = Potential.zero(1024)
    bc = RobinPair(0.0, 0.0)
    x = np.arange(1025) / 1024
    for n in (1, 2):
        pair = solve_eigenfunction(q, bc, n * n * PI2, n)
        assert abs(pair.g0**2 - 2.0) < 1e-6
        assert abs(pair.g1**2 - 2.0) < 1e-6
        assert np.max(np.abs(pair.g_samples - math.sqrt(2) * np.cos(n * math.pi * x))) < 1e-5

    pair = solve_eigenfunction(q, bc, 0.0, 0)
    assert np.max(np.abs(pair.g_samples - 1.0)) < 1e-10
    assert abs(pair.g0**2 - 1.0) < 1e-10
    assert abs(pair.g1**2 - 1.0) < 1e-10


def test_eigenfunction_robin_oracle_ground_state():
    # lam0 = -9 with eigenfunction proportional to exp(-3x)
    q = Potential.zero(1024)
    bc = RobinPair(3.0, 3.0)
    lam = solve_eigenvalue(q, bc, 0)
    pair = solve_eigenfunction(q, bc, lam, 0)
    assert abs(trapezoid(pair.g_samples**2, q.dx) - 1.0) < 1e-8
    assert count_sign_changes(pair.g_samples) == 0
    x = np.arange(1025) / 1024
    ref = np.exp(-3.0 * x)
    ref /= math.sqrt(trapezoid(ref * ref, q.dx))
    assert np.max(np.abs(pair.g_samples - ref)) < 1e-6


def test_eigenfunction_normalization_and_oscillation(bench_512):
    bc = RobinPair(3.0, 0.0)
    for n in range(11):
        lam = solve_eigenvalue(bench_512, bc, n)
        pair = solve_eigenfunction(bench_512, bc, lam, n)
        assert abs(trapezoid(pair.g_samples**2, bench_512.dx) - 1.0) < 1e-12
        assert count_sign_changes(pair.g_samples) == n


def test_backward_constant_solution():
    q = Potential.zero(512)
    v, dv = solve_ivp_backward(q, 0.0, 1.0, 0.0)
    assert np.max(np.abs(v - 1.0)) < 1e-12
    assert np.max(np.abs(dv)) < 1e-12


def test_backward_cosine_solution():
    q = Potential.zero(1024)
    v, dv = solve_ivp_backward(q, PI2, 1.0, 0.0)
    x = np.arange(1025) / 1024
    assert np.max(np.abs(v - np.cos(math.pi * (x - 1.0)))) < 1e-8
    assert abs(v[0] + 1.0) < 1e-8


def test_backward_forward_roundtrip(bench_512):
    lam = solve_eigenvalue(bench_512, RobinPair(3.0, 3.0), 0)
    v, dv = solve_ivp_backward(bench_512, lam, 1.0, -3.0)
    U, DU = ivp_forward_batch(bench_512, np.array([lam]), v[0], dv[0])
    assert abs(U[0, -1] - 1.0) < 1e-6
    assert abs(DU[0, -1] + 3.0) < 1e-6


def test_backward_overflow_detected():
    q = Potential.zero(256)
    with pytest.raises(SolverFailure):
        solve_ivp_backward(q, -4.0e6, 1.0, 0.0)


def test_asymptotic_remainders_bounded_tail(bench_512):
    # remainder lam_n - pi^2 n^2 - 2(h1 - h0) - int q stays bounded in n
    bc = RobinPair(3.0, 3.0)
    ns = np.arange(5, 26)
    lams = solve_eigenvalues(bench_512, bc, ns)
    a = lams - PI2 * ns.astype(float) ** 2 - bench_512.integral
    assert np.max(np.abs(a)) <= abs(a[0]) + 0.5
