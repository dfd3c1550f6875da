"""Numba-compiled integration kernels (default backend).

Hot loops: fixed-step RK4 of the scaled Pruefer phase equation, a
bracketed Illinois/bisection eigenvalue search built on it, and RK4 of
the second-order initial value problem for eigenfunction samples.
Candidates in a batch are fully independent, so the prange versions are
bit-identical to sequential execution.
"""

import math

import numpy as np
from numba import njit, prange

__all__ = ["phase_ends", "solve_batch", "ivp_batch"]

# The phase substitution u = rho*sin(theta), u' = S*rho*cos(theta) with a
# constant scale S ~ sqrt(lambda) gives
#     theta' = S cos^2(theta) + ((lam - q)/S) sin^2(theta)
#            = A(q) + B(q) cos(2 theta),
#     A = (S + (lam - q)/S)/2,   B = (S - (lam - q)/S)/2.
# For q ~ 0 and lam ~ S^2 the right side is nearly constant, which keeps
# fixed-step RK4 accurate up to high eigenvalue indices. q is interpolated
# linearly between grid nodes.


@njit(cache=True)
def _phase_end(q, dx, lam, S, theta0):
    th = theta0
    for k in range(q.shape[0] - 1):
        q0 = q[k]
        q1 = q[k + 1]
        qm = 0.5 * (q0 + q1)
        a0 = 0.5 * (S + (lam - q0) / S)
        b0 = 0.5 * (S - (lam - q0) / S)
        am = 0.5 * (S + (lam - qm) / S)
        bm = 0.5 * (S - (lam - qm) / S)
        a1 = 0.5 * (S + (lam - q1) / S)
        b1 = 0.5 * (S - (lam - q1) / S)
        k1 = a0 + b0 * math.cos(2.0 * th)
        k2 = am + bm * math.cos(2.0 * (th + 0.5 * dx * k1))
        k3 = am + bm * math.cos(2.0 * (th + 0.5 * dx * k2))
        k4 = a1 + b1 * math.cos(2.0 * (th + dx * k3))
        th = th + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return th


@njit(cache=True)
def phase_ends(q, dx, lams, S, theta0):
    """End-of-interval phase theta(1) for each candidate lambda."""
    out = np.empty(lams.shape[0])
    for i in range(lams.shape[0]):
        out[i] = _phase_end(q, dx, lams[i], S[i], theta0[i])
    return out


@njit(cache=True)
def _solve_one(q, dx, S, theta0, target, seed, w0, rtol):
    # Bracket the root of phi(lam) = theta(1; lam) - target.  phi is
    # continuous, negative below the eigenvalue and positive above it,
    # so expanding the seeded bracket geometrically always succeeds.
    w = w0
    lo = seed - w
    flo = _phase_end(q, dx, lo, S, theta0) - target
    k = 0
    while flo >= 0.0 and k < 60:
        w *= 3.0
        lo = seed - w
        flo = _phase_end(q, dx, lo, S, theta0) - target
        k += 1
    w = w0
    hi = seed + w
    fhi = _phase_end(q, dx, hi, S, theta0) - target
    k = 0
    while fhi <= 0.0 and k < 60:
        w *= 3.0
        hi = seed + w
        fhi = _phase_end(q, dx, hi, S, theta0) - target
        k += 1
    if flo >= 0.0 or fhi <= 0.0:
        return np.nan, lo, hi

    # Illinois false position with a forced bisection every 4th step;
    # the bracket therefore shrinks geometrically no matter how flat or
    # steep phi is, and the secant steps give superlinear tail accuracy.
    a, b, fa, fb = lo, hi, flo, fhi
    side = 0
    for it in range(200):
        mid = 0.5 * (a + b)
        if (b - a) <= rtol * (1.0 + abs(mid)):
            return mid, a, b
        if (it & 3) == 3 or fb == fa:
            c = mid
        else:
            c = (a * fb - b * fa) / (fb - fa)
            if not (a < c < b):
                c = mid
        fc = _phase_end(q, dx, c, S, theta0) - target
        if fc == 0.0:
            return c, a, b
        if fc < 0.0:
            if side == -1:
                fb *= 0.5
            a, fa, side = c, fc, -1
        else:
            if side == 1:
                fa *= 0.5
            b, fb, side = c, fc, 1
    return np.nan, a, b


@njit(cache=True, parallel=True)
def solve_batch(q, dx, S, theta0, target, seed, w0, rtol):
    """Locate one eigenvalue per candidate; NaN rows signal failure.

    Returns (lam, lo, hi) where [lo, hi] is the last bracket.
    """
    n = S.shape[0]
    lam = np.empty(n)
    lo = np.empty(n)
    hi = np.empty(n)
    for i in prange(n):
        lam[i], lo[i], hi[i] = _solve_one(
            q, dx, S[i], theta0[i], target[i], seed[i], w0[i], rtol
        )
    return lam, lo, hi


@njit(cache=True, parallel=True)
def ivp_batch(q, dx, lams, u0s, du0s, refine):
    """RK4 for u' = v, v' = (q - lam) u, one row per candidate lambda.

    Samples are returned on the refine-times subdivided grid; q is the
    same piecewise-linear interpolant at every refinement level.
    """
    M = q.shape[0] - 1
    K = lams.shape[0]
    U = np.empty((K, M * refine + 1))
    DU = np.empty((K, M * refine + 1))
    h = dx / refine
    for kk in prange(K):
        lam = lams[kk]
        u = u0s[kk]
        du = du0s[kk]
        U[kk, 0] = u
        DU[kk, 0] = du
        idx = 0
        for k in range(M):
            q0 = q[k]
            dq = q[k + 1] - q[k]
            for s in range(refine):
                qa = q0 + dq * (s / refine)
                qm = q0 + dq * ((s + 0.5) / refine)
                qb = q0 + dq * ((s + 1.0) / refine)
                k1u = du
                k1v = (qa - lam) * u
                u2 = u + 0.5 * h * k1u
                v2 = du + 0.5 * h * k1v
                k2u = v2
                k2v = (qm - lam) * u2
                u3 = u + 0.5 * h * k2u
                v3 = du + 0.5 * h * k2v
                k3u = v3
                k3v = (qm - lam) * u3
                u4 = u + h * k3u
                v4 = du + h * k3v
                k4u = v4
                k4v = (qb - lam) * u4
                u = u + h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
                du = du + h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
                idx += 1
                U[kk, idx] = u
                DU[kk, idx] = du
    return U, DU
