"""Pure NumPy fallback kernels.

Same contract and same algorithm as the numba backend, but vectorized
across the candidate axis instead of compiled: the whole batch is
integrated in lockstep and the root search keeps per-candidate state in
arrays.  Each candidate's arithmetic is independent of the others, so a
batch solve equals a sequence of single solves.
"""

import numpy as np

__all__ = ["phase_ends", "solve_batch", "ivp_batch"]


def phase_ends(q, dx, lams, S, theta0):
    """End-of-interval phase theta(1) for each candidate lambda."""
    th = np.array(theta0, dtype=np.float64, copy=True)
    lam = np.asarray(lams, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
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
        k1 = a0 + b0 * np.cos(2.0 * th)
        k2 = am + bm * np.cos(2.0 * (th + 0.5 * dx * k1))
        k3 = am + bm * np.cos(2.0 * (th + 0.5 * dx * k2))
        k4 = a1 + b1 * np.cos(2.0 * (th + dx * k3))
        th = th + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return th


def _expand(q, dx, S, theta0, target, seed, w0, lower):
    # grow the half-width by 3x until the phase straddles the target
    w = w0.copy()
    lam = seed - w if lower else seed + w
    f = phase_ends(q, dx, lam, S, theta0) - target
    for _ in range(60):
        bad = (f >= 0.0) if lower else (f <= 0.0)
        if not bad.any():
            break
        w[bad] *= 3.0
        lam = np.where(bad, seed - w if lower else seed + w, lam)
        f[bad] = phase_ends(q, dx, lam[bad], S[bad], theta0[bad]) - target[bad]
    return lam, f


def solve_batch(q, dx, S, theta0, target, seed, w0, rtol):
    """Locate one eigenvalue per candidate; NaN rows signal failure.

    Returns (lam, lo, hi) where [lo, hi] is the last bracket.
    """
    S = np.asarray(S, dtype=np.float64)
    theta0 = np.asarray(theta0, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    seed = np.asarray(seed, dtype=np.float64)
    w0 = np.asarray(w0, dtype=np.float64)
    K = S.shape[0]

    a, fa = _expand(q, dx, S, theta0, target, seed, w0, lower=True)
    b, fb = _expand(q, dx, S, theta0, target, seed, w0, lower=False)
    out = np.full(K, np.nan)
    failed = (fa >= 0.0) | (fb <= 0.0)
    active = ~failed
    side = np.zeros(K, dtype=np.int8)

    # Illinois false position with a forced bisection every 4th step,
    # in lockstep over the still-active candidates.
    for it in range(200):
        if not active.any():
            break
        mid = 0.5 * (a + b)
        done = active & ((b - a) <= rtol * (1.0 + np.abs(mid)))
        out[done] = mid[done]
        active &= ~done
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        if (it & 3) == 3:
            c = mid[idx]
        else:
            denom = fb[idx] - fa[idx]
            safe = denom != 0.0
            c = np.where(
                safe,
                (a[idx] * fb[idx] - b[idx] * fa[idx]) / np.where(safe, denom, 1.0),
                mid[idx],
            )
            inside = (c > a[idx]) & (c < b[idx])
            c = np.where(inside, c, mid[idx])
        fc = phase_ends(q, dx, c, S[idx], theta0[idx]) - target[idx]

        exact = fc == 0.0
        out[idx[exact]] = c[exact]
        active[idx[exact]] = False

        neg = ~exact & (fc < 0.0)
        pos = ~exact & (fc > 0.0)
        jn = idx[neg]
        fb[jn] = np.where(side[jn] == -1, 0.5 * fb[jn], fb[jn])
        a[jn] = c[neg]
        fa[jn] = fc[neg]
        side[jn] = -1
        jp = idx[pos]
        fa[jp] = np.where(side[jp] == 1, 0.5 * fa[jp], fa[jp])
        b[jp] = c[pos]
        fb[jp] = fc[pos]
        side[jp] = 1
    return out, a, b


def ivp_batch(q, dx, lams, u0s, du0s, refine):
    """RK4 for u' = v, v' = (q - lam) u, one row per candidate lambda.

    Samples are returned on the refine-times subdivided grid; q is the
    same piecewise-linear interpolant at every refinement level.
    """
    lam = np.asarray(lams, dtype=np.float64)
    M = q.shape[0] - 1
    K = lam.shape[0]
    U = np.empty((K, M * refine + 1))
    DU = np.empty((K, M * refine + 1))
    u = np.array(u0s, dtype=np.float64, copy=True)
    du = np.array(du0s, dtype=np.float64, copy=True)
    U[:, 0] = u
    DU[:, 0] = du
    h = dx / refine
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
            U[:, idx] = u
            DU[:, idx] = du
    return U, DU
