"""Least-squares eigenvalue functional and its gradient.

The unknown is the full vector (h0, h1, h2, q): two trial problems share
the potential q and the left parameter h0 but carry h1 resp. h2 on the
right.  The functional sums weighted squared residuals between trial and
target eigenvalues over a finite index set; its gradient lives in
R^3 x L2(0, 1) and is assembled from the normalized eigenfunctions.
"""

from dataclasses import dataclass

import numpy as np

from .slcore import (
    EIG_RTOL,
    EIGENFUNCTION_SUBSTEPS,
    Eigenpair,
    Potential,
    SolverFailure,
    ivp_forward_batch,
    solve_eigenvalues_batch,
    trapezoid,
)

__all__ = [
    "ProblemVector",
    "SpectralTarget",
    "GradientVector",
    "eval_G",
    "eigen_gradient",
    "eval_grad_G",
    "grad_dot",
    "grad_norm",
]

H_GAP_MIN = 1e-12


@dataclass(frozen=True)
class ProblemVector:
    """Full parameter vector (h0, h1, h2, q) of the two trial problems."""

    h0: float
    h1: float
    h2: float
    q: Potential

    def __post_init__(self):
        for name in ("h0", "h1", "h2"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if abs(self.h1 - self.h2) <= H_GAP_MIN:
            raise ValueError(
                f"h1 and h2 must differ (|h1-h2| = {abs(self.h1 - self.h2):.3e})"
            )

    def with_zero_potential(self) -> "ProblemVector":
        return ProblemVector(self.h0, self.h1, self.h2, Potential.zero(self.q.grid_size))


@dataclass(frozen=True)
class SpectralTarget:
    """Finite target data: eigenvalues lambda_{i,n} with positive weights.

    Entries are stored sorted by (spectrum id, index); this fixed order is
    also the reduction and noise-draw order everywhere.
    """

    spectrum_ids: np.ndarray
    indices: np.ndarray
    lams: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.spectrum_ids, dtype=np.int64)
        ns = np.asarray(self.indices, dtype=np.int64)
        lams = np.asarray(self.lams, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if not (ids.shape == ns.shape == lams.shape == w.shape) or ids.ndim != 1:
            raise ValueError("target columns must be equal-length 1-d arrays")
        if ids.size == 0:
            raise ValueError("target must contain at least one entry")
        if not np.all((ids == 1) | (ids == 2)):
            raise ValueError("spectrum ids must be 1 or 2")
        if np.any(ns < 0):
            raise ValueError("eigenvalue indices must be nonnegative")
        if not np.all(np.isfinite(lams)):
            raise ValueError("target eigenvalues must be finite")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        order = np.lexsort((ns, ids))
        ids, ns, lams, w = ids[order], ns[order], lams[order], w[order]
        keys = ids * (ns.max() + 1) + ns
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate (spectrum, index) entry in target")
        object.__setattr__(self, "spectrum_ids", ids)
        object.__setattr__(self, "indices", ns)
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_entries(cls, entries) -> "SpectralTarget":
        """Build from an iterable of (i, n, lambda, weight) tuples."""
        rows = list(entries)
        return cls(
            np.array([r[0] for r in rows]),
            np.array([r[1] for r in rows]),
            np.array([r[2] for r in rows]),
            np.array([r[3] for r in rows]),
        )

    def entries(self):
        """Entries as (i, n, lambda, weight) tuples in canonical order."""
        return [
            (int(i), int(n), float(l), float(w))
            for i, n, l, w in zip(self.spectrum_ids, self.indices, self.lams, self.weights)
        ]

    def __len__(self) -> int:
        return int(self.spectrum_ids.size)

    def with_weights(self, weights) -> "SpectralTarget":
        w = np.broadcast_to(np.asarray(weights, dtype=np.float64), self.lams.shape)
        return SpectralTarget(self.spectrum_ids, self.indices, self.lams, w.copy())


@dataclass(frozen=True)
class GradientVector:
    """Element of R^3 x L2: boundary sensitivities plus a grid function."""

    d_h0: float
    d_h1: float
    d_h2: float
    d_q: np.ndarray


def grad_dot(a: GradientVector, b: GradientVector, dx: float) -> float:
    """Inner product on R^3 x L2 (dot on the h's, trapezoid on the grid part)."""
    return (
        a.d_h0 * b.d_h0
        + a.d_h1 * b.d_h1
        + a.d_h2 * b.d_h2
        + trapezoid(a.d_q * b.d_q, dx)
    )


def grad_norm(a: GradientVector, dx: float) -> float:
    return float(np.sqrt(grad_dot(a, a, dx)))


def _forward_lams(h0, h1, h2, q: Potential, target: SpectralTarget, rtol) -> np.ndarray:
    h_right = np.where(target.spectrum_ids == 1, h1, h2)
    return solve_eigenvalues_batch(q, h0, h_right, target.indices, rtol)


def _eval_g_raw(h0, h1, h2, q: Potential, target: SpectralTarget, rtol=EIG_RTOL) -> float:
    lams = _forward_lams(h0, h1, h2, q, target, rtol)
    r = lams - target.lams
    return float(np.sum(target.weights * r * r))


def eval_G(pv: ProblemVector, target: SpectralTarget, rtol=EIG_RTOL) -> float:
    """Weighted sum of squared eigenvalue residuals (zero exactly at the truth)."""
    return _eval_g_raw(pv.h0, pv.h1, pv.h2, pv.q, target, rtol)


def eigen_gradient(pair: Eigenpair, spectrum_id: int) -> GradientVector:
    """Gradient of one eigenvalue with respect to (h0, h1, h2, q).

    The boundary sensitivities are -g(0)^2 and g(1)^2, the latter attached
    to whichever right parameter the spectrum uses; the L2 part is g(x)^2.
    """
    if spectrum_id not in (1, 2):
        raise ValueError("spectrum_id must be 1 or 2")
    g1sq = pair.g1**2
    return GradientVector(
        d_h0=-pair.g0**2,
        d_h1=g1sq if spectrum_id == 1 else 0.0,
        d_h2=g1sq if spectrum_id == 2 else 0.0,
        d_q=pair.g_samples**2,
    )


def _eval_grad_raw(h0, h1, h2, q: Potential, target: SpectralTarget, rtol=EIG_RTOL):
    lams = _forward_lams(h0, h1, h2, q, target, rtol)
    sub = EIGENFUNCTION_SUBSTEPS
    U, DU = ivp_forward_batch(q, lams, 1.0, -h0, refine=sub)
    u = U[:, ::sub]
    if not np.all(np.isfinite(u)):
        raise SolverFailure("eigenfunction integration produced non-finite samples")
    dx = q.dx
    nrm2 = dx * (np.sum(u * u, axis=1) - 0.5 * (u[:, 0] ** 2 + u[:, -1] ** 2))
    g0sq = 1.0 / nrm2
    g1sq = u[:, -1] ** 2 / nrm2

    r = lams - target.lams
    G = float(np.sum(target.weights * r * r))
    coef = 2.0 * target.weights * r
    is1 = target.spectrum_ids == 1
    d_h0 = float(np.sum(coef * (-g0sq)))
    d_h1 = float(np.sum(coef[is1] * g1sq[is1]))
    d_h2 = float(np.sum(coef[~is1] * g1sq[~is1]))
    d_q = (coef / nrm2) @ (u * u)
    return G, GradientVector(d_h0, d_h1, d_h2, d_q)


def eval_grad_G(pv: ProblemVector, target: SpectralTarget, rtol=EIG_RTOL):
    """Functional value and gradient, sharing one set of forward solves.

    Returns (G, grad) with grad = 2 sum w*(lam - lam_target)*grad_lam,
    accumulated in the canonical entry order.
    """
    return _eval_grad_raw(pv.h0, pv.h1, pv.h2, pv.q, target, rtol)
