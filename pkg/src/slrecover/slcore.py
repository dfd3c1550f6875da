"""Forward Sturm-Liouville solver on [0, 1].

Solves -u'' + q(x) u = lam u with Robin conditions
h_left*u(0) + u'(0) = 0 and h_right*u(1) + u'(1) = 0 for the n-th
eigenvalue (indexed by interior oscillation count) and its normalized
eigenfunction.  The potential lives on a uniform grid and is treated as
piecewise linear between nodes.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "Potential",
    "RobinPair",
    "Eigenpair",
    "SolverFailure",
    "trapezoid",
    "count_sign_changes",
    "solve_eigenvalue",
    "solve_eigenvalues",
    "solve_eigenfunction",
    "solve_ivp_backward",
    "EIG_RTOL",
]

# Bracket width shrinks to EIG_RTOL*(1+|lam|); tight enough that identities
# such as lam(q + c) = lam(q) + c hold to ~1e-12 at the default grids.
EIG_RTOL = 1e-13


class SolverFailure(RuntimeError):
    """Forward solve did not converge; carries the index and last bracket."""

    def __init__(self, message, index=None, bracket=None):
        super().__init__(message)
        self.index = index
        self.bracket = bracket


def trapezoid(values: np.ndarray, dx: float) -> float:
    """Trapezoidal rule on uniformly spaced samples (the package-wide quadrature)."""
    values = np.asarray(values)
    return float(dx * (values.sum() - 0.5 * (values[0] + values[-1])))


def count_sign_changes(samples: np.ndarray) -> int:
    """Number of strict sign changes among the interior nonzero samples."""
    s = np.sign(samples[1:-1])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class Potential:
    """Real-valued potential sampled at the nodes x_k = k/M of [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 3:
            raise ValueError("potential needs at least 3 samples on [0, 1]")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "values", v)

    @property
    def grid_size(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dx(self) -> float:
        return 1.0 / self.grid_size

    @property
    def integral(self) -> float:
        return trapezoid(self.values, self.dx)

    @classmethod
    def zero(cls, grid_size: int) -> "Potential":
        return cls(np.zeros(grid_size + 1))

    @classmethod
    def from_callable(cls, f, grid_size: int) -> "Potential":
        x = np.arange(grid_size + 1) / grid_size
        return cls(np.asarray(f(x), dtype=np.float64))

    def __add__(self, c: float) -> "Potential":
        return Potential(self.values + float(c))


@dataclass(frozen=True)
class RobinPair:
    """Boundary parameters of h_left*u(0) + u'(0) = 0, h_right*u(1) + u'(1) = 0."""

    h_left: float
    h_right: float

    def __post_init__(self):
        if not (np.isfinite(self.h_left) and np.isfinite(self.h_right)):
            raise ValueError("Robin parameters must be finite")


@dataclass(frozen=True)
class Eigenpair:
    """Eigenvalue with its L2-normalized eigenfunction sampled on the grid.

    g0 and g1 are the boundary values g(0), g(1); g0 comes from the exactly
    known initial value divided by the norm, so it is as accurate as the
    norm itself.  g_prime holds the integrator's derivative samples.
    """

    index: int
    lam: float
    g_samples: np.ndarray
    g_prime: np.ndarray = field(repr=False)
    g0: float = 0.0
    g1: float = 0.0


def _solve_setup(q: Potential, h_left: float, h_right: np.ndarray, ns: np.ndarray):
    # Seeds come from the eigenvalue asymptotics
    #   lam_n ~ pi^2 n^2 + 2(h_right - h_left) + int q,
    # and the phase scale S uses only the shift-invariant part so that
    # adding a constant to q shifts every quantity exactly.
    shift = np.pi**2 * ns.astype(np.float64) ** 2 + 2.0 * (h_right - h_left)
    qint = q.integral
    S = np.sqrt(np.maximum(1.0, shift))
    theta0 = np.arctan2(S, -h_left)
    target = np.arctan2(S, -h_right) + ns * np.pi
    seed = shift + qint
    w0 = np.full(ns.shape[0], 10.0 + abs(qint))
    return S, theta0, target, seed, w0


def solve_eigenvalues_batch(
    q: Potential,
    h_left: float,
    h_right: np.ndarray,
    ns: np.ndarray,
    rtol: float = EIG_RTOL,
) -> np.ndarray:
    """Eigenvalues for a batch of (right boundary parameter, index) pairs.

    Each batch element is solved independently; results are identical to
    solving them one at a time.
    """
    ns = np.asarray(ns, dtype=np.int64)
    h_right = np.asarray(h_right, dtype=np.float64)
    if np.any(ns < 0):
        raise ValueError("eigenvalue indices must be nonnegative")
    S, theta0, target, seed, w0 = _solve_setup(q, h_left, h_right, ns)
    lam, lo, hi = kernels.solve_batch(
        q.values, q.dx, S, theta0, target, seed, w0, rtol
    )
    bad = np.flatnonzero(~np.isfinite(lam))
    if bad.size:
        k = int(bad[0])
        raise SolverFailure(
            f"eigenvalue search for index n={int(ns[k])} did not converge "
            f"(last bracket [{lo[k]}, {hi[k]}])",
            index=int(ns[k]),
            bracket=(float(lo[k]), float(hi[k])),
        )
    return lam


def solve_eigenvalue(q: Potential, bc: RobinPair, n: int, rtol: float = EIG_RTOL) -> float:
    """The n-th eigenvalue (n >= 0 interior zeros) of the Robin problem."""
    lam = solve_eigenvalues_batch(
        q, bc.h_left, np.array([bc.h_right]), np.array([n]), rtol
    )
    return float(lam[0])


def solve_eigenvalues(q: Potential, bc: RobinPair, ns, rtol: float = EIG_RTOL) -> np.ndarray:
    """Eigenvalues for several indices of one problem."""
    ns = np.asarray(list(ns), dtype=np.int64)
    return solve_eigenvalues_batch(
        q, bc.h_left, np.full(ns.shape[0], bc.h_right), ns, rtol
    )


# Eigenfunction integration uses 2 RK4 substeps per grid cell: the phase
# solver fixes lam to ~1e-12, and the substeps keep the amplitude error of
# the oscillatory solution well below the quadrature error of the norm.
EIGENFUNCTION_SUBSTEPS = 2

_NORM_FLOOR = 1e-12


def ivp_forward_batch(q: Potential, lams: np.ndarray, u0: float, du0: float, refine: int = 1):
    """Initial value problem u(0)=u0, u'(0)=du0 for a batch of lambdas.

    Returns (U, DU) sampled on the refine-times subdivided grid.
    """
    lams = np.asarray(lams, dtype=np.float64)
    K = lams.shape[0]
    return kernels.ivp_batch(
        q.values, q.dx, lams, np.full(K, float(u0)), np.full(K, float(du0)), refine
    )


def solve_eigenfunction(
    q: Potential, bc: RobinPair, lam: float, n: int, refine: int = EIGENFUNCTION_SUBSTEPS
) -> Eigenpair:
    """Normalized eigenfunction for an eigenvalue from `solve_eigenvalue`.

    Integrates u(0) = 1, u'(0) = -h_left (which satisfies the left boundary
    condition exactly) and divides by the trapezoidal L2 norm of the grid
    samples.
    """
    U, DU = ivp_forward_batch(q, np.array([lam]), 1.0, -bc.h_left, refine)
    u = U[0, ::refine]
    du = DU[0, ::refine]
    if not np.all(np.isfinite(u)):
        raise SolverFailure(f"eigenfunction integration overflowed at n={n}", index=n)
    nrm = np.sqrt(trapezoid(u * u, q.dx))
    if nrm < _NORM_FLOOR:
        raise SolverFailure(f"degenerate eigenfunction norm at n={n}", index=n)
    return Eigenpair(
        index=n,
        lam=float(lam),
        g_samples=u / nrm,
        g_prime=du / nrm,
        g0=1.0 / nrm,
        g1=float(u[-1] / nrm),
    )


def solve_ivp_backward(
    q: Potential, lam: float, v1: float, dv1: float, refine: int = 1
):
    """Solution of -v'' + q v = lam v with v(1) = v1, v'(1) = dv1.

    Returns (v, v') sampled left-to-right on the refine-times subdivided
    grid.  Computed by reflecting: w(y) = v(1 - y) solves the same equation
    with the reversed potential and w'(0) = -dv1.
    """
    q_rev = Potential(q.values[::-1].copy())
    W, DW = ivp_forward_batch(q_rev, np.array([lam]), v1, -dv1, refine)
    v = W[0, ::-1].copy()
    dv = -DW[0, ::-1]
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(dv))):
        raise SolverFailure("backward integration produced non-finite samples")
    return v, dv
