"""Numerical certification of the bilinear-form machinery.

Checks three things about the eigenvalue gradients of the two trial
problems: the biorthogonality of Wronskian probes against squared
eigenfunctions, the integration-by-parts bridge between the two bilinear
forms, and positive-definiteness of the gradient Gram matrix (linear
independence at finite truncation).

Probe and eigenfunction samples are integrated on a refinement of the
problem grid: the Wronskian integrands mix exponentially large backward
solutions with oscillatory squares, and the trapezoid rule needs the
extra resolution to push its h^2 boundary error below the certification
tolerances.  The potential itself stays the same piecewise-linear
interpolant on the problem grid.
"""

from dataclasses import dataclass

import numpy as np

from .objective import GradientVector, ProblemVector, eigen_gradient, grad_dot
from .slcore import (
    Potential,
    RobinPair,
    ivp_forward_batch,
    solve_eigenvalue,
    solve_eigenfunction,
    solve_ivp_backward,
    trapezoid,
)

__all__ = [
    "REFINE_DEFAULT",
    "WronskianProbe",
    "gamma_form",
    "gamma_tilde_form",
    "build_probe",
    "lemma_biorthogonality",
    "gamma_tilde_bridge",
    "independence_smoke",
    "gram_matrix",
    "LemmaReport",
    "BridgeReport",
    "IndependenceReport",
]

REFINE_DEFAULT = 64


@dataclass(frozen=True)
class WronskianProbe:
    """Backward solutions s, c at one eigenvalue, with s(1)=c(1)=1,
    s'(1)=-h1, c'(1)=-h2, sampled with their derivatives."""

    spectrum_id: int
    index: int
    lam: float
    s_samples: np.ndarray
    s_prime: np.ndarray
    c_samples: np.ndarray
    c_prime: np.ndarray


def gamma_form(f, f_prime, g, g_prime, dx: float) -> float:
    """Integral of the Wronskian f g' - f' g over [0, 1] by the trapezoid rule.

    Derivative samples must come from the ODE integrator (or the product
    rule on such samples), never from numerical differentiation.
    """
    f = np.asarray(f)
    if not (f.shape == np.shape(f_prime) == np.shape(g) == np.shape(g_prime)):
        raise ValueError("gamma_form arguments must share one grid")
    return trapezoid(f * np.asarray(g_prime) - np.asarray(f_prime) * np.asarray(g), dx)


def gamma_tilde_form(f, f_prime, grad: GradientVector, dx: float) -> float:
    """Bilinear form -2 int f' g dx + f(1) b + f(1) c + f(0) a acting on a
    gradient 4-tuple (a, b, c, g); with constant f the integral vanishes and
    the value is exactly a + b + c times f."""
    f = np.asarray(f)
    f_prime = np.asarray(f_prime)
    if not (f.shape == f_prime.shape == np.shape(grad.d_q)):
        raise ValueError("gamma_tilde_form arguments must share one grid")
    return (
        -2.0 * trapezoid(f_prime * grad.d_q, dx)
        + f[-1] * grad.d_h1
        + f[-1] * grad.d_h2
        + f[0] * grad.d_h0
    )


def build_probe(pv: ProblemVector, i: int, n: int, refine: int = REFINE_DEFAULT) -> WronskianProbe:
    """Wronskian probe at the n-th eigenvalue of trial problem i."""
    h_right = pv.h1 if i == 1 else pv.h2
    lam = solve_eigenvalue(pv.q, RobinPair(pv.h0, h_right), n)
    s, ds = solve_ivp_backward(pv.q, lam, 1.0, -pv.h1, refine)
    c, dc = solve_ivp_backward(pv.q, lam, 1.0, -pv.h2, refine)
    return WronskianProbe(i, n, lam, s, ds, c, dc)


def _eigen_refined(pv: ProblemVector, j: int, m: int, refine: int):
    """(lam, g, g') on the refined grid, normalized by the refined trapezoid norm."""
    h_right = pv.h1 if j == 1 else pv.h2
    lam = solve_eigenvalue(pv.q, RobinPair(pv.h0, h_right), m)
    U, DU = ivp_forward_batch(pv.q, np.array([lam]), 1.0, -pv.h0, refine)
    dxr = pv.q.dx / refine
    nrm = np.sqrt(trapezoid(U[0] * U[0], dxr))
    return lam, U[0] / nrm, DU[0] / nrm


def _diag_value(pv: ProblemVector, i: int) -> float:
    # On the diagonal the probe component matching spectrum i is
    # proportional to g, and the Wronskian of the other component with g
    # is constant, equal to its boundary value at x = 1; the integral
    # collapses to (-1)^i (h1 - h2).
    return (-1.0) ** i * (pv.h1 - pv.h2)


@dataclass(frozen=True)
class LemmaReport:
    n_max: int
    tol: float
    matrix: np.ndarray    # rows: probes (i, n); cols: eigenfunctions (j, m)
    expected: np.ndarray
    max_deviation: float
    worst: tuple          # (i, n, j, m)
    passed: bool

    def to_doc(self):
        return {
            "n_max": self.n_max,
            "tol": self.tol,
            "max_deviation": self.max_deviation,
            "worst": list(self.worst),
            "passed": self.passed,
            "matrix": self.matrix,
            "expected": self.expected,
        }


def lemma_biorthogonality(
    pv: ProblemVector, n_max: int, tol: float = 1e-3, refine: int = REFINE_DEFAULT
) -> LemmaReport:
    """Biorthogonality matrix Gamma(c s, g^2) over (i, n) x (j, m), n, m <= n_max.

    The matrix must be (-1)^i (h1 - h2) on matching pairs and zero
    elsewhere; the report carries the worst deviation from that pattern.
    """
    if n_max > 10:
        raise ValueError("lemma check is limited to n_max <= 10")
    dxr = pv.q.dx / refine
    pairs = [(i, n) for i in (1, 2) for n in range(n_max + 1)]
    eig = {jm: _eigen_refined(pv, *jm, refine) for jm in pairs}
    size = len(pairs)
    matrix = np.empty((size, size))
    expected = np.empty((size, size))
    for row, (i, n) in enumerate(pairs):
        probe = build_probe(pv, i, n, refine)
        f = probe.c_samples * probe.s_samples
        df = probe.c_prime * probe.s_samples + probe.c_samples * probe.s_prime
        for col, (j, m) in enumerate(pairs):
            _, g, dg = eig[(j, m)]
            matrix[row, col] = gamma_form(f, df, g * g, 2.0 * g * dg, dxr)
            expected[row, col] = _diag_value(pv, i) if (i, n) == (j, m) else 0.0
    dev = np.abs(matrix - expected)
    worst_flat = int(np.argmax(dev))
    wr, wc = divmod(worst_flat, size)
    return LemmaReport(
        n_max=n_max,
        tol=tol,
        matrix=matrix,
        expected=expected,
        max_deviation=float(dev[wr, wc]),
        worst=(*pairs[wr], *pairs[wc]),
        passed=bool(dev.max() <= tol),
    )


@dataclass(frozen=True)
class BridgeReport:
    spectrum_id: int
    index: int
    n_max: int
    tol: float
    max_abs_diff: float
    worst: tuple          # (j, m)
    passed: bool

    def to_doc(self):
        return {
            "i": self.spectrum_id,
            "n": self.index,
            "n_max": self.n_max,
            "tol": self.tol,
            "max_abs_diff": self.max_abs_diff,
            "worst": list(self.worst),
            "passed": self.passed,
        }


def gamma_tilde_bridge(
    pv: ProblemVector,
    i: int,
    n: int,
    n_max: int | None = None,
    tol: float = 1e-5,
    refine: int = REFINE_DEFAULT,
) -> BridgeReport:
    """Integration-by-parts identity for one probe against all gradients.

    Compares GammaTilde(c s, grad lam_{j,m}) with Gamma(c s, g_{j,m}^2) for
    all j in {1,2}, m <= n_max (default: m <= n), where
    GammaTilde(f, (a, b, c, g)) = -2 int f' g dx + f(1) b + f(1) c + f(0) a.
    """
    if n_max is None:
        n_max = n
    probe = build_probe(pv, i, n, refine)
    f = probe.c_samples * probe.s_samples
    df = probe.c_prime * probe.s_samples + probe.c_samples * probe.s_prime
    dxr = pv.q.dx / refine
    worst = (0, 0)
    max_diff = -1.0
    for j in (1, 2):
        for m in range(n_max + 1):
            _, g, dg = _eigen_refined(pv, j, m, refine)
            gsq = g * g
            gamma = gamma_form(f, df, gsq, 2.0 * g * dg, dxr)
            grad_lam = GradientVector(
                d_h0=-g[0] ** 2,
                d_h1=g[-1] ** 2 if j == 1 else 0.0,
                d_h2=g[-1] ** 2 if j == 2 else 0.0,
                d_q=gsq,
            )
            gamma_tilde = gamma_tilde_form(f, df, grad_lam, dxr)
            diff = abs(gamma_tilde - gamma)
            if diff > max_diff:
                max_diff = diff
                worst = (j, m)
    return BridgeReport(
        spectrum_id=i,
        index=n,
        n_max=n_max,
        tol=tol,
        max_abs_diff=float(max_diff),
        worst=worst,
        passed=bool(max_diff <= tol),
    )


def gram_matrix(grads, dx: float) -> np.ndarray:
    """Gram matrix of gradient vectors under the R^3 x L2 inner product."""
    size = len(grads)
    gram = np.empty((size, size))
    for a in range(size):
        for b in range(a, size):
            gram[a, b] = gram[b, a] = grad_dot(grads[a], grads[b], dx)
    return gram


@dataclass(frozen=True)
class IndependenceReport:
    n_max: int
    gram: np.ndarray
    min_eigenvalue: float

    def to_doc(self):
        return {
            "n_max": self.n_max,
            "min_eigenvalue": self.min_eigenvalue,
            "gram": self.gram,
        }


def independence_smoke(pv: ProblemVector, n_max: int) -> IndependenceReport:
    """Smallest eigenvalue of the gradient Gram matrix for indices <= n_max.

    Linear independence of the eigenvalue gradients makes it strictly
    positive at every finite truncation.
    """
    if n_max > 8:
        raise ValueError("independence check is limited to n_max <= 8")
    grads: list[GradientVector] = []
    for i in (1, 2):
        h_right = pv.h1 if i == 1 else pv.h2
        bc = RobinPair(pv.h0, h_right)
        for m in range(n_max + 1):
            lam = solve_eigenvalue(pv.q, bc, m)
            pair = solve_eigenfunction(pv.q, bc, lam, m)
            grads.append(eigen_gradient(pair, i))
    gram = gram_matrix(grads, pv.q.dx)
    min_eig = float(np.linalg.eigvalsh(gram)[0])
    return IndependenceReport(n_max=n_max, gram=gram, min_eigenvalue=min_eig)
