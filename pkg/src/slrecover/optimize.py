"""Polak-Ribiere conjugate gradient descent on (h0, h1, h2, q).

The descent direction mixes the current gradient with the previous
direction using the PR+ coefficient (clipped at zero, which degrades
gracefully to steepest descent); the step size comes from a
derivative-free bracketing plus golden-section line search.  A reset
schedule can zero the trial potential at chosen iterations while keeping
the boundary parameters, restarting the direction.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .objective import (
    GradientVector,
    ProblemVector,
    SpectralTarget,
    _eval_g_raw,
    _eval_grad_raw,
    grad_dot,
)
from .slcore import Potential, SolverFailure, trapezoid

__all__ = [
    "LineSearchConfig",
    "DescentConfig",
    "IterateRecord",
    "StepFailure",
    "steepest_descent_step",
    "pr_cg_minimize",
    "reset_potential",
]

_GOLDEN = 0.5 * (3.0 - math.sqrt(5.0))


class StepFailure(RuntimeError):
    """Line search found no decrease within its evaluation budget."""

    def __init__(self, message, last_alpha):
        super().__init__(message)
        self.last_alpha = last_alpha


@dataclass(frozen=True)
class LineSearchConfig:
    growth: float = 2.0          # bracket expansion/backtracking factor
    shrink_tol: float = 1e-3     # stop when bracket width < shrink_tol * alpha
    max_evals: int = 40
    alpha_init: float = 1e-3     # scaled by 1/(1 + |grad|) at each step

    def __post_init__(self):
        if self.growth <= 1.0:
            raise ValueError("growth factor must exceed 1")
        if self.max_evals < 3:
            raise ValueError("line search needs at least 3 evaluations")


@dataclass(frozen=True)
class DescentConfig:
    max_iters: int = 200
    g_tol: float = 1e-10
    reset_schedule: tuple = ()
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    restart_every: int = 0       # force a steepest-descent direction every k iters; 0 = never
    snapshot_every: int = 0      # attach a copy of q to every k-th record; 0 = final only
    delta2_stop: float = 0.0     # stop once ||q - reference|| drops below; 0 = disabled

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        sched = tuple(int(j) for j in self.reset_schedule)
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("reset schedule must be strictly increasing")
        object.__setattr__(self, "reset_schedule", sched)


@dataclass
class IterateRecord:
    iter: int
    G: float
    h0: float
    h1: float
    h2: float
    delta2: float | None = None
    q_snapshot: Potential | None = None
    event: str = ""


def reset_potential(pv: ProblemVector) -> ProblemVector:
    """Zero the trial potential, keeping the boundary parameters bit-identical."""
    return pv.with_zero_potential()


class _State:
    """Mutable iterate (h0, h1, h2, q-values) with the product-space algebra."""

    def __init__(self, pv: ProblemVector):
        self.h0 = pv.h0
        self.h1 = pv.h1
        self.h2 = pv.h2
        self.q = pv.q.values.copy()
        self.dx = pv.q.dx

    def moved(self, alpha: float, d: GradientVector):
        s = _State.__new__(_State)
        s.h0 = self.h0 + alpha * d.d_h0
        s.h1 = self.h1 + alpha * d.d_h1
        s.h2 = self.h2 + alpha * d.d_h2
        s.q = self.q + alpha * d.d_q
        s.dx = self.dx
        return s

    def eval_G(self, target, rtol):
        return _eval_g_raw(self.h0, self.h1, self.h2, Potential(self.q), target, rtol)

    def eval_grad(self, target, rtol):
        return _eval_grad_raw(self.h0, self.h1, self.h2, Potential(self.q), target, rtol)


def _neg(g: GradientVector) -> GradientVector:
    return GradientVector(-g.d_h0, -g.d_h1, -g.d_h2, -g.d_q)


def _line_search(phi, G0: float, gnorm: float, ls: LineSearchConfig):
    """Minimize phi(alpha) for alpha > 0 given phi(0) = G0.

    Brackets a decrease by geometric growth (or backtracking when the first
    probe overshoots), then contracts with golden-section steps.  Returns
    the best evaluated (alpha, phi(alpha)); raises StepFailure when no
    decrease is found within the evaluation budget.
    """
    a1 = ls.alpha_init / (1.0 + gnorm)
    evals = 0
    best_a, best_f = 0.0, G0

    f1 = phi(a1)
    evals += 1
    if f1 < best_f:
        best_a, best_f = a1, f1

    if f1 < G0:
        a0, f0 = 0.0, G0
        a2 = ls.growth * a1
        f2 = phi(a2)
        evals += 1
        if f2 < best_f:
            best_a, best_f = a2, f2
        while f2 < f1 and evals < ls.max_evals:
            a0, f0 = a1, f1
            a1, f1 = a2, f2
            a2 = ls.growth * a2
            f2 = phi(a2)
            evals += 1
            if f2 < best_f:
                best_a, best_f = a2, f2
    else:
        a2, f2 = a1, f1
        while evals < ls.max_evals:
            a1 = a1 / ls.growth
            f1 = phi(a1)
            evals += 1
            if f1 < best_f:
                best_a, best_f = a1, f1
            if f1 < G0:
                break
            a2, f2 = a1, f1
        if not (f1 < G0):
            raise StepFailure("no decrease along search direction", last_alpha=a1)
        a0, f0 = 0.0, G0

    # golden-section contraction of the triple a0 < a1 < a2 with f1 lowest
    while (a2 - a0) > ls.shrink_tol * a1 and evals < ls.max_evals:
        if (a1 - a0) > (a2 - a1):
            x = a1 - _GOLDEN * (a1 - a0)
        else:
            x = a1 + _GOLDEN * (a2 - a1)
        fx = phi(x)
        evals += 1
        if fx < best_f:
            best_a, best_f = x, fx
        if x < a1:
            if fx < f1:
                a2, f2 = a1, f1
                a1, f1 = x, fx
            else:
                a0, f0 = x, fx
        else:
            if fx < f1:
                a0, f0 = a1, f1
                a1, f1 = x, fx
            else:
                a2, f2 = x, fx

    return best_a, best_f


def steepest_descent_step(
    pv: ProblemVector, target: SpectralTarget, cfg: DescentConfig, rtol=None
):
    """One accepted step along the negative gradient.

    Returns (new vector, record); at a point with vanishing gradient (or
    G below tolerance) the input is returned unchanged with a converged
    flag.  Raises StepFailure when the line search finds no decrease.
    """
    from .slcore import EIG_RTOL

    rtol = EIG_RTOL if rtol is None else rtol
    st = _State(pv)
    G, grad = st.eval_grad(target, rtol)
    gnorm = math.sqrt(grad_dot(grad, grad, st.dx))
    if G < cfg.g_tol or gnorm == 0.0:
        return pv, IterateRecord(0, G, pv.h0, pv.h1, pv.h2, event="converged")
    d = _neg(grad)
    alpha, G_new = _line_search(
        lambda a: st.moved(a, d).eval_G(target, rtol), G, gnorm, cfg.line_search
    )
    st = st.moved(alpha, d)
    new_pv = ProblemVector(st.h0, st.h1, st.h2, Potential(st.q))
    return new_pv, IterateRecord(1, G_new, st.h0, st.h1, st.h2, event="step")


def pr_cg_minimize(
    pv0: ProblemVector,
    target: SpectralTarget,
    cfg: DescentConfig,
    reference: Potential | None = None,
    rtol=None,
):
    """Full PR+ conjugate gradient descent; returns the iterate history.

    When a reference potential is supplied every record carries
    delta2 = ||q - reference||_L2.  Iterations listed in the reset
    schedule replace the step by zeroing the potential (boundary values
    kept) and restart the direction.  The final record always carries a
    snapshot of the potential.
    """
    from .slcore import EIG_RTOL

    rtol = EIG_RTOL if rtol is None else rtol
    st = _State(pv0)
    ref = None
    if reference is not None:
        if reference.grid_size != pv0.q.grid_size:
            raise ValueError("reference potential must live on the iterate grid")
        ref = reference.values

    records: list[IterateRecord] = []

    def delta2():
        if ref is None:
            return None
        return float(np.sqrt(trapezoid((st.q - ref) ** 2, st.dx)))

    def push(j, G, event=""):
        snap = None
        if cfg.snapshot_every and j > 0 and j % cfg.snapshot_every == 0:
            snap = Potential(st.q.copy())
        records.append(
            IterateRecord(j, G, st.h0, st.h1, st.h2, delta2(), snap, event)
        )

    G, grad = st.eval_grad(target, rtol)
    if G < cfg.g_tol:
        push(0, G, "converged")
        records[-1].q_snapshot = Potential(st.q.copy())
        return records
    push(0, G)
    d = _neg(grad)
    resets = set(cfg.reset_schedule)
    failed_once = False

    for j in range(1, cfg.max_iters + 1):
        try:
            if j in resets:
                st.q = np.zeros_like(st.q)
                G, grad = st.eval_grad(target, rtol)
                d = _neg(grad)
                failed_once = False
                push(j, G, "reset")
                continue

            gnorm = math.sqrt(grad_dot(grad, grad, st.dx))
            if gnorm == 0.0:
                push(j, G, "converged")
                break
            if grad_dot(grad, d, st.dx) >= 0.0:
                d = _neg(grad)  # not a descent direction: restart

            phi = lambda a: st.moved(a, d).eval_G(target, rtol)
            try:
                alpha, _ = _line_search(phi, G, gnorm, cfg.line_search)
                failed_once = False
            except StepFailure:
                steepest = (
                    d.d_h0 == -grad.d_h0
                    and d.d_h1 == -grad.d_h1
                    and d.d_h2 == -grad.d_h2
                    and np.array_equal(d.d_q, -grad.d_q)
                )
                if failed_once or steepest:
                    push(j, G, "line-search-failure")
                    break
                failed_once = True
                d = _neg(grad)
                try:
                    alpha, _ = _line_search(phi, G, gnorm, cfg.line_search)
                except StepFailure:
                    push(j, G, "line-search-failure")
                    break

            st = st.moved(alpha, d)
            G_new, grad_new = st.eval_grad(target, rtol)
            diff = GradientVector(
                grad_new.d_h0 - grad.d_h0,
                grad_new.d_h1 - grad.d_h1,
                grad_new.d_h2 - grad.d_h2,
                grad_new.d_q - grad.d_q,
            )
            beta = max(0.0, grad_dot(grad_new, diff, st.dx) / grad_dot(grad, grad, st.dx))
            if cfg.restart_every > 0 and j % cfg.restart_every == 0:
                beta = 0.0
            d = GradientVector(
                -grad_new.d_h0 + beta * d.d_h0,
                -grad_new.d_h1 + beta * d.d_h1,
                -grad_new.d_h2 + beta * d.d_h2,
                -grad_new.d_q + beta * d.d_q,
            )
            grad, G = grad_new, G_new

            event = ""
            stop = False
            if G < cfg.g_tol:
                event, stop = "converged", True
            d2 = delta2()
            if cfg.delta2_stop > 0.0 and d2 is not None and d2 <= cfg.delta2_stop:
                event, stop = "delta2-stop", True
            push(j, G, event)
            if stop:
                break
        except SolverFailure as exc:
            push(j, G, f"solver-failure: {exc}")
            break

    records[-1].q_snapshot = Potential(st.q.copy())
    return records
