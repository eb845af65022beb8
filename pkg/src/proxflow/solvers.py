"""Operator-splitting steps for three-term objectives and the run loop.

The solvers minimize  f(x) + g(x) + w(x)  where f and g are prox-capable
(possibly nonsmooth) and w is smooth.  Three step families are provided:

* :func:`step_admm` - two backward passes coupled through a balance
  coefficient ``c`` that plays the role of the ADMM dual variable and
  keeps stationary points of the underlying flow fixed.  With w absent
  and no momentum this is exactly classical two-block ADMM.
* :func:`step_davis_yin` - three-operator splitting.  It reduces to
  Douglas-Rachford when w is absent and to forward-backward (proximal
  gradient) when f is absent.
* :func:`step_tseng` - forward-backward-forward splitting for problems
  with f absent; requires lam below 1/L for the gradient of w (no bound
  is enforced, callers pick lam).

Momentum enters only through the extrapolated point

    xhat_k = x_k + gamma_k * (x_k - x_{k-1}),

so with ``NoDamping`` every step reproduces its classical fixed-point
iteration exactly.  In accelerated mode the step scale is h = sqrt(lam);
in plain mode h = lam.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import damping, space
from .damping import NoDamping, Schedule
from .errors import ConfigurationError, ParameterError
from .space import Element

METHODS = ("admm", "dy", "dr", "fb", "tseng")

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True, eq=False)
class Problem:
    """Three-term split; absent terms behave as the zero function."""

    f: object | None = None
    g: object | None = None
    w: object | None = None

    def __post_init__(self):
        if self.f is None and self.g is None and self.w is None:
            raise ConfigurationError("at least one of f, g, w must be present")

    def prox_f(self, v: Element, lam: float) -> Element:
        return v if self.f is None else self.f.prox(v, lam)

    def prox_g(self, v: Element, lam: float) -> Element:
        return v if self.g is None else self.g.prox(v, lam)

    def grad_w(self, x: Element) -> Element:
        return np.zeros_like(x) if self.w is None else self.w.grad(x)

    def value(self, x: Element) -> float | None:
        """Objective F(x) when every present term can report a value."""
        total = 0.0
        for term in (self.f, self.g, self.w):
            if term is None:
                continue
            if not hasattr(term, "value"):
                return None
            total += term.value(x)
        return total


@dataclass(frozen=True)
class StepConfig:
    """Prox parameter and momentum schedule for one solver run.

    The step scale used by the schedule is derived: h = sqrt(lam) in
    accelerated mode, h = lam otherwise.
    """

    lam: float
    schedule: Schedule | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ParameterError(f"lam must be > 0, got {self.lam}")
        if self.schedule is None:
            object.__setattr__(self, "schedule", NoDamping())

    @property
    def accelerated(self) -> bool:
        return not isinstance(self.schedule, NoDamping)

    @property
    def h(self) -> float:
        return math.sqrt(self.lam) if self.accelerated else self.lam


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iterate bundle carried between steps.

    ``estimate`` is the output of the backward (prox-g) pass, the natural
    solution estimate: it is feasible whenever g is an indicator and it
    converges to the minimizer also for the Davis-Yin family, whose raw
    fixed-point variable ``x`` does not.  ``last_half`` retains the
    intermediate point x_{k+1/2} for residual bookkeeping.
    """

    x: Element
    x_prev: Element
    x_hat: Element
    c: Element
    k: int
    last_half: Element | None = None
    estimate: Element | None = None


def initial_state(x0: Element, c0: Element | None = None) -> SolverState:
    """State at k = 0: xhat_0 = x_0 and, unless supplied, c_0 = 0."""
    x0 = space.as_element(x0, "x0")
    c0 = np.zeros_like(x0) if c0 is None else space.as_element(c0, "c0")
    space.check_same_shape(x0, c0)
    return SolverState(x=x0, x_prev=x0, x_hat=x0, c=c0, k=0, estimate=x0)


def _advance(state: SolverState, x_next: Element, cfg: StepConfig, *, c, last_half, estimate):
    k1 = state.k + 1
    g = damping.gamma(cfg.schedule, k1, cfg.h)
    x_hat1 = damping.extrapolate(x_next, state.x, g)
    return SolverState(
        x=x_next, x_prev=state.x, x_hat=x_hat1, c=c, k=k1,
        last_half=last_half, estimate=estimate,
    )


def step_admm(state: SolverState, problem: Problem, cfg: StepConfig) -> SolverState:
    """One balance-coefficient splitting step (f and g required, w optional).

    x_{k+1/2} = prox_f(xhat_k - lam*grad_w(xhat_k) + lam*c_k)
    x_{k+1}   = prox_g(x_{k+1/2} - lam*c_k)
    c_{k+1}   = c_k + (x_{k+1} - x_{k+1/2}) / lam

    Momentum extrapolates the primal iterate only; the coefficient c (the
    dual variable) is never extrapolated, unlike "fast" ADMM variants
    that accelerate the multiplier update as well.
    """
    if problem.f is None or problem.g is None:
        raise ConfigurationError("this splitting needs both f and g (w optional)")
    lam = cfg.lam
    xh = state.x_hat
    c = state.c
    x_half = problem.prox_f(xh - lam * problem.grad_w(xh) + lam * c, lam)
    x_next = problem.prox_g(x_half - lam * c, lam)
    c_next = c + (x_next - x_half) / lam
    return _advance(state, x_next, cfg, c=c_next, last_half=x_half, estimate=x_next)


def step_davis_yin(state: SolverState, problem: Problem, cfg: StepConfig) -> SolverState:
    """One three-operator splitting step (g required; f, w optional).

    x_{k+1/4} = prox_f(xhat_k)
    x_{k+1/2} = 2*x_{k+1/4} - xhat_k
    x_{k+3/4} = prox_g(x_{k+1/2} - lam*grad_w(x_{k+1/4}))
    x_{k+1}   = xhat_k + x_{k+3/4} - x_{k+1/4}
    """
    if problem.g is None:
        raise ConfigurationError("this splitting needs g (f and w optional)")
    lam = cfg.lam
    xh = state.x_hat
    x_q = problem.prox_f(xh, lam)
    x_half = 2.0 * x_q - xh
    x_tq = problem.prox_g(x_half - lam * problem.grad_w(x_q), lam)
    x_next = xh + x_tq - x_q
    return _advance(state, x_next, cfg, c=state.c, last_half=x_half, estimate=x_tq)


def step_tseng(state: SolverState, problem: Problem, cfg: StepConfig) -> SolverState:
    """One forward-backward-forward step (f must be absent; g and w required).

    x_{k+1/2} = prox_g(xhat_k - lam*grad_w(xhat_k))
    x_{k+1}   = x_{k+1/2} - lam*(grad_w(x_{k+1/2}) - grad_w(xhat_k))
    """
    if problem.f is not None:
        raise ConfigurationError("forward-backward-forward requires f absent")
    if problem.g is None or problem.w is None:
        raise ConfigurationError("forward-backward-forward needs both g and w")
    lam = cfg.lam
    xh = state.x_hat
    gw_hat = problem.grad_w(xh)
    x_half = problem.prox_g(xh - lam * gw_hat, lam)
    x_next = x_half - lam * (problem.grad_w(x_half) - gw_hat)
    return _advance(state, x_next, cfg, c=state.c, last_half=x_half, estimate=x_half)


_STEPS = {
    "admm": step_admm,
    "dy": step_davis_yin,
    "dr": step_davis_yin,
    "fb": step_davis_yin,
    "tseng": step_tseng,
}


def check_method(method: str, problem: Problem) -> None:
    """Validate a (method, problem) pairing, including the dr/fb reductions."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "admm" and (problem.f is None or problem.g is None):
        raise ConfigurationError("admm needs both f and g")
    if method in ("dy", "dr", "fb") and problem.g is None:
        raise ConfigurationError(f"{method} needs g")
    if method == "dr" and problem.w is not None:
        raise ConfigurationError("dr is the w-absent reduction; use method 'dy' instead")
    if method == "fb" and problem.f is not None:
        raise ConfigurationError("fb is the f-absent reduction; use method 'dy' instead")
    if method == "tseng":
        if problem.f is not None:
            raise ConfigurationError("tseng requires f absent")
        if problem.g is None or problem.w is None:
            raise ConfigurationError("tseng needs both g and w")


def dy_fixed_point_operator(problem: Problem, lam: float, x: Element) -> Element:
    """The averaged map P whose fixed points x satisfy, with xbar = prox_f(x),
    (grad f + grad g + grad w)(xbar) = 0:

        P = I/2 + (C_g o (C_f - lam*grad_w o J_f))/2 - lam*(grad_w o J_f)/2

    where C denotes the reflection 2*J - I.  One Davis-Yin step with no
    momentum satisfies x_{k+1} = P(xhat_k).
    """
    if lam <= 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    x_q = problem.prox_f(x, lam)
    w_q = lam * problem.grad_w(x_q)
    c_f = 2.0 * x_q - x
    arg = c_f - w_q
    c_g = 2.0 * problem.prox_g(arg, lam) - arg
    return 0.5 * x + 0.5 * c_g - 0.5 * w_q


def tseng_fixed_point_operator(problem: Problem, lam: float, x: Element) -> Element:
    """The one-step map (I - lam*grad_w) o J_g o (I - lam*grad_w) + lam*grad_w."""
    if lam <= 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    gw = problem.grad_w(x)
    y = problem.prox_g(x - lam * gw, lam)
    return y - lam * problem.grad_w(y) + lam * gw


def residual(
    problem: Problem,
    lam: float,
    x: Element,
    method: str,
    state: SolverState | None = None,
) -> float:
    """Fixed-point residual of the chosen method at ``x``.

    For the Davis-Yin family this is ||x - P(x)||, for Tseng
    ||x - Phi(x)|| with the forward-backward-forward map.  The balance
    coefficient method has no one-point operator, so its residual is
    read off the latest step as ||x_{k+1} - x_{k+1/2}|| + ||x_{k+1} - x_k||
    (``state`` required).  Residuals need not decrease monotonically
    under momentum.
    """
    if method in ("dy", "dr", "fb"):
        return space.norm(x - dy_fixed_point_operator(problem, lam, x))
    if method == "tseng":
        return space.norm(x - tseng_fixed_point_operator(problem, lam, x))
    if method == "admm":
        if state is None or state.last_half is None:
            raise ParameterError("admm residual is defined from the latest step; pass state")
        return space.norm(state.x - state.last_half) + space.norm(state.x - state.x_prev)
    raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")


def _trace_residual(method: str, prev: SolverState, new: SolverState) -> float:
    # One DY/Tseng step evaluates the fixed-point map at xhat_k, so
    #   ||xhat_k - x_{k+1}|| = ||xhat_k - Phi(xhat_k)||  comes for free.
    if method == "admm":
        return space.norm(new.x - new.last_half) + space.norm(new.x - prev.x)
    return space.norm(new.x - prev.x_hat)


# ---------------------------------------------------------------------------
# stopping rules

StopRule = Callable[[SolverState, float], bool]


def stop_on_residual(tol: float = 1e-10) -> StopRule:
    """Stop once the per-iteration fixed-point residual drops below ``tol``."""

    def rule(state: SolverState, resid: float) -> bool:
        return resid <= tol

    return rule


def stop_on_relative_change(tol: float = 1e-10) -> StopRule:
    """Stop once ||x_k - x_{k-1}|| <= tol * ||x_{k-1}||."""

    def rule(state: SolverState, resid: float) -> bool:
        denom = space.norm(state.x_prev)
        delta = space.norm(state.x - state.x_prev)
        return delta <= tol * denom if denom > 0 else delta <= tol

    return rule


def stop_on_estimate_change(tol: float = 1e-10) -> StopRule:
    """Stop once the solution estimate moves by <= tol in relative terms.

    Stateful: construct a fresh rule for every run.
    """
    prev: list[Element | None] = [None]

    def rule(state: SolverState, resid: float) -> bool:
        cur = state.estimate
        last, prev[0] = prev[0], cur
        if last is None:
            return False
        denom = space.norm(last)
        delta = space.norm(cur - last)
        return delta <= tol * denom if denom > 0 else delta <= tol

    return rule


# ---------------------------------------------------------------------------
# run loop

@dataclass(eq=False)
class Trace:
    """Per-iteration record of a run; row 0 is the initial point.

    ``objectives`` holds F evaluated at the solution estimate (equal to
    x_k for the balance-coefficient and forward-backward methods); NaN
    when the objective is unavailable or recording was disabled.  The
    residual at row 0 is NaN (no step has been taken).
    """

    ks: np.ndarray
    objectives: np.ndarray
    residuals: np.ndarray
    times: np.ndarray
    status: str

    def __len__(self) -> int:
        return len(self.ks)

    @property
    def iterations(self) -> int:
        return len(self.ks) - 1


def run(
    method: str,
    problem: Problem,
    cfg: StepConfig,
    x0: Element,
    *,
    stop: StopRule | None = None,
    max_iters: int = 10000,
    c0: Element | None = None,
    callback: Optional[Callable[[SolverState], None]] = None,
    record_objective: bool = True,
) -> tuple[SolverState, Trace]:
    """Iterate the chosen step from ``x0`` until a stopping rule fires.

    Parameters
    ----------
    method : one of "admm", "dy", "dr", "fb", "tseng"
        "dr" and "fb" validate the corresponding reduction (w or f
        absent) and then run the three-operator step.
    stop : callable (state, residual) -> bool, optional
        Checked after every step; ``None`` runs the full budget.
    max_iters : int
        Step budget, must be >= 1.
    c0 : array, optional
        Initial balance coefficient (zero unless supplied).
    callback : callable, optional
        Invoked with each new state, e.g. to track custom metrics.
    record_objective : bool
        Disable to skip objective evaluations in the trace (useful when
        the objective itself is expensive, as with a full SVD).

    Returns
    -------
    (final_state, trace) where ``trace.status`` is "converged",
    "max-iters" or "diverged" (iterate norm above 1e12 or non-finite).
    """
    if max_iters < 1:
        raise ParameterError(f"max_iters must be >= 1, got {max_iters}")
    check_method(method, problem)
    step_fn = _STEPS[method]
    state = initial_state(x0, c0)

    ks = [0]
    objectives = [_objective(problem, state, record_objective)]
    residuals = [math.nan]
    start = time.perf_counter()
    times = [0.0]
    status = "max-iters"

    for _ in range(max_iters):
        prev = state
        state = step_fn(state, problem, cfg)
        resid = _trace_residual(method, prev, state)
        ks.append(state.k)
        objectives.append(_objective(problem, state, record_objective))
        residuals.append(resid)
        times.append(time.perf_counter() - start)
        if callback is not None:
            callback(state)
        xnorm = space.norm(state.x)
        if not math.isfinite(xnorm) or xnorm > DIVERGENCE_NORM:
            status = "diverged"
            break
        if stop is not None and stop(state, resid):
            status = "converged"
            break

    trace = Trace(
        ks=np.asarray(ks, dtype=np.int64),
        objectives=np.asarray(objectives, dtype=np.float64),
        residuals=np.asarray(residuals, dtype=np.float64),
        times=np.asarray(times, dtype=np.float64),
        status=status,
    )
    return state, trace


def _objective(problem: Problem, state: SolverState, record: bool) -> float:
    if not record:
        return math.nan
    val = problem.value(state.estimate)
    return math.nan if val is None else val
