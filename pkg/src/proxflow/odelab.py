"""High-accuracy reference flows and empirical order / rate measurements.

The lab integrates two smooth dynamics with classical fixed-step RK4:

    xdot = -grad F(x)                        (descent flow)
    xddot + eta(t)*xdot = -grad F(x)         (damped inertial flow)

and uses them as oracles to measure, for each solver step, the one-step
deviation from the true trajectory as a function of the step scale h.
A first-order method shows a log-log slope of about 2 (local error
O(h^2)); the RK4 oracle's own error is O(substep^4) and therefore
negligible on the grids used here.

Conventions for the one-step tests:

* accelerated mode sets lam = h^2, plain mode lam = h;
* the discrete velocity is matched through x_{k-1} = x_k - h*v_k;
* decaying damping is singular at t = 0, so those flows start at a time
  t0 > 0 and the solver's counter is aligned as k = round(t0/h), which
  makes gamma_k agree with 1 - eta(k*h)*h to O(h^2) at the start time;
* for the balance-coefficient method the coefficient is matched to the
  trajectory as c_k = -grad g(x_k), the value it attains after any exact
  step on a smooth problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import damping as damping_mod
from .damping import (
    CombinedDamping,
    ConstantDamping,
    DecayingDamping,
    NoDamping,
    Schedule,
)
from .errors import NumericalError, ParameterError
from .solvers import Problem, SolverState, StepConfig, _STEPS, check_method
from .space import Element, as_element, norm


def damping_coefficient(schedule: Schedule | None, t: float) -> float:
    """The continuous damping eta(t) that a schedule discretizes."""
    if schedule is None or isinstance(schedule, NoDamping):
        return 0.0
    if isinstance(schedule, DecayingDamping):
        return schedule.r / t
    if isinstance(schedule, ConstantDamping):
        return schedule.r
    if isinstance(schedule, CombinedDamping):
        return schedule.r1 / t + schedule.r2
    raise ParameterError(f"unknown schedule {schedule!r}")


@dataclass(frozen=True)
class GradientFlow:
    """Descent flow xdot = -grad F(x) for a smooth oracle."""

    grad: object

    @property
    def second_order(self) -> bool:
        return False


@dataclass(frozen=True)
class AcceleratedFlow:
    """Damped inertial flow xddot + eta(t)*xdot = -grad F(x)."""

    grad: object
    schedule: Schedule

    @property
    def second_order(self) -> bool:
        return True

    def eta(self, t: float) -> float:
        return damping_coefficient(self.schedule, t)


@dataclass(eq=False)
class Trajectory:
    ts: np.ndarray
    xs: np.ndarray                 # (steps+1,) + shape of x0
    vs: np.ndarray | None = None   # velocities, second-order flows only

    def at(self, i: int) -> Element:
        return self.xs[i]


def reference_trajectory(
    flow,
    x0: Element,
    v0: Element | None = None,
    t0: float = 0.0,
    T: float = 1.0,
    steps: int = 100,
) -> Trajectory:
    """Integrate a flow with fixed-step RK4 from t0 to T.

    Second-order flows need ``v0``; decaying damping needs t0 > 0 (the
    coefficient r/t is singular at zero).  Raises NumericalError if the
    state leaves float range.
    """
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if T <= t0:
        raise ParameterError(f"need T > t0, got T={T}, t0={t0}")
    x0 = as_element(x0, "x0")
    grad = flow.grad.grad
    dt = (T - t0) / steps
    ts = t0 + dt * np.arange(steps + 1)

    if flow.second_order:
        if v0 is None:
            raise ParameterError("second-order flow needs an initial velocity v0")
        if isinstance(flow.schedule, (DecayingDamping, CombinedDamping)) and t0 <= 0:
            raise ParameterError("decaying damping is singular at t=0; start at t0 > 0")
        v0 = as_element(v0, "v0")
        y = np.stack([x0, v0])

        def deriv(t, y):
            out = np.empty_like(y)
            out[0] = y[1]
            out[1] = -flow.eta(t) * y[1] - grad(y[0])
            return out

    else:
        y = x0.copy()

        def deriv(t, y):
            return -grad(y)

    xs = np.empty((steps + 1,) + x0.shape)
    vs = np.empty((steps + 1,) + x0.shape) if flow.second_order else None
    _record(xs, vs, 0, y, flow.second_order)
    for i in range(steps):
        t = ts[i]
        k1 = deriv(t, y)
        k2 = deriv(t + dt / 2, y + (dt / 2) * k1)
        k3 = deriv(t + dt / 2, y + (dt / 2) * k2)
        k4 = deriv(t + dt, y + dt * k3)
        y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"reference trajectory left float range at t={ts[i + 1]:g}")
        _record(xs, vs, i + 1, y, flow.second_order)
    return Trajectory(ts=ts, xs=xs, vs=vs)


def _record(xs, vs, i, y, second_order):
    if second_order:
        xs[i] = y[0]
        vs[i] = y[1]
    else:
        xs[i] = y


def reference_integrator_order(steps_list=(32, 64, 128, 256), T: float = 2.0) -> float:
    """Self-check: measured global order of the RK4 oracle on xdot = -x."""
    oracle = _ScalarDecay()
    errs = []
    for steps in steps_list:
        traj = reference_trajectory(GradientFlow(oracle), np.array([1.0]), T=T, steps=steps)
        errs.append(abs(traj.xs[-1][0] - math.exp(-T)))
    slope = np.polyfit(np.log([T / s for s in steps_list]), np.log(errs), 1)[0]
    return float(slope)


class _ScalarDecay:
    def grad(self, x):
        return x

    def value(self, x):
        return 0.5 * float(x @ x)


# ---------------------------------------------------------------------------
# order measurement


@dataclass(eq=False)
class OrderFit:
    """Least-squares fit of log10(error) against log10(h)."""

    hs: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    r_squared: float


def _fit_loglog(hs, errors) -> OrderFit:
    hs = np.asarray(hs, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if len(hs) < 3:
        raise ParameterError(f"need at least 3 points for an order fit, got {len(hs)}")
    lx, ly = np.log10(hs), np.log10(errors)
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_res = float(np.sum((ly - fitted) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return OrderFit(hs=hs, errors=errors, slope=float(slope),
                    intercept=float(intercept), r_squared=r2)


def total_gradient(problem: Problem):
    """Gradient oracle of F = f + g + w; every present term must be smooth."""
    terms = [t for t in (problem.f, problem.g, problem.w) if t is not None]
    for t in terms:
        if not hasattr(t, "grad"):
            raise ParameterError(f"term {getattr(t, 'name', t)!r} has no gradient; "
                                 "order measurement needs a smooth instance")

    class _Total:
        def grad(self, x):
            out = np.zeros_like(x)
            for t in terms:
                out = out + t.grad(x)
            return out

        def value(self, x):
            return float(sum(t.value(x) for t in terms))

    return _Total()


def total_lipschitz(problem: Problem) -> float | None:
    """Sum of the terms' gradient Lipschitz estimates, when all report one."""
    total = 0.0
    for t in (problem.f, problem.g, problem.w):
        if t is None:
            continue
        est = t.lipschitz() if hasattr(t, "lipschitz") else None
        if est is None:
            return None
        total += est
    return total


def local_error_order(
    method: str,
    problem: Problem,
    schedule: Schedule | None,
    h_values,
    x0: Element,
    v0: Element | None = None,
    t0: float = 1.0,
    rk_substeps: int = 64,
) -> OrderFit:
    """Fit the one-step error of a solver step against the reference flow.

    For each h the prox parameter is lam = h^2 (accelerated) or lam = h
    (plain); one step is taken from a state matched to the trajectory
    point (x0, v0) as described in the module docstring, and the error
    ||x_step - x(t+h)|| is fitted on log-log axes.  The largest steps are
    dropped above 0.1/sqrt(L) when a Lipschitz estimate is available,
    where higher-order terms would pollute the fit.  First-order methods
    give a slope near 2.
    """
    check_method(method, problem)
    x0 = as_element(x0, "x0")
    h_values = sorted(float(h) for h in h_values)
    if math.log10(h_values[-1] / h_values[0]) < 1.5 - 1e-9:
        raise ParameterError("h_values must span at least 1.5 decades")
    total = total_gradient(problem)
    L = total_lipschitz(problem)
    if L is not None and L > 0:
        kept = [h for h in h_values if h <= 0.1 / math.sqrt(L)]
        if len(kept) >= 3:
            h_values = kept

    accelerated = schedule is not None and not isinstance(schedule, NoDamping)
    if accelerated and v0 is None:
        # Deterministic, generic direction; avoid anything proportional to
        # grad F(x0), which could cancel the leading error term.
        v0 = np.cos(1.0 + np.arange(x0.size)).reshape(x0.shape)
    step_fn = _STEPS[method]

    errors = []
    for h in h_values:
        if accelerated:
            lam = h * h
            cfg = StepConfig(lam=lam, schedule=schedule)
            k0 = max(1, round(t0 / h))
            t_start = k0 * h
            g0 = damping_mod.gamma(schedule, k0, h)
            x_prev = x0 - h * v0
            x_hat = damping_mod.extrapolate(x0, x_prev, g0)
            state = SolverState(
                x=x0, x_prev=x_prev, x_hat=x_hat, c=_matched_c(method, problem, x0),
                k=k0, estimate=x0,
            )
            new = step_fn(state, problem, cfg)
            flow = AcceleratedFlow(total, schedule)
            ref = reference_trajectory(flow, x0, v0, t0=t_start, T=t_start + h,
                                       steps=rk_substeps)
        else:
            lam = h
            cfg = StepConfig(lam=lam, schedule=None)
            state = SolverState(
                x=x0, x_prev=x0, x_hat=x0, c=_matched_c(method, problem, x0),
                k=1, estimate=x0,
            )
            new = step_fn(state, problem, cfg)
            flow = GradientFlow(total)
            ref = reference_trajectory(flow, x0, t0=0.0, T=h, steps=rk_substeps)
        errors.append(norm(new.x - ref.xs[-1]))
    return _fit_loglog(h_values, errors)


def _matched_c(method: str, problem: Problem, x: Element) -> Element:
    # Match the balance coefficient to the trajectory point; the exact
    # g-prox makes c_k = -grad g(x_k) hold after every smooth step.
    if method == "admm":
        return -problem.g.grad(x)
    return np.zeros_like(x)


# ---------------------------------------------------------------------------
# continuous-rate measurement


@dataclass(eq=False)
class RateFit:
    """Fitted decay of a reference trajectory.

    ``kind="exponential"``: rate a from ||x - x*|| ~ exp(-a t) (so the
    value compares directly to the curvature m, or to sqrt(m) for the
    critically damped inertial flow; the squared distance would double
    it).  ``kind="power"``: exponent p from F - F* ~ t^p, p < 0.
    """

    kind: str
    exponent: float
    r_squared: float


def continuous_rate_check(
    flow,
    objective,
    x_star: Element,
    F_star: float,
    T: float,
    *,
    x0: Element,
    v0: Element | None = None,
    t0: float = 0.0,
    steps: int = 4000,
    kind: str = "exponential",
    window: tuple[float, float] = (0.5, 1.0),
    envelope: bool | None = None,
) -> RateFit:
    """Fit the decay rate of a reference trajectory toward a known optimum.

    Exponential fits regress log||x(t) - x*|| on t over the trailing
    ``window`` fraction of the horizon.  Power fits regress
    log(F(x(t)) - F*) on log t; by default they first take the
    decreasing upper envelope of the samples, since inertial
    trajectories on convex problems oscillate around the optimum and the
    envelope is what the t^p bound describes.
    """
    traj = reference_trajectory(flow, x0, v0, t0=t0, T=T, steps=steps)
    lo = t0 + window[0] * (T - t0)
    hi = t0 + window[1] * (T - t0)
    keep = (traj.ts >= lo) & (traj.ts <= hi)

    if kind == "exponential":
        dist = np.array([norm(x - x_star) for x in traj.xs])
        mask = keep & (dist > 0)
        slope, intercept = np.polyfit(traj.ts[mask], np.log(dist[mask]), 1)
        fitted = slope * traj.ts[mask] + intercept
        r2 = _r_squared(np.log(dist[mask]), fitted)
        return RateFit(kind=kind, exponent=float(-slope), r_squared=r2)

    if kind == "power":
        if envelope is None:
            envelope = True
        gaps = np.array([objective.value(x) - F_star for x in traj.xs])
        gaps = np.maximum(gaps, 0.0)
        if envelope:
            gaps = np.maximum.accumulate(gaps[::-1])[::-1]
        mask = keep & (gaps > 0) & (traj.ts > 0)
        slope, intercept = np.polyfit(np.log(traj.ts[mask]), np.log(gaps[mask]), 1)
        fitted = slope * np.log(traj.ts[mask]) + intercept
        r2 = _r_squared(np.log(gaps[mask]), fitted)
        return RateFit(kind=kind, exponent=float(slope), r_squared=r2)

    raise ParameterError(f"unknown fit kind {kind!r}; use 'exponential' or 'power'")


def _r_squared(y, fitted) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
