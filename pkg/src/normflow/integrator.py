"""Adaptive Dormand-Prince 5(4) integrator with PI step-size control.

Works on complex numpy arrays of any shape.  Steps are shortened to land
exactly on the requested sample times, so no interpolation error enters the
recorded trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, IntegrationError, StiffnessError

# Dormand-Prince tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B - B_LOW

# PI controller exponents (Hairer & Wanner, DOPRI5 defaults)
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
FAC_MIN, FAC_MAX = 0.2, 10.0


@dataclass(frozen=True)
class StepControl:
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float | None = None
    h_max: float = 0.1
    h_min: float = 1e-14
    normality_tol: float = 1e-8
    settle_steps: int = 10
    safety: float = 0.9
    max_steps: int = 5_000_000
    mask_tol: float = 1e-9

    def with_(self, **kw) -> "StepControl":
        return replace(self, **kw)


@dataclass
class RawResult:
    times: list
    states: list
    step_stats: list
    status: str
    t_final: float
    y_final: np.ndarray


def _err_norm(err, y0, y1, ctrl):
    scale = ctrl.atol + ctrl.rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(fun, y0, f0, ctrl, t_end):
    scale = ctrl.atol + ctrl.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, ctrl.h_max, t_end if t_end > 0 else h)
    try:
        y1 = y0 + h * f0
        f1 = fun(y1)
        d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h
    except DomainError:
        return h * 0.1
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h, h1, ctrl.h_max)


def integrate(fun, y0, t_end, ctrl: StepControl, sample_times=None, post_step=None, stop_check=None) -> RawResult:
    """Integrate the autonomous system ``y' = fun(y)`` from t = 0 to ``t_end``.

    ``post_step(y) -> (y_fixed, residual)`` runs after every accepted step;
    a residual above ``ctrl.mask_tol`` rejects the step.  ``stop_check(y)``
    returning True for ``ctrl.settle_steps`` consecutive accepted steps ends
    the run with status ``"converged"``.  States are recorded at t = 0, at
    each sample time and at the final time.
    """
    y = np.array(y0, dtype=complex)
    t_end = float(t_end)
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    samples = sorted({float(s) for s in (sample_times if sample_times is not None else []) if 0 < s < t_end})
    samples.append(t_end)
    times, states, stats = [0.0], [y.copy()], []
    if t_end == 0.0:
        return RawResult(times, states, stats, "t_end_reached", 0.0, y)

    f = fun(y)
    h = ctrl.h_init if ctrl.h_init else _initial_step(fun, y, f, ctrl, t_end)
    t = 0.0
    err_old = 1e-4
    settled = 0
    rejected = 0
    last_rejected = False
    next_idx = 0
    status = "t_end_reached"
    for _ in range(ctrl.max_steps):
        target = samples[next_idx]
        h = min(h, ctrl.h_max)
        hit = t + h >= target * (1 - 1e-14)
        h_step = target - t if hit else h
        if h_step < ctrl.h_min and not hit:
            raise StiffnessError(f"step size {h_step:.3g} below h_min at t={t:.6g}", t, y.copy())
        try:
            K = [f]
            for s in range(1, 7):
                ys = y + h_step * sum(a * k for a, k in zip(A[s], K) if a != 0.0)
                K.append(fun(ys))
            y_new = ys  # stage 7 is evaluated at the 5th-order solution (FSAL)
            err = h_step * sum(e * k for e, k in zip(E, K) if e != 0.0)
            err_n = _err_norm(err, y, y_new, ctrl)
        except DomainError:
            rejected += 1
            h = 0.25 * h_step
            last_rejected = True
            if h < ctrl.h_min:
                raise IntegrationError(f"state left the domain near t={t:.6g}", t, y.copy()) from None
            continue

        if not np.isfinite(err_n) or err_n > 1.0:
            rejected += 1
            fac = FAC_MIN if not np.isfinite(err_n) else max(FAC_MIN, ctrl.safety * err_n ** (-ALPHA))
            h = h_step * fac
            last_rejected = True
            if h < ctrl.h_min:
                raise StiffnessError(f"step size {h:.3g} below h_min at t={t:.6g}", t, y.copy())
            continue

        f_new = K[6]
        if post_step is not None:
            y_fix, resid = post_step(y_new)
            if resid > ctrl.mask_tol:
                rejected += 1
                h = 0.5 * h_step
                last_rejected = True
                continue
            if y_fix is not y_new:
                y_new = y_fix
                f_new = fun(y_new)

        t = target if hit else t + h_step
        y, f = y_new, f_new
        stats.append((h_step, err_n, rejected))
        rejected = 0

        fac = ctrl.safety * max(err_n, 1e-10) ** (-ALPHA) * err_old ** BETA
        fac = min(FAC_MAX, max(FAC_MIN, fac))
        if last_rejected:
            fac = min(fac, 1.0)
        err_old = max(err_n, 1e-4)
        last_rejected = False
        if not hit or h_step >= h * 0.5:
            h = h_step * fac if not hit else max(h, h_step * fac)

        if hit:
            times.append(t)
            states.append(y.copy())
            next_idx += 1
            if next_idx >= len(samples):
                break

        if stop_check is not None:
            settled = settled + 1 if stop_check(y) else 0
            if settled >= ctrl.settle_steps:
                status = "converged"
                if times[-1] != t:
                    times.append(t)
                    states.append(y.copy())
                break
    else:
        raise IntegrationError(f"max_steps={ctrl.max_steps} exceeded at t={t:.6g}", t, y.copy())
    return RawResult(times, states, stats, status, t, y)


def geometric_grid(t_end: float, t_min: float = 1e-2, ratio: float = 1.3) -> list:
    """``0, t_min, t_min*ratio, ...`` up to and including ``t_end``."""
    if t_end <= 0:
        return [0.0]
    grid = [0.0]
    t = t_min
    while t < t_end:
        grid.append(t)
        t *= ratio
    grid.append(float(t_end))
    return grid
