"""Time integration of dX/dt = [phi(X), X], directly and in triangular form.

The decomposed form writes ``X(t) = Q U(t)* (Lam + Y(t)) U(t) Q*`` where
``Q* T Q = Lam + Y(0)`` is an ordered Schur form, ``Lam`` is the fixed
diagonal and ``Y`` is strictly upper triangular.  With
``phi(Lam + Y) = P + D + P*`` split into strictly upper, diagonal and
strictly lower parts, the pair evolves by

    Y' = [D + 2P, Lam + Y],      U' = (P - P*) U.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .integrator import StepControl, geometric_grid, integrate
from .matcore import SchurForm, adj, as_cmatrix, commutator, fro, schur_triangularize
from .philib import TOL_DOMAIN, PhiPair, apply_phi, builtin_pair


@dataclass(frozen=True)
class FlowTrajectory:
    times: np.ndarray
    states: tuple
    step_stats: tuple
    method: str
    status: str
    t_final: float
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class TriangularState:
    lam: np.ndarray
    y: np.ndarray
    u: np.ndarray
    t: float


@dataclass(frozen=True)
class PDSplit:
    p: np.ndarray
    d: np.ndarray


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def normality_defect(X) -> float:
    return fro(adj(X) @ X - X @ adj(X))


def spectral_domain(T, include_zero: bool = False, margin: float = 1e-8) -> tuple:
    """Interval ``[m, M]`` spanned by the singular values of ``T``.

    The flow keeps the singular values inside this interval, so it is the
    natural domain for a pair.  ``include_zero`` gives ``[0, M]``.
    """
    s = np.linalg.svd(as_cmatrix(T), compute_uv=False)
    hi = float(s[0]) * (1 + margin) if s[0] > 0 else 1.0
    lo = 0.0 if include_zero else float(s[-1]) * (1 - margin)
    return (lo, hi)


def vector_field(p: PhiPair, X, tol_domain: float = TOL_DOMAIN) -> np.ndarray:
    """[phi(X), X]."""
    X = as_cmatrix(X)
    return commutator(apply_phi(p, X, tol_domain), X)


def _direct_stop(ctrl):
    if not ctrl.normality_tol:
        return None
    return lambda X: normality_defect(X) <= ctrl.normality_tol


def integrate_direct(p: PhiPair, T, t_end: float, ctrl: StepControl | None = None,
                     sample_times=None, tol_domain: float = TOL_DOMAIN) -> FlowTrajectory:
    """Integrate the flow from ``X(0) = T`` up to ``t_end``.

    States are recorded at ``sample_times`` (default: a geometric grid) and
    at the final time.  The run stops early with status ``"converged"`` once
    the normality defect stays below ``ctrl.normality_tol`` for
    ``ctrl.settle_steps`` steps; set ``normality_tol=0`` to disable.
    """
    ctrl = ctrl or StepControl()
    T = as_cmatrix(T)
    apply_phi(p, T, tol_domain)  # domain check on the initial value
    samples = geometric_grid(t_end) if sample_times is None else sample_times
    res = integrate(lambda X: vector_field(p, X, tol_domain), T, t_end, ctrl,
                    sample_times=samples, stop_check=_direct_stop(ctrl))
    states = list(res.states)
    states[0] = T
    return FlowTrajectory(
        times=np.array(res.times),
        states=tuple(_frozen(s) for s in states),
        step_stats=tuple(res.step_stats),
        method="direct",
        status=res.status,
        t_final=res.t_final,
    )


def split_phi(p: PhiPair, lam, y, tol_domain: float = TOL_DOMAIN) -> PDSplit:
    """Strictly upper (P) and diagonal (D) parts of phi(Lam + Y)."""
    phi = apply_phi(p, as_cmatrix(lam) + as_cmatrix(y), tol_domain)
    return PDSplit(p=np.triu(phi, 1), d=np.diag(np.diag(phi)))


def _y_mask(n: int, zero_block: int) -> np.ndarray:
    mask = np.triu(np.ones((n, n), dtype=bool), 1)
    mask[:zero_block, :zero_block] = False
    return mask


def integrate_decomposed(p: PhiPair, schur: SchurForm, t_end: float, ctrl: StepControl | None = None,
                         sample_times=None, tol_domain: float = TOL_DOMAIN):
    """Integrate the triangular/unitary system started from a Schur form.

    After each accepted step ``Y`` is masked back to exact strict upper
    triangularity (keeping the zero-eigenvalue block at zero) and ``U`` is
    replaced by the unitary factor of its polar decomposition.  A masked
    residual above ``ctrl.mask_tol`` rejects the step.

    Returns ``(triangular_states, trajectory)``; the trajectory holds the
    recombined ``X(t)`` in the original coordinates, with ``states[0]``
    being ``Q R Q*``.
    """
    ctrl = ctrl or StepControl()
    Q = as_cmatrix(schur.rotation)
    R = as_cmatrix(schur.triangular)
    n = len(R)
    lam = np.diag(np.diag(R))
    mask = _y_mask(n, schur.zero_block)
    Y0 = np.where(mask, R, 0.0)
    resid_log = []

    def fun(s):
        Y, U = s[0], s[1]
        sp = split_phi(p, lam, Y, tol_domain)
        return np.stack([commutator(sp.d + 2 * sp.p, lam + Y), (sp.p - adj(sp.p)) @ U])

    def post(s):
        Y = s[0]
        resid = float(np.max(np.abs(Y[~mask]))) if (~mask).any() else 0.0
        W, _, Vh = np.linalg.svd(s[1])
        resid_log.append(resid)
        return np.stack([np.where(mask, Y, 0.0), W @ Vh]), resid

    stop = None
    if ctrl.normality_tol:
        stop = lambda s: normality_defect(lam + s[0]) <= ctrl.normality_tol
    samples = geometric_grid(t_end) if sample_times is None else sample_times
    s0 = np.stack([Y0, np.eye(n, dtype=complex)])
    res = integrate(fun, s0, t_end, ctrl, sample_times=samples, post_step=post, stop_check=stop)

    tri, xs = [], []
    for t, s in zip(res.times, res.states):
        Y, U = s[0], s[1]
        tri.append(TriangularState(lam=_frozen(lam), y=_frozen(Y), u=_frozen(U), t=float(t)))
        xs.append(_frozen(Q @ adj(U) @ (lam + Y) @ U @ adj(Q)))
    traj = FlowTrajectory(
        times=np.array(res.times),
        states=tuple(xs),
        step_stats=tuple(res.step_stats),
        method="decomposed",
        status=res.status,
        t_final=res.t_final,
        info={"max_mask_residual": max(resid_log, default=0.0), "rotation": _frozen(Q)},
    )
    return tri, traj


def aluthge_transform(T, lam: float) -> np.ndarray:
    """The lambda-Aluthge transform |T|^lam U |T|^(1-lam).

    For invertible ``T`` this equals ``|T|^lam T |T|^(-lam)``, which is how
    it is evaluated.  ``lam > 1`` is accepted (the formula is spectral).
    """
    T = as_cmatrix(T)
    w, V = np.linalg.eigh(adj(T) @ T)
    if w[0] <= (1e-13 * max(w[-1], 1e-300)) or w[0] <= 0:
        raise DomainError("the Aluthge transform needs an invertible matrix")
    s = np.sqrt(w)
    A = (V * s**lam) @ adj(V)
    B = (V * s ** (-lam)) @ adj(V)
    return A @ T @ B


def aluthge_iterate(T, t: float, n: int) -> np.ndarray:
    """n-fold iterate of the (t/n)-Aluthge transform."""
    X = as_cmatrix(T)
    if t == 0:
        return X.copy()
    for _ in range(n):
        X = aluthge_transform(X, t / n)
    return X


def aluthge_flow(T, t: float, ctrl: StepControl | None = None) -> np.ndarray:
    """F^A_t(T) from a high-accuracy direct integration."""
    T = as_cmatrix(T)
    if t == 0:
        return T.copy()
    ctrl = ctrl or StepControl(rtol=1e-11, atol=1e-13, normality_tol=0.0)
    pair = builtin_pair("aluthge", spectral_domain(T))
    return np.array(integrate_direct(pair, T, t, ctrl, sample_times=[]).final)


def aluthge_limit_error(T, t: float, n: int, reference=None) -> float:
    """Frobenius distance between the iterate and the Aluthge flow at time t."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t == 0:
        return 0.0
    ref = aluthge_flow(T, t) if reference is None else as_cmatrix(reference)
    return fro(aluthge_iterate(T, t, n) - ref)


__all__ = [
    "FlowTrajectory", "TriangularState", "PDSplit", "StepControl", "normality_defect",
    "spectral_domain", "vector_field", "integrate_direct", "split_phi", "integrate_decomposed",
    "aluthge_transform", "aluthge_iterate", "aluthge_flow", "aluthge_limit_error",
    "schur_triangularize",
]
