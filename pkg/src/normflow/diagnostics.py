"""Quantities monitored along flow trajectories."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import CapabilityError
from .matcore import adj, as_cmatrix, commutator, divided_difference, fro
from .philib import TOL_DOMAIN, PhiPair, apply_phi

SCHATTEN_P = (2, 4, 6)


@dataclass(frozen=True)
class DiagRecord:
    t: float
    op_norm: float
    schatten: dict
    normality_defect: float
    y_energy: float | None
    commutator_energy: float | None
    s_products: np.ndarray
    spectrum: np.ndarray
    haagerup_energy: float
    singular_values: np.ndarray = field(repr=False, default=None)


def self_commutator(X) -> np.ndarray:
    """[X*, X] = X*X - XX*."""
    return adj(X) @ X - X @ adj(X)


def haagerup_energy(X) -> float:
    """E(X) = Tr([X*, X]^2) / 4."""
    C = self_commutator(as_cmatrix(X))
    return float(np.real(np.trace(C @ C))) / 4.0


def record(X, context=None, t: float | None = None) -> DiagRecord:
    """Snapshot of norms, defects and spectra of X.

    ``context`` is an optional TriangularState; when present the Lyapunov
    energy ``||Y||_2^2`` and ``||[Lam, Y]||_2^2`` are filled in.
    """
    X = as_cmatrix(X)
    s = np.linalg.svd(X, compute_uv=False)
    C = self_commutator(X)
    y_energy = comm_energy = None
    if context is not None:
        y_energy = fro(context.y) ** 2
        comm_energy = fro(commutator(context.lam, context.y)) ** 2
        if t is None:
            t = context.t
    return DiagRecord(
        t=float("nan") if t is None else float(t),
        op_norm=float(s[0]),
        schatten={p: float(np.sum(s**p) ** (1.0 / p)) for p in SCHATTEN_P},
        normality_defect=fro(C),
        y_energy=y_energy,
        commutator_energy=comm_energy,
        s_products=np.cumprod(s),
        spectrum=np.linalg.eigvals(X),
        haagerup_energy=float(np.real(np.trace(C @ C))) / 4.0,
        singular_values=s,
    )


def trajectory_records(traj, tri_states=None) -> list:
    ctx = tri_states if tri_states is not None else [None] * len(traj.times)
    return [record(X, c, t) for t, X, c in zip(traj.times, traj.states, ctx)]


def rate_predict(p: PhiPair, lam) -> dict:
    """Hessian rate coefficients kappa_ij for i < j with lam_i != lam_j.

    kappa_ij = (phi1^[1] + phi2^[1])(|l_i|, |l_j|) / (|l_i| + |l_j|) * |l_i - l_j|^2;
    |y_ij(t)| is then expected to decay like exp(-kappa_ij t).
    """
    lam = np.asarray(lam)
    ev = np.diag(lam) if lam.ndim == 2 else lam
    if p.phi1.order < 1 or p.phi2.order < 1:
        raise CapabilityError("rate_predict needs first derivatives of both phi1 and phi2")
    out = {}
    n = len(ev)
    for i in range(n):
        for j in range(i + 1, n):
            if ev[i] == ev[j]:
                continue
            a, b = abs(ev[i]), abs(ev[j])
            dd = divided_difference(p.phi1, [a, b], 1) + divided_difference(p.phi2, [a, b], 1)
            out[(i, j)] = float(dd / (a + b) * abs(ev[i] - ev[j]) ** 2)
    return out


def energy_gradient_fd(X, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of E in the inner product Re Tr(Y*X)."""
    X = as_cmatrix(X)
    G = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        for unit in (1.0, 1j):
            E = np.zeros_like(X)
            E[idx] = unit * h
            d = (haagerup_energy(X + E) - haagerup_energy(X - E)) / (2 * h)
            G[idx] += unit * d
    return G


def gradient_check(X, h: float = 1e-5) -> float:
    """Relative discrepancy between [[X*,X],X] and minus the FD gradient of E."""
    X = as_cmatrix(X)
    F = commutator(self_commutator(X), X)
    G = energy_gradient_fd(X, h)
    return fro(F + G) / max(fro(F), 1e-14)


def fixed_point_residual(p: PhiPair, X, tol_domain: float = TOL_DOMAIN) -> float:
    """||[phi(X), X]||_2."""
    X = as_cmatrix(X)
    return fro(commutator(apply_phi(p, X, tol_domain), X))


def trace_positivity(p: PhiPair, X, tol_domain: float = TOL_DOMAIN) -> float:
    """Tr(phi(X) [X*, X]), nonnegative for pairs satisfying the monotonicity condition."""
    X = as_cmatrix(X)
    return float(np.real(np.trace(apply_phi(p, X, tol_domain) @ self_commutator(X))))


def frobenius_rate(p: PhiPair, X, tol_domain: float = TOL_DOMAIN) -> float:
    """d/dt ||X||_2^2 along the flow, which equals -2 Tr(phi(X)[X*,X])."""
    return -2.0 * trace_positivity(p, X, tol_domain)


def spectrum_distance(a, b) -> float:
    """Largest distance under the optimal matching of two eigenvalue multisets."""
    a, b = np.asarray(a), np.asarray(b)
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def track_spectrum(spectra) -> np.ndarray:
    """Order each sample's eigenvalues by nearest neighbour to the previous sample."""
    spectra = [np.asarray(s) for s in spectra]
    out = [spectra[0]]
    for s in spectra[1:]:
        cost = np.abs(out[-1][:, None] - s[None, :])
        r, c = linear_sum_assignment(cost)
        out.append(s[c[np.argsort(r)]])
    return np.array(out)


def max_increase(values) -> float:
    """Largest step-to-step increase (<= 0 means non-increasing)."""
    v = np.asarray(values, dtype=float)
    return float(np.max(np.diff(v))) if len(v) > 1 else -math.inf


def max_decrease(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.max(-np.diff(v))) if len(v) > 1 else -math.inf


def fit_decay_rate(times, values, lo: float, hi: float) -> tuple:
    """Least-squares rate r in values ~ C exp(-r t), using samples with lo <= values <= hi.

    Returns ``(rate, number_of_points)``; the rate is nan with fewer than 3 points.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (v >= lo) & (v <= hi)
    if sel.sum() < 3:
        return float("nan"), int(sel.sum())
    slope, _ = np.polyfit(t[sel], np.log(v[sel]), 1)
    return float(-slope), int(sel.sum())


def diag_header(n: int) -> list:
    return (["t", "op_norm", "s2", "s4", "s6", "ndefect", "y_energy", "comm_energy"]
            + [f"sprod_{k}" for k in range(1, n + 1)] + ["energy_H"])


def diag_row(r: DiagRecord) -> list:
    nan = float("nan")
    return ([r.t, r.op_norm, r.schatten[2], r.schatten[4], r.schatten[6], r.normality_defect,
             nan if r.y_energy is None else r.y_energy,
             nan if r.commutator_energy is None else r.commutator_energy]
            + list(map(float, r.s_products)) + [r.haagerup_energy])


def spectrum_header(n: int) -> list:
    cols = ["t"]
    for k in range(1, n + 1):
        cols += [f"re_lambda_{k}", f"im_lambda_{k}"]
    return cols


def spectrum_row(r: DiagRecord, ordered=None) -> list:
    ev = r.spectrum if ordered is None else ordered
    row = [r.t]
    for z in ev:
        row += [float(z.real), float(z.imag)]
    return row
