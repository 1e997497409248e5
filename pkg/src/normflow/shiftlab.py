"""Weighted shift dynamics through their weight sequences.

For a unilateral weighted shift ``Sf`` (``Sf e_k = f_k e_{k+1}``) the
Aluthge flow stays a weighted shift whose log-weights evolve by the Poisson
semigroup ``P_t = exp(t(B - I))``, B the backward shift:

    (P_t g)_k = sum_j t^j e^{-t} / j! * g_{k+j}.

The lambda-Aluthge transform averages neighbouring log-weights with
weights (1 - lam, lam), so n iterates give a Binomial(n, lam) average.
Infinite sequences are represented by a finite window plus a tail
convention: ``"none"``, ``"constant"`` (extension by the last value) or
``"periodic"`` (the window repeats).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom, poisson

from .errors import CoverageError, DomainError

CUTOFF_TOL = 1e-12
EPS = 0.2
TAILS = ("none", "constant", "periodic")


@dataclass(frozen=True)
class WeightSequence:
    values: np.ndarray
    floor: float | None = None
    tail: str = "constant"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("weights must be finite and nonnegative")
        if self.floor is not None and np.any(v < self.floor):
            raise DomainError(f"weight below floor {self.floor}")
        if self.tail not in TAILS:
            raise ValueError(f"tail must be one of {TAILS}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def window(self, length: int) -> np.ndarray:
        """First ``length`` weights, extending by the tail convention."""
        return _extend(self.values, length, self.tail)

    def log(self) -> np.ndarray:
        if np.any(self.values <= 0):
            raise DomainError("log-weights need strictly positive weights")
        return np.log(self.values)


def _extend(v, length, tail):
    v = np.asarray(v, dtype=float)
    if length <= len(v):
        return v[:length]
    if tail == "periodic":
        return np.resize(v, length)
    if tail != "constant":
        raise CoverageError(f"need {length} values, only {len(v)} available")
    return np.concatenate([v, np.full(length - len(v), v[-1])])


def poisson_cutoff(t: float, cutoff_tol: float = CUTOFF_TOL) -> int:
    """Smallest j >= t + 10 sqrt(t) + 50 whose Poisson(t) mass up to j is >= 1 - cutoff_tol."""
    j = int(math.ceil(t + 10 * math.sqrt(t) + 50))
    while poisson.sf(j, t) > cutoff_tol:
        j += 16
    return j


def poisson_weights(t: float, cutoff_tol: float = CUTOFF_TOL) -> np.ndarray:
    if t < 0:
        raise DomainError("Poisson averaging needs t >= 0")
    if t == 0:
        return np.ones(1)
    return poisson.pmf(np.arange(poisson_cutoff(t, cutoff_tol) + 1), t)


def _average(g, w, length, tail):
    """out_k = sum_j w_j g_{k+j} for k < length."""
    need = length + len(w) - 1
    gg = _extend(g, need, tail)
    return np.correlate(gg, w, mode="valid")[:length]


def poisson_average(g, t: float, cutoff_tol: float = CUTOFF_TOL, length: int | None = None,
                    tail: str = "constant") -> np.ndarray:
    """(P_t g)_k for k < length (default: len(g)).

    With ``tail="none"`` only the coordinates whose Poisson window lies in
    the given data can be produced; asking for more raises CoverageError.
    """
    g = np.asarray(g, dtype=float)
    w = poisson_weights(t, cutoff_tol)
    if t == 0:
        return g.copy() if length is None else _extend(g, length, tail)
    if length is None:
        length = len(g) if tail != "none" else len(g) - len(w) + 1
        if length <= 0:
            raise CoverageError(f"Poisson window at t={t} needs {len(w)} values, got {len(g)}")
    return _average(g, w, length, tail)


def binomial_average(g, lam: float, n: int, length: int | None = None, tail: str = "constant") -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if n == 0:
        return g.copy() if length is None else _extend(g, length, tail)
    w = binom.pmf(np.arange(n + 1), n, lam)
    if length is None:
        length = len(g) if tail != "none" else len(g) - n
    return _average(g, w, length, tail)


def cesaro_average(g, n: int, length: int | None = None, tail: str = "constant") -> np.ndarray:
    """(M_n g)_k = (1/n) sum_{j<n} g_{k+j}."""
    g = np.asarray(g, dtype=float)
    if length is None:
        length = len(g)
    return _average(g, np.full(n, 1.0 / n), length, tail)


def aluthge_flow_shift(f: WeightSequence, t: float, cutoff_tol: float = CUTOFF_TOL,
                       length: int | None = None) -> WeightSequence:
    """Weights of the Aluthge flow F^A_t(Sf) = S exp(P_t log f)."""
    if t == 0 and length is None:
        return f
    g = f.log()
    out = np.exp(poisson_average(g, t, cutoff_tol, length=length, tail=f.tail))
    return WeightSequence(out, tail=f.tail)


def lambda_aluthge_shift(f: WeightSequence, lam: float, n: int, length: int | None = None) -> WeightSequence:
    """Weights of the n-th iterate of the lam-Aluthge transform of Sf."""
    if not 0.0 < lam:
        raise DomainError("lam must be positive")
    if n == 0 and length is None:
        return f
    g = f.log()
    return WeightSequence(np.exp(binomial_average(g, lam, n, length=length, tail=f.tail)), tail=f.tail)


def spectral_radius_limit(f: WeightSequence, t_list, n_list, cutoff_tol: float = CUTOFF_TOL) -> dict:
    """Sup norms of the Poisson and Cesaro averages of g = log f.

    With a constant tail both averages equal the last value beyond the
    window, so that value is included in the sup; a periodic tail makes
    the averages periodic and the window holds every value.  ``lim_gap`` is
    ``|min_t ||P_t g|| - min_n ||M_n g|| |``.
    """
    g = f.log()
    tail_val = abs(g[-1]) if f.tail == "constant" else 0.0
    L = len(g)

    def sup(a):
        return float(max(np.max(np.abs(a)), tail_val))

    p_norms = [sup(poisson_average(g, t, cutoff_tol, length=L, tail=f.tail)) for t in t_list]
    c_norms = [sup(cesaro_average(g, n, length=L, tail=f.tail)) for n in n_list]
    return {
        "t_list": [float(t) for t in t_list],
        "poisson_norms": p_norms,
        "n_list": [int(n) for n in n_list],
        "cesaro_norms": c_norms,
        "lim_gap": float(abs(min(p_norms) - min(c_norms))),
    }


@dataclass(frozen=True)
class SawtoothParams:
    n_max: int = 1024


def sawtooth_g(n_max: int) -> np.ndarray:
    """g_0 .. g_{n_max} of the sawtooth sequence.

    On [4^N, 2*4^N) g rises as 4^-N (n - 4^N) from 0 to 1; on
    [2*4^N, 4^(N+1)) it falls as 2^-(2N+1) (4^(N+1) - n) back to 0.
    """
    if n_max < 4:
        raise ValueError("n_max must be >= 4")
    n = np.arange(n_max + 1)
    g = np.zeros(n_max + 1)
    N = np.floor(np.log2(n[1:]) / 2).astype(int)
    # guard float log rounding at exact powers of 4
    N = np.where(4.0 ** (N + 1) <= n[1:], N + 1, N)
    N = np.where(4.0 ** N > n[1:], N - 1, N)
    lo, mid, hi = 4.0**N, 2 * 4.0**N, 4.0 ** (N + 1)
    m = n[1:]
    g[1:] = np.where(m < mid, (m - lo) / lo, (hi - m) / mid)
    return g


def sawtooth_weights(params: SawtoothParams) -> tuple:
    g = sawtooth_g(params.n_max)
    return g, np.exp(g)


def poisson_sum(g, n: int, t: float, cutoff_tol: float = CUTOFF_TOL) -> float:
    """c(t) = sum_k t^k e^{-t}/k! g_{n+k}, with a coverage check on g."""
    g = np.asarray(g, dtype=float)
    w = poisson_weights(t, cutoff_tol)
    need = n + len(w)
    if need > len(g):
        raise CoverageError(f"t={t:g} at n={n} needs the sequence up to index {need - 1}, "
                            f"only {len(g) - 1} generated (n_max >= {need - 1} required)")
    return float(np.dot(w, g[n:need]))


def oscillation_certificate(params: SawtoothParams, n: int = 1, N_range=None,
                            cutoff_tol: float = CUTOFF_TOL, eps: float = EPS, g=None) -> dict:
    """Poisson sums of the sawtooth at t = 4^N - n and t = 2*4^N - n.

    Without ``N_range`` every N >= 1 whose windows fit inside ``n_max`` is
    evaluated.  The certificate uses the largest such N: ``low`` must be at
    most eps + 1/4 and ``high`` at least 3/4 (1 - eps).
    """
    g = sawtooth_g(params.n_max) if g is None else np.asarray(g, dtype=float)
    if N_range is None:
        N_range = []
        N = 1
        while 2 * 4**N - n > 0 and n + poisson_cutoff(2 * 4**N - n, cutoff_tol) + 1 <= len(g):
            N_range.append(N)
            N += 1
        if not N_range:
            raise CoverageError(f"n_max={params.n_max} too small for any N >= 1")
    rows = []
    for N in N_range:
        t_lo, t_hi = 4**N - n, 2 * 4**N - n
        if t_lo <= 0:
            raise DomainError(f"t = 4^{N} - {n} must be positive")
        rows.append({"N": int(N), "t_low": float(t_lo), "t_high": float(t_hi),
                     "low": poisson_sum(g, n, t_lo, cutoff_tol),
                     "high": poisson_sum(g, n, t_hi, cutoff_tol)})
    best = max(rows, key=lambda r: r["N"])
    return {
        "n": int(n),
        "n_max": int(params.n_max),
        "eps": float(eps),
        "N": best["N"],
        "t_low": best["t_low"],
        "t_high": best["t_high"],
        "low": best["low"],
        "high": best["high"],
        "gap": best["high"] - best["low"],
        "certified": bool(best["low"] <= eps + 0.25 and best["high"] >= 0.75 * (1 - eps)),
        "per_N": rows,
    }


def write_weights(path, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for k, v in enumerate(np.asarray(values, dtype=float)):
            w.writerow([k, repr(float(v))])


def read_weights(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["value"]) for r in rows])
