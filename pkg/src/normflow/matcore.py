"""Dense complex linear algebra for the matrix flows.

Everything here works on ``numpy`` complex128 arrays of shape ``(n, n)``.
Moduli ``|X|`` and functions of them are computed through a Hermitian
eigendecomposition of ``X*X`` (never through an SVD of ``X``) so that scalar
functions see the clamped eigenvalues directly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import CapabilityError, DimensionError, DomainError, ShapeError
from .scalar import ScalarFunction

TOL_UNITARY = 1e-10
TOL_HERM = 1e-10


def as_cmatrix(X) -> np.ndarray:
    """Validate a square finite matrix and return it as complex128."""
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    return A


def adj(X: np.ndarray) -> np.ndarray:
    return X.conj().T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def fro(X) -> float:
    return float(np.linalg.norm(X))


def singular_values(X) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(as_cmatrix(X), compute_uv=False)


def schatten_norm(X, p: float) -> float:
    s = singular_values(X)
    if math.isinf(p):
        return float(s[0])
    return float(np.sum(s**p) ** (1.0 / p))


def is_unitary(U, tol: float = TOL_UNITARY) -> bool:
    U = as_cmatrix(U)
    return np.linalg.norm(adj(U) @ U - np.eye(len(U)), 2) <= tol


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + adj(A))


@dataclass(frozen=True)
class PolarFactors:
    unitary_part: np.ndarray
    modulus: np.ndarray


@dataclass(frozen=True)
class SchurForm:
    rotation: np.ndarray
    triangular: np.ndarray
    eigen_order: tuple
    zero_block: int = 0  # geometric multiplicity of eigenvalue 0 (leading zero columns)


def _psd_eig(A: np.ndarray):
    """Eigenpairs of a Hermitian PSD matrix with round-off negatives clamped."""
    w, V = np.linalg.eigh(hermitian_part(A))
    return np.clip(w, 0.0, None), V


def _from_eig(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    return hermitian_part((V * w) @ adj(V))


def polar_decompose(X) -> PolarFactors:
    """Polar decomposition ``X = U |X|`` with ``U`` unitary.

    On ``ker |X|`` the partial isometry is completed with the left singular
    vectors belonging to zero singular values, so ``U`` is always unitary.
    Only completion-independent quantities should be relied on.
    """
    X = as_cmatrix(X)
    W, _, Vh = np.linalg.svd(X)
    w, V = _psd_eig(adj(X) @ X)
    return PolarFactors(unitary_part=W @ Vh, modulus=_from_eig(np.sqrt(w), V))


def hermitian_apply(f, A, tol_herm: float = TOL_HERM, domain_tol: float = 0.0) -> np.ndarray:
    """Spectral calculus ``f(A) = V f(D) V*`` for Hermitian ``A``.

    Eigenvalues within ``domain_tol`` outside ``f.domain`` are clamped onto
    it; anything further out raises :class:`DomainError`.
    """
    A = as_cmatrix(A)
    if np.linalg.norm(A - adj(A), 2) > tol_herm * max(1.0, np.linalg.norm(A, 2)):
        raise ShapeError("hermitian_apply needs a Hermitian matrix")
    w, V = np.linalg.eigh(hermitian_part(A))
    w = _check_domain(w, getattr(f, "domain", (-math.inf, math.inf)), domain_tol, "eigenvalue")
    return _from_eig(np.asarray(f(w), dtype=float), V)


def _check_domain(w, domain, tol, what):
    lo, hi = domain
    bad = (w < lo - tol) | (w > hi + tol)
    if np.any(bad):
        val = w[bad][0]
        raise DomainError(f"{what} {val:.17g} outside domain [{lo}, {hi}] (tolerance {tol:g})")
    return np.clip(w, lo, hi)


def matrix_abs(X, side: str = "left") -> np.ndarray:
    """``left``: (X*X)^{1/2};  ``right``: (XX*)^{1/2}."""
    X = as_cmatrix(X)
    if side == "left":
        G = adj(X) @ X
    elif side == "right":
        G = X @ adj(X)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    w, V = _psd_eig(G)
    return _from_eig(np.sqrt(w), V)


def abs_function(f, X, side: str = "left", domain_tol: float = 0.0) -> np.ndarray:
    """``f(|X|)`` (side='left') or ``f(|X*|)`` (side='right') from one eigh call."""
    X = as_cmatrix(X)
    G = adj(X) @ X if side == "left" else X @ adj(X)
    w, V = _psd_eig(G)
    s = _check_domain(np.sqrt(w), f.domain, domain_tol, "singular value")
    return _from_eig(np.asarray(f(s), dtype=float), V)


# --- ordered Schur form -----------------------------------------------------

def _swap_adjacent(Q: np.ndarray, R: np.ndarray, k: int) -> None:
    """Exchange diagonal entries k, k+1 of triangular R by a Givens rotation (in place)."""
    a, b, c = R[k, k], R[k + 1, k + 1], R[k, k + 1]
    v = np.array([c, b - a])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return
    v = v / nv
    G = np.array([[v[0], -np.conj(v[1])], [v[1], np.conj(v[0])]])
    R[:, k:k + 2] = R[:, k:k + 2] @ G
    R[k:k + 2, :] = adj(G) @ R[k:k + 2, :]
    Q[:, k:k + 2] = Q[:, k:k + 2] @ G
    R[k + 1, k] = 0.0
    R[k + 1, k + 1] = a
    R[k, k] = b


def _cluster_order(eigs: np.ndarray, tol: float) -> list:
    """Cluster labels sorted by ascending modulus, ties broken by argument."""
    n = len(eigs)
    label = -np.ones(n, dtype=int)
    reps = []
    for i in range(n):
        if label[i] >= 0:
            continue
        members = [j for j in range(n) if label[j] < 0 and abs(eigs[j] - eigs[i]) <= tol]
        for j in members:
            label[j] = len(reps)
        reps.append(np.mean(eigs[members]))

    def cmp(p, q):
        mp, mq = abs(reps[p]), abs(reps[q])
        if abs(mp - mq) > tol:
            return -1 if mp < mq else 1
        ap, aq = _arg(reps[p]), _arg(reps[q])
        return (ap > aq) - (ap < aq)

    rank = {c: r for r, c in enumerate(sorted(range(len(reps)), key=functools.cmp_to_key(cmp)))}
    return [rank[label[i]] for i in range(n)]


def _arg(z) -> float:
    a = float(np.angle(z))
    return math.pi if a <= -math.pi else a


def _sort_schur(Q: np.ndarray, R: np.ndarray, tol: float) -> None:
    n = len(R)
    keys = _cluster_order(np.diag(R).copy(), tol)
    # bubble sort by cluster rank; equal ranks are never swapped
    for sweep in range(n):
        swapped = False
        for k in range(n - 1):
            if keys[k] > keys[k + 1]:
                _swap_adjacent(Q, R, k)
                keys[k], keys[k + 1] = keys[k + 1], keys[k]
                swapped = True
        if not swapped:
            break


def _normalise_phases(Q: np.ndarray) -> np.ndarray:
    # make the largest component of every Schur vector real positive
    idx = np.argmax(np.abs(Q), axis=0)
    ph = Q[idx, np.arange(Q.shape[1])]
    return Q / (ph / np.abs(ph))


def schur_triangularize(T, tol_eig_group: float | None = None) -> SchurForm:
    """Unitary triangularisation ``Q* T Q = R`` with ordered diagonal.

    Diagonal entries ascend by modulus (ties by argument in (-pi, pi]),
    equal eigenvalues are contiguous, and when ``T`` is singular the first
    ``dim ker T`` columns of ``R`` are exactly zero.
    """
    T = as_cmatrix(T)
    n = len(T)
    scale = max(np.linalg.norm(T, 2), 1e-300)
    tol = 1e-8 * scale if tol_eig_group is None else tol_eig_group
    _, s, Vh = np.linalg.svd(T)
    mg = int(np.sum(s <= tol))
    if mg:
        # kernel first, then a Schur basis of the compression to its complement
        V = adj(Vh)
        Q = np.hstack([V[:, n - mg:], V[:, :n - mg]])
        if mg < n:
            T1 = adj(Q) @ T @ Q
            _, Qc = scipy.linalg.schur(T1[mg:, mg:], output="complex")
            Q[:, mg:] = Q[:, mg:] @ Qc
    else:
        _, Q = scipy.linalg.schur(T, output="complex")
    if mg < n:
        R = np.triu(adj(Q) @ T @ Q)
        Qb = np.eye(n - mg, dtype=complex)
        _sort_schur(Qb, R[mg:, mg:].copy(), tol)
        Q[:, mg:] = Q[:, mg:] @ Qb
    Q = _normalise_phases(Q)
    R = np.triu(adj(Q) @ T @ Q)
    R[:, :mg] = 0.0
    return SchurForm(rotation=Q, triangular=R, eigen_order=tuple(np.diag(R)), zero_block=mg)


# --- divided differences ------------------------------------------------------

def divided_difference(f: ScalarFunction, points: Sequence[float], k: int | None = None,
                       cluster_width: float | None = None) -> float:
    """The k-th divided difference ``f^{[k]}(x_1, ..., x_{k+1})``.

    Coincident points use ``f^{(m)}/m!``.  See :func:`newton_coefficients`
    for the treatment of nearly coincident points.
    """
    return float(newton_coefficients(f, points, k, cluster_width)[-1])


def complete_homogeneous(y: Sequence[float], degree: int) -> np.ndarray:
    """``h_0(y), ..., h_degree(y)`` (complete homogeneous symmetric polynomials)."""
    h = np.zeros(degree + 1)
    h[0] = 1.0
    for v in y:
        for r in range(1, degree + 1):
            h[r] += v * h[r - 1]
    return h


def _taylor_dd(f, x: np.ndarray) -> float | None:
    # f^{[k]}(x) = sum_{m>=k} f^{(m)}(c)/m! h_{m-k}(x - c) around the cluster centre c
    k = len(x) - 1
    top = getattr(f, "order", 0)
    if top < k:
        return None
    c = 0.5 * (x[0] + x[-1])
    h = complete_homogeneous(x - c, top - k)
    total = 0.0
    for m in range(k, top + 1):
        total += float(f.derivative(c, m)) / math.factorial(m) * h[m - k]
    return total


def divided_difference_table(f: ScalarFunction, points: Sequence[float],
                             cluster_width: float | None = None) -> tuple:
    """Sorted points and the table ``D[i, j] = f^{[j]}(x_i, ..., x_{i+j})``.

    A table entry whose points span less than ``cluster_width`` (default
    ``1e-2 * max(1, max|x|)``) is evaluated from the Taylor expansion about
    the middle of its span when enough derivatives are attached; this avoids
    the cancellation of the quotient recursion on nearly coincident points.
    """
    x = np.sort(np.asarray(points, dtype=float))
    m = len(x)
    _, counts = np.unique(x, return_counts=True)
    need = int(counts.max()) - 1
    order = getattr(f, "order", 0)
    if need > order:
        raise CapabilityError(
            f"coincident points need derivative order {need}, {getattr(f, 'name', 'f')} has {order}"
        )
    if cluster_width is None:
        cluster_width = 1e-2 * max(1.0, float(np.max(np.abs(x))))
    D = np.zeros((m, m))
    D[:, 0] = f(x)
    for j in range(1, m):
        for i in range(m - j):
            span = x[i + j] - x[i]
            val = None
            if span == 0.0:
                val = float(f.derivative(x[i], j)) / math.factorial(j)
            elif span < cluster_width:
                val = _taylor_dd(f, x[i:i + j + 1])
            if val is None:
                val = (D[i + 1, j - 1] - D[i, j - 1]) / span
            D[i, j] = val
    return x, D


def newton_coefficients(f: ScalarFunction, points: Sequence[float], k: int | None = None,
                        cluster_width: float | None = None) -> np.ndarray:
    """Newton-form coefficients ``f^{[j]}(x_1, ..., x_{j+1})`` on the sorted points."""
    if k is not None and k != len(points) - 1:
        raise ValueError(f"order {k} needs {k + 1} points, got {len(points)}")
    _, D = divided_difference_table(f, points, cluster_width)
    return D[0].copy()


def elementary_symmetric(values: Sequence[float]) -> np.ndarray:
    """``e_0, ..., e_n`` of the given values."""
    coeffs = np.array([1.0])
    for v in values:
        coeffs = np.convolve(coeffs, [1.0, float(v)])
    return coeffs


def merge_close(values: Sequence[float], tol: float) -> np.ndarray:
    """Snap values closer than ``tol`` to their cluster mean (so they coincide exactly)."""
    x = np.sort(np.asarray(values, dtype=float))
    out = x.copy()
    start = 0
    for i in range(1, len(x) + 1):
        if i == len(x) or x[i] - x[i - 1] > tol:
            out[start:i] = x[start:i].mean()
            start = i
    return out


def hermite_interp_poly(f: ScalarFunction, eigenvalues: Sequence[float], merge_tol: float | None = None) -> np.ndarray:
    """Coefficients ``c_0..c_{n-1}`` (ascending powers) of the interpolation polynomial.

    Uses the symmetric form
    ``c_k = sum_j (-1)^(n-1-j-k) e_{n-1-j-k}(lam) (x^j f)^{[n-1]}(lam)``.
    The divided differences of ``x^j f`` come from the product rule
    ``(x^j f)^{[n-1]}(x_1..x_n) = sum_r h_{j-r}(x_1..x_{r+1}) f^{[n-1-r]}(x_{r+1}..x_n)``,
    so only the table of ``f`` itself is formed.  Eigenvalues within
    ``merge_tol`` (default ``1e-8 * max(1, max|lam|)``) are treated as one
    repeated eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    n = len(lam)
    if n == 0:
        return np.zeros(0)
    if merge_tol is None:
        merge_tol = 1e-8 * max(1.0, float(np.max(np.abs(lam))))
    x, D = divided_difference_table(f, merge_close(lam, merge_tol))
    e = elementary_symmetric(x)
    dd = np.zeros(n)
    for j in range(n):
        for r in range(min(j, n - 1) + 1):
            dd[j] += complete_homogeneous(x[:r + 1], j - r)[j - r] * D[r, n - 1 - r]
    c = np.zeros(n)
    for k in range(n):
        for j in range(n - k):
            m = n - 1 - j - k
            c[k] += (-1) ** m * e[m] * dd[j]
    return c


def polyval_matrix(coeffs: Sequence[float], A) -> np.ndarray:
    """Horner evaluation of ``sum c_k A^k``."""
    A = as_cmatrix(A)
    out = np.zeros_like(A)
    eye = np.eye(len(A))
    for c in reversed(list(coeffs)):
        out = out @ A + c * eye
    return out


# --- text format ----------------------------------------------------------------

def format_matrix(X) -> str:
    X = as_cmatrix(X)
    lines = [str(len(X))]
    for row in X:
        lines.append(" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty matrix text")
    n = int(tokens[0])
    body = tokens[1:]
    if len(body) != n * n:
        raise DimensionError(f"header says n={n}, found {len(body)} entries")
    return as_cmatrix(np.array([complex(t) for t in body]).reshape(n, n))


def write_matrix(path, X) -> None:
    Path(path).write_text(format_matrix(X))


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
