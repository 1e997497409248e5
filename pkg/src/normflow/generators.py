"""Seeded matrix sources used by tests and the experiment runner."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .errors import ConfigError, DomainError
from .matcore import adj, schur_triangularize


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_gaussian(n: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def rescale_singular_values(X: np.ndarray, box=(0.5, 2.0)) -> np.ndarray:
    """Affinely map the singular values of X onto ``[box[0], box[1]]``."""
    a, b = box
    W, s, Vh = np.linalg.svd(X)
    if s[0] - s[-1] <= 1e-14 * max(s[0], 1.0):
        s2 = np.full_like(s, 0.5 * (a + b))
    else:
        s2 = a + (b - a) * (s - s[-1]) / (s[0] - s[-1])
    return (W * s2) @ Vh


def random_matrix(n: int, seed, box=(0.5, 2.0)) -> np.ndarray:
    """Complex Gaussian matrix with singular values spread over ``box``."""
    return rescale_singular_values(complex_gaussian(n, seed), box)


def triangular_random(n: int, seed, box=(0.5, 2.0)) -> np.ndarray:
    """Upper triangular start: masked Gaussian, rescaled, then re-triangularised.

    Rescaling the singular values destroys triangularity, so the result is
    the triangular factor of an ordered Schur form of the rescaled matrix.
    """
    G = np.triu(complex_gaussian(n, seed))
    return schur_triangularize(rescale_singular_values(G, box)).triangular


def random_unitary(n: int, seed) -> np.ndarray:
    return unitary_group.rvs(n, random_state=rng_from(seed)) if n > 1 else np.exp(
        2j * np.pi * rng_from(seed).random()) * np.ones((1, 1))


def random_normal(n: int, seed, box=(0.5, 2.0)) -> np.ndarray:
    rng = rng_from(seed)
    mod = rng.uniform(box[0], box[1], n)
    ph = np.exp(2j * np.pi * rng.random(n))
    U = random_unitary(n, rng)
    return (U * (mod * ph)) @ adj(U)


def random_hermitian(n: int, seed, interval=(0.5, 2.0), doubles: int = 0) -> np.ndarray:
    """Hermitian matrix with eigenvalues uniform in ``interval``.

    ``doubles`` eigenvalues are copied onto their neighbours, forcing exact
    repeated eigenvalues.
    """
    rng = rng_from(seed)
    w = rng.uniform(interval[0], interval[1], n)
    for k in range(min(doubles, n // 2)):
        w[2 * k + 1] = w[2 * k]
    U = random_unitary(n, rng)
    A = (U * w) @ adj(U)
    return 0.5 * (A + adj(A))


def jordan(lam: complex, n: int, y0: complex = 1.0) -> np.ndarray:
    """``lam*I + y0*N`` with N the nilpotent shift (ones above the diagonal)."""
    return lam * np.eye(n, dtype=complex) + y0 * np.eye(n, k=1, dtype=complex)


def shift_matrix(weights) -> np.ndarray:
    """Truncated unilateral weighted shift: ``(S f) e_k = f_k e_{k+1}``.

    The last weight is dropped, so the result is nilpotent.
    """
    f = np.asarray(weights, dtype=float)
    m = len(f)
    return np.diag(f[: m - 1].astype(complex), -1)


def cyclic_shift_matrix(weights) -> np.ndarray:
    """Weighted cyclic shift of size m: like :func:`shift_matrix` but with
    ``f_{m-1}`` wrapping ``e_{m-1}`` back to ``e_0``, which keeps it
    invertible when all weights are positive."""
    f = np.asarray(weights, dtype=float)
    if np.any(f <= 0):
        raise DomainError("cyclic shift truncation needs positive weights")
    S = shift_matrix(f)
    S[0, -1] = f[-1]
    return S


def shift_truncation(weights, m: int) -> np.ndarray:
    """m x m cyclic truncation of the weighted shift with the given weights;
    a short weight list is extended by its last value."""
    f = np.asarray(weights, dtype=float)
    if len(f) < m:
        f = np.concatenate([f, np.full(m - len(f), f[-1])])
    return cyclic_shift_matrix(f[:m])


def from_spec(spec: dict, seed=None) -> np.ndarray:
    """Build a matrix from a config ``initial`` block.

    Recognised kinds: ``jordan`` (lam, n, y0), ``random`` (n, box),
    ``triangular-random`` (n, box), ``normal`` (n, box),
    ``shift-truncation`` (weights, m) and ``matrix`` (rows of entries).
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("initial block needs a 'kind'")
    kind = spec["kind"]
    s = spec.get("seed", seed)
    box = tuple(spec.get("box", (0.5, 2.0)))
    try:
        if kind == "jordan":
            return jordan(complex(spec.get("lam", 0.0)), int(spec.get("n", 2)), complex(spec.get("y0", 1.0)))
        if kind == "random":
            return random_matrix(int(spec["n"]), s, box)
        if kind == "triangular-random":
            return triangular_random(int(spec["n"]), s, box)
        if kind == "normal":
            return random_normal(int(spec["n"]), s, box)
        if kind == "shift-truncation":
            return shift_truncation(spec["weights"], int(spec["m"]))
        if kind == "matrix":
            return np.array([[complex(v) for v in row] for row in spec["rows"]])
    except KeyError as exc:
        raise ConfigError(f"initial block of kind {kind!r} is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown initial kind {kind!r}")
