import numpy as np
import pytest

from normflow import generators as gen
from normflow.errors import ConfigError, DomainError


def test_random_matrix_deterministic_and_boxed():
    a = gen.random_matrix(5, 3)
    assert np.array_equal(a, gen.random_matrix(5, 3))
    assert not np.array_equal(a, gen.random_matrix(5, 4))
    s = np.linalg.svd(a, compute_uv=False)
    assert s.max() == pytest.approx(2.0) and s.min() == pytest.approx(0.5)


def test_triangular_random_is_upper_triangular():
    T = gen.triangular_random(4, 1)
    assert np.all(np.tril(T, -1) == 0)
    s = np.linalg.svd(T, compute_uv=False)
    assert s.max() == pytest.approx(2.0) and s.min() == pytest.approx(0.5)


def test_unitary_normal_hermitian():
    U = gen.random_unitary(4, 0)
    assert np.allclose(U.conj().T @ U, np.eye(4), atol=1e-13)
    N = gen.random_normal(4, 0)
    assert np.linalg.norm(N.conj().T @ N - N @ N.conj().T) <= 1e-12
    H = gen.random_hermitian(6, 2, doubles=2)
    assert np.allclose(H, H.conj().T)
    ev = np.sort(np.linalg.eigvalsh(H))
    assert np.sum(np.diff(ev) < 1e-10) >= 2
    assert ev.min() >= 0.5 - 1e-12 and ev.max() <= 2.0 + 1e-12


def test_jordan_and_shifts():
    J = gen.jordan(0.5, 3, 2.0)
    assert np.array_equal(J, [[0.5, 2, 0], [0, 0.5, 2], [0, 0, 0.5]])
    S = gen.shift_matrix([1.0, 2.0, 3.0])
    assert np.array_equal(np.diag(S, -1), [1.0, 2.0])
    assert np.allclose(np.linalg.matrix_power(S, 3), 0)
    C = gen.cyclic_shift_matrix([1.0, 2.0, 3.0])
    assert C[0, 2] == 3.0
    assert abs(np.linalg.det(C)) == pytest.approx(6.0)
    with pytest.raises(DomainError):
        gen.cyclic_shift_matrix([1.0, 0.0])
    T = gen.shift_truncation([1.0, 2.0], 4)
    assert np.array_equal(np.diag(T, -1), [1.0, 2.0, 2.0]) and T[0, 3] == 2.0


def test_from_spec_kinds():
    assert gen.from_spec({"kind": "jordan", "lam": 1, "n": 2}).shape == (2, 2)
    assert np.array_equal(gen.from_spec({"kind": "random", "n": 3}, 5), gen.random_matrix(3, 5))
    assert np.array_equal(gen.from_spec({"kind": "matrix", "rows": [[1, "2j"], [0, 1]]}), [[1, 2j], [0, 1]])
    with pytest.raises(ConfigError, match="missing field 'n'"):
        gen.from_spec({"kind": "random"})
    with pytest.raises(ConfigError, match="unknown initial kind"):
        gen.from_spec({"kind": "blob"})
    with pytest.raises(ConfigError):
        gen.from_spec({"n": 3})
