import numpy as np
import pytest
import scipy.sparse as sp

from mixdim.linalg import (
    HAVE_PARDISO,
    FactorizationError,
    dense_solve,
    factorize,
    is_symmetric,
    read_matrix,
    spmv,
    write_matrix,
)


def random_spd(n, seed=0, density=0.05):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=density, random_state=rng, format="csr")
    return (a @ a.T + n * sp.identity(n)).tocsr()


def test_identity_solve():
    b = np.arange(1.0, 11.0)
    np.testing.assert_array_equal(factorize(sp.identity(10)).solve(b), b)


def test_two_by_two():
    m = sp.csr_matrix([[4.0, 1.0], [1.0, 3.0]])
    x = factorize(m).solve([1.0, 2.0])
    np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-14)


@pytest.mark.parametrize("n", [50, 400])
def test_random_spd_residual(n):
    m = random_spd(n, seed=n)
    b = np.random.default_rng(1).normal(size=n)
    x = factorize(m).solve(b)
    assert np.linalg.norm(m @ x - b) <= 1e-12 * np.linalg.norm(b) * 10


def test_transpose_solve_indefinite():
    rng = np.random.default_rng(2)
    m = sp.csr_matrix(rng.normal(size=(30, 30)) + 10 * np.eye(30))
    f = factorize(m, kind="indefinite")
    b = rng.normal(size=30)
    np.testing.assert_allclose(m @ f.solve(b), b, atol=1e-11)
    np.testing.assert_allclose(m.T @ f.solve(b, transpose=True), b, atol=1e-11)


def test_saddle_point_indefinite():
    k = sp.csr_matrix([[2.0, -1.0], [-1.0, 2.0]])
    q = sp.csr_matrix([[1.0, -1.0]])
    m = sp.bmat([[k, q.T], [q, None]]).tocsr()
    x = factorize(m, kind="indefinite").solve([1.0, 1.0, 0.0])
    np.testing.assert_allclose(m @ x, [1.0, 1.0, 0.0], atol=1e-14)
    assert x[0] == pytest.approx(x[1])


def test_not_spd_rejected():
    m = sp.csr_matrix([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(FactorizationError, match="positive definite"):
        factorize(m)


def test_structurally_singular():
    m = sp.csr_matrix(([1.0, 1.0], ([0, 2], [0, 2])), shape=(3, 3))
    with pytest.raises(FactorizationError, match="row 1"):
        factorize(m)


def test_not_square_and_bad_kind():
    with pytest.raises(FactorizationError):
        factorize(sp.csr_matrix(np.ones((2, 3))))
    with pytest.raises(ValueError):
        factorize(sp.identity(2), kind="cholesky")


def test_rhs_length_checked():
    with pytest.raises(ValueError, match="rhs length"):
        factorize(sp.identity(3)).solve(np.ones(4))


def test_empty_matrix():
    f = factorize(sp.csr_matrix((0, 0)))
    assert f.solve(np.zeros(0)).shape == (0,)


def test_spmv_matches_dense():
    rng = np.random.default_rng(3)
    d = rng.normal(size=(7, 4))
    m = sp.csr_matrix(d)
    x, y = rng.normal(size=4), rng.normal(size=7)
    np.testing.assert_allclose(spmv(m, x), d @ x, rtol=1e-14)
    np.testing.assert_allclose(spmv(m, y, transpose=True), d.T @ y, rtol=1e-14)
    with pytest.raises(ValueError, match="dimension mismatch"):
        spmv(m, y)


def test_dense_solve():
    m = np.array([[3.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(dense_solve(m, [9.0, 8.0]), [2.0, 3.0], rtol=1e-14)
    with pytest.raises(FactorizationError):
        dense_solve(np.ones((2, 2)), [1.0, 1.0])
    with pytest.raises(ValueError):
        dense_solve(np.ones((2, 3)), [1.0, 1.0])


def test_is_symmetric():
    assert is_symmetric(random_spd(20))
    assert not is_symmetric(sp.csr_matrix([[1.0, 2.0], [0.0, 1.0]]))


def test_matrix_roundtrip(tmp_path):
    m = random_spd(40, seed=5)
    path = tmp_path / "m.mtx"
    write_matrix(path, m, comment="test block")
    back = read_matrix(path)
    assert back.shape == m.shape
    assert abs(back - m).max() == 0.0


@pytest.mark.skipif(not HAVE_PARDISO, reason="pypardiso not installed")
def test_pardiso_matches_superlu():
    m = random_spd(6000, seed=7, density=0.0005)
    b = np.random.default_rng(8).normal(size=6000)
    xa = factorize(m, backend="pardiso").solve(b)
    xb = factorize(m, backend="superlu").solve(b)
    assert factorize(m).backend == "pardiso"
    np.testing.assert_allclose(xa, xb, rtol=1e-9, atol=1e-12)


@pytest.mark.skipif(not HAVE_PARDISO, reason="pypardiso not installed")
def test_pardiso_rejects_indefinite():
    m = sp.diags(np.r_[np.ones(10), -1.0]).tocsr()
    with pytest.raises(FactorizationError):
        factorize(m, backend="pardiso")


def test_hand_two_by_two():
    x = factorize(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]])).solve([3.0, 3.0])
    np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-15)


def test_normal_equations_residual():
    a = np.random.default_rng(50).normal(size=(50, 50))
    m = sp.csr_matrix(a.T @ a + np.eye(50))
    b = np.random.default_rng(51).normal(size=50)
    x = factorize(m).solve(b)
    norm_m = np.abs(m).sum(axis=1).max()
    assert np.linalg.norm(m @ x - b) <= 1e-10 * (norm_m * np.linalg.norm(x) + np.linalg.norm(b))


def test_spmv_zero_and_permutation():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.all(spmv(sp.csr_matrix((4, 4)), x) == 0.0)
    perm = np.array([2, 0, 3, 1])
    P = sp.csr_matrix((np.ones(4), (np.arange(4), perm)), shape=(4, 4))
    np.testing.assert_array_equal(spmv(P, x), x[perm])


def test_spmv_dense_conversion_30_by_20():
    m = sp.random(30, 20, density=0.3, random_state=np.random.default_rng(9), format="csr")
    x = np.random.default_rng(10).normal(size=20)
    np.testing.assert_allclose(spmv(m, x), m.toarray() @ x, atol=1e-14)
