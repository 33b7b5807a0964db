import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chancoh import linalg
from chancoh.errors import ValidationError


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return g + g.conj().T


def random_psd(n, rank, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    return g @ g.conj().T


class TestPartialTrace:
    def test_product_operator(self):
        a = random_psd(2, 2, 0)
        b = random_psd(3, 3, 1)
        m = np.kron(a, b)
        assert np.allclose(linalg.partial_trace(m, 2, 3, "B"), a * np.trace(b))
        assert np.allclose(linalg.partial_trace(m, 2, 3, "A"), b * np.trace(a))

    def test_identity(self):
        assert np.allclose(linalg.partial_trace(np.eye(6), 2, 3, "B"), 3 * np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            linalg.partial_trace(np.eye(5), 2, 3)

    def test_bad_subsystem(self):
        with pytest.raises(ValueError):
            linalg.partial_trace(np.eye(4), 2, 2, "C")

    @given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10_000))
    def test_trace_preserved(self, da, db, seed):
        m = random_hermitian(da * db, seed)
        for which in "AB":
            assert np.isclose(np.trace(linalg.partial_trace(m, da, db, which)), np.trace(m))


class TestEigen:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
    def test_jacobi_matches_lapack(self, n):
        h = random_hermitian(n, n)
        w_j, v_j = linalg.hermitian_eig(h, method="jacobi")
        w_l, _ = linalg.hermitian_eig(h)
        assert np.allclose(w_j, w_l, atol=1e-10)
        assert np.allclose(v_j.conj().T @ v_j, np.eye(n), atol=1e-12)
        assert np.allclose((v_j * w_j) @ v_j.conj().T, h, atol=1e-10)

    def test_jacobi_degenerate(self):
        h = np.kron(np.eye(2), np.array([[1, 1j], [-1j, 1]]))
        w, v = linalg.jacobi_eigh(h)
        assert np.allclose(w, [0, 0, 2, 2])
        assert np.allclose((v * w) @ v.conj().T, h)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            linalg.hermitian_eig(np.eye(2), method="qr")

    @given(st.integers(1, 6), st.integers(0, 10_000))
    def test_ascending_real(self, n, seed):
        w, _ = linalg.hermitian_eig(random_hermitian(n, seed))
        assert np.all(np.diff(w) >= -1e-12)


class TestSpectralFunctions:
    @pytest.mark.parametrize("rank", [1, 2, 4])
    def test_psd_sqrt_squares_back(self, rank):
        m = random_psd(4, rank, rank)
        r = linalg.psd_sqrt(m)
        assert np.allclose(r @ r, m, atol=1e-10)
        assert linalg.is_psd(r)

    def test_psd_sqrt_rejects_negative(self):
        with pytest.raises(ValidationError):
            linalg.psd_sqrt(np.diag([1.0, -0.5]))

    def test_pinv_sqrt_support(self):
        m = np.diag([4.0, 1.0, 0.0])
        inv, proj = linalg.pinv_sqrt(m)
        assert np.allclose(inv, np.diag([0.5, 1.0, 0.0]))
        assert np.allclose(proj, np.diag([1.0, 1.0, 0.0]))

    def test_pinv_sqrt_zero(self):
        inv, proj = linalg.pinv_sqrt(np.zeros((2, 2)))
        assert not inv.any() and not proj.any()

    @pytest.mark.parametrize(
        "matrix, expected",
        [(np.eye(2), True), (np.diag([1.0, -1e-12]), True), (np.diag([1.0, -1e-3]), False)],
    )
    def test_is_psd(self, matrix, expected):
        assert linalg.is_psd(matrix) is expected


class TestJson:
    def test_round_trip(self):
        m = random_hermitian(3, 7)
        assert np.array_equal(linalg.matrix_from_json(linalg.matrix_to_json(m)), m)

    @pytest.mark.parametrize("bad", [[[1, 2, 3]], [[["a", 0]]], [1.0, 2.0]])
    def test_malformed(self, bad):
        with pytest.raises(ValidationError):
            linalg.matrix_from_json(bad)

    def test_non_finite(self):
        with pytest.raises(ValidationError):
            linalg.as_matrix([[np.nan]])
