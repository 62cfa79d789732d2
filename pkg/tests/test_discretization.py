import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from cgmn.discretization import (
    Grid1D,
    Grid2D,
    HelmholtzProblem,
    Medium,
    SparseRowMatrix,
    analytic_eigenpair_1d,
    build_helmholtz_1d,
    build_helmholtz_2d,
    plane_wave,
    scattered_field_rhs,
)


class TestGrid:
    @pytest.mark.parametrize("n", [1, 3, 49, 399])
    def test_spacing_is_exact(self, n):
        assert Grid1D(n).spacing == 1.0 / (n + 1)

    @pytest.mark.parametrize("n", [0, -2, 2.5])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid1D(n)

    def test_unit_square(self):
        g = Grid2D.unit_square(4)
        assert g.spacing == 0.2 and g.size == 16
        X, Y = g.coordinates()
        assert X.shape == (4, 4)
        assert X[0, 1] == pytest.approx(0.4) and Y[1, 0] == pytest.approx(0.4)


class TestSparseRowMatrix:
    def test_row_norms(self):
        rng = np.random.default_rng(0)
        A = sp.random(30, 30, density=0.2, random_state=1) + sp.identity(30)
        m = SparseRowMatrix(A)
        dense = A.toarray()
        np.testing.assert_allclose(m.row_norms_sq, (dense ** 2).sum(axis=1), rtol=1e-14)
        cols, vals = m.row(3)
        np.testing.assert_array_equal(dense[3, cols], vals)
        u = rng.standard_normal(30)
        np.testing.assert_allclose(m @ u, dense @ u)

    def test_complex_norms_use_magnitudes(self):
        m = SparseRowMatrix(np.array([[1 + 1j, 2.0], [0.0, 1j]]))
        np.testing.assert_allclose(m.row_norms_sq, [6.0, 1.0], rtol=1e-14)

    def test_zero_row_is_rejected(self):
        with pytest.raises(ValueError, match="zero rows"):
            SparseRowMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_non_square_is_rejected(self):
        with pytest.raises(ValueError):
            SparseRowMatrix(np.ones((2, 3)))

    def test_arrays_are_read_only(self):
        m = build_helmholtz_1d(3.0, 5).matrix
        with pytest.raises(ValueError):
            m.data[0] = 1.0


class TestHelmholtz1D:
    def test_single_point_at_zero_wavenumber(self):
        A = build_helmholtz_1d(0.0, 1).matrix.toarray()
        np.testing.assert_array_equal(A, [[-8.0]])

    @pytest.mark.parametrize("k", [0.0, 2.0, 7.5])
    def test_entries_n3(self, k):
        A = build_helmholtz_1d(k, 3).matrix.toarray()
        np.testing.assert_array_equal(np.diag(A), np.full(3, k * k - 2 * 16))
        np.testing.assert_array_equal(np.diag(A, 1), [16.0, 16.0])
        np.testing.assert_array_equal(np.diag(A, -1), [16.0, 16.0])
        assert A[0, 2] == 0.0

    @given(st.integers(1, 60), st.floats(0.0, 500.0))
    @settings(max_examples=40, deadline=None)
    def test_structure(self, n, k):
        p = build_helmholtz_1d(k, n)
        h = p.grid.spacing
        A = p.matrix.toarray()
        assert p.matrix.is_symmetric()
        np.testing.assert_array_equal(np.diag(A), np.full(n, k * k - 2.0 * h ** -2))
        np.testing.assert_array_equal(np.diag(A, 1), np.full(n - 1, h ** -2))
        np.testing.assert_array_equal(p.rhs, np.zeros(n))

    def test_eigenvalues_match_dense_eigensolve(self):
        k, n = 2 * np.pi * 1.7, 5
        p = build_helmholtz_1d(k, n)
        dense = np.linalg.eigvalsh(p.matrix.toarray())
        formula = sorted(analytic_eigenpair_1d(m, k, p.grid)[0] for m in range(1, n + 1))
        np.testing.assert_allclose(dense, formula, rtol=1e-10)

    def test_row_norms_interior_and_boundary(self):
        k, n = 40.0, 20
        p = build_helmholtz_1d(k, n)
        h = p.grid.spacing
        gamma = k * k - 2 * h ** -2
        norms = p.matrix.row_norms_sq
        np.testing.assert_allclose(norms[1:-1], gamma ** 2 + 2 * h ** -4, rtol=1e-12)
        # Boundary rows have a single neighbour.
        np.testing.assert_allclose(norms[[0, -1]], gamma ** 2 + h ** -4, rtol=1e-12)

    def test_negative_wavenumber_is_rejected(self):
        with pytest.raises(ValueError):
            build_helmholtz_1d(-1.0, 3)


class TestAnalyticEigenpair:
    def test_quarter_wave_mode(self):
        grid = Grid1D(3)
        lam, _ = analytic_eigenpair_1d(2, 5.0, grid)
        assert lam == pytest.approx(25.0 - 32.0, abs=1e-12)

    def test_frozen_value(self):
        # 32 (cos(pi/4) - 1); dense eigvalsh of the 3x3 matrix gives the same.
        lam, vec = analytic_eigenpair_1d(1, 0.0, Grid1D(3))
        assert lam == pytest.approx(-9.372583002030478, rel=1e-14)
        assert np.linalg.eigvalsh(build_helmholtz_1d(0.0, 3).matrix.toarray())[-1] == pytest.approx(lam, rel=1e-12)
        np.testing.assert_allclose(vec, np.sin(np.pi * np.arange(1, 4) / 4))

    @pytest.mark.parametrize("n", [1, 2, 10, 20, 50])
    def test_residual_every_mode(self, n):
        k = 2 * np.pi * 3.3
        p = build_helmholtz_1d(k, n)
        for m in range(1, n + 1):
            lam, v = analytic_eigenpair_1d(m, k, p.grid)
            res = np.linalg.norm(p.matrix @ v - lam * v) / np.linalg.norm(v)
            scale = max(abs(lam), 1.0)
            assert res / scale <= 1e-10

    @pytest.mark.parametrize("m", [0, 4])
    def test_out_of_range(self, m):
        with pytest.raises(ValueError):
            analytic_eigenpair_1d(m, 1.0, Grid1D(3))


class TestHelmholtz2D:
    def test_one_row_grid_reduces_to_1d(self):
        n, k = 6, 9.0
        h = 1.0 / (n + 1)
        A2 = build_helmholtz_2d(Medium.constant((1, n), k), h).matrix.toarray()
        A1 = build_helmholtz_1d(k, n).matrix.toarray()
        np.testing.assert_allclose(A2, A1 - 2.0 * h ** -2 * np.eye(n), rtol=1e-15)

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_constant_k_eigenvalues(self, n):
        h = 1.0 / (n + 1)
        k = 4.0
        A = build_helmholtz_2d(Medium.constant((n, n), k), h).matrix.toarray()
        p = np.arange(1, n + 1)
        lam1 = 2 * h ** -2 * (np.cos(p * np.pi * h) - 1)
        expected = np.sort((k * k + lam1[:, None] + lam1[None, :]).ravel())
        got = np.linalg.eigvalsh(A)
        np.testing.assert_allclose(got, expected, atol=1e-8 * np.max(np.abs(expected)))

    def test_laplacian_at_zero_wavenumber(self):
        A = build_helmholtz_2d(Medium.constant((3, 3), 0.0), 0.25).matrix.toarray()
        T = 16.0 * (np.diag(np.full(2, 1.0), 1) + np.diag(np.full(2, 1.0), -1) - 2 * np.eye(3))
        np.testing.assert_array_equal(A, np.kron(np.eye(3), T) + np.kron(T, np.eye(3)))

    def test_exactly_symmetric_for_any_medium(self):
        k = np.random.default_rng(4).uniform(0, 50, size=(7, 5))
        A = build_helmholtz_2d(Medium(k), 0.1).matrix.toarray()
        assert np.max(np.abs(A - A.T)) == 0.0
        np.testing.assert_allclose(np.diag(A), k.ravel() ** 2 - 4 / 0.01, rtol=1e-14)

    def test_ordering_is_x_fastest(self):
        A = build_helmholtz_2d(Medium.constant((2, 3), 0.0), 0.5).matrix.toarray()
        assert A[0, 1] == 4.0 and A[0, 3] == 4.0 and A[0, 2] == 0.0

    def test_rejects_1d_medium(self):
        with pytest.raises(ValueError):
            build_helmholtz_2d(Medium.constant(4, 1.0), 0.2)

    def test_problem_size_mismatch(self):
        p = build_helmholtz_1d(1.0, 4)
        with pytest.raises(ValueError):
            HelmholtzProblem(p.matrix, Grid1D(5), p.medium)
        with pytest.raises(ValueError):
            p.with_rhs(np.ones(3))


class TestMedium:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            Medium(np.array([1.0, -0.5]))

    def test_anomaly_block(self):
        grid = Grid2D.unit_square(7)
        m = Medium.with_anomaly(grid, 1.0, 3.0, (0.25, 0.75, 0.25, 0.75))
        assert set(np.unique(m.wavenumber)) == {1.0, 3.0}
        # x = 0.25, 0.375, 0.5, 0.625, 0.75 fall in the block -> 5x5 points.
        assert np.count_nonzero(m.wavenumber == 3.0) == 25

    def test_region_outside_domain(self):
        with pytest.raises(ValueError):
            Medium.with_anomaly(Grid2D.unit_square(4), 1.0, 2.0, (0.5, 1.5, 0.0, 1.0))


class TestScatteredFieldSource:
    def test_homogeneous_medium_has_no_source(self):
        s = scattered_field_rhs(Medium.constant((4, 4), 7.0), 7.0, 0.2)
        np.testing.assert_array_equal(s, 0.0)

    def test_single_anomalous_point(self):
        # h = 0.25 and k0 = 8 pi puts the first point at k0 x = 2 pi, where exp(i k0 x) = 1.
        k0 = 8 * np.pi
        k = np.full(3, k0)
        k[0] = np.sqrt(k0 ** 2 + 1.0)
        s = scattered_field_rhs(Medium(k), k0, 0.25)
        assert s[0] == pytest.approx(-1.0, abs=1e-12)
        np.testing.assert_allclose(s[1:], 0.0, atol=1e-10)

    def test_plane_wave_varies_along_x_only(self):
        u = plane_wave(Medium.constant((3, 4), 1.0), 2.0, 0.2).reshape(3, 4)
        np.testing.assert_allclose(u[0], u[2])
        np.testing.assert_allclose(u[0], np.exp(2j * 0.2 * np.arange(1, 5)))

    def test_background_must_be_positive(self):
        with pytest.raises(ValueError):
            scattered_field_rhs(Medium.constant(3, 1.0), 0.0, 0.25)
