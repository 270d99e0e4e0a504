import numpy as np
import pytest
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st

from vemasp.complex_ops import div_matrix, interpolate_facet, signed_incidence
from vemasp.mesh import PolygonalMesh, unit_square
from vemasp.problems import (FIELDS, UnknownField, assemble_darcy, assemble_nodal_h1,
                             assemble_projection, assemble_rhs_projection, cell_integrals,
                             darcy_data, data_library, facet_mass_matrix, get_field)

from conftest import cut_mesh, diamond

PI = np.pi
coef = st.floats(-3, 3, allow_nan=False)


def rt0_field(a, b, g):
    return lambda x, y: (a + g * x, b + g * y)


class TestProjectionMatrix:
    def test_unit_square_constant_field(self):
        m = unit_square()
        A = assemble_projection(m)
        assert A.shape == (4, 4)
        v = interpolate_facet(m, rt0_field(1, 0, 0))
        assert v @ A @ v == pytest.approx(1.0, rel=1e-14)

    def test_unit_square_radial_field(self):
        m = unit_square()
        v = interpolate_facet(m, lambda x, y: (x - 0.5, y - 0.5))
        assert v @ assemble_projection(m) @ v == pytest.approx(1 / 6 + 4, rel=1e-13)

    @pytest.mark.parametrize("mesh", [diamond(1), diamond(4), cut_mesh(1e-4, 8), cut_mesh(1e-8, 4)],
                             ids=["diamond1", "diamond4", "cut4", "cut8"])
    def test_symmetric_positive_definite(self, mesh):
        A = assemble_projection(mesh)
        assert abs(A - A.T).max() <= 1e-14 * abs(A).max()
        # Jacobi scaling is a congruence (inertia is kept) and removes the
        # huge diagonal spread of cut meshes that would swamp a plain eigensolve
        dense = A.toarray()
        d = 1.0 / np.sqrt(np.diag(dense))
        assert np.linalg.eigvalsh(dense * d[:, None] * d[None, :]).min() > 0
        np.linalg.cholesky(dense)

    def test_cholesky_type_factorization_large(self):
        from vemasp.precond import SPDSolver
        SPDSolver(assemble_projection(diamond(16)))

    @given(coef, coef, coef)
    @settings(max_examples=20, deadline=None)
    def test_galerkin_consistency_single_cell(self, a, b, g):
        pent = np.array([(0, 0), (4, 0), (6, 3), (3, 6), (0, 4)], dtype=float) / 6
        m = PolygonalMesh.from_cells(pent, [list(range(5))])
        v = interpolate_facet(m, rt0_field(a, b, g))
        # exact moments of the pentagon
        x, y = pent[:, 0], pent[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        area = cr.sum() / 2
        mx = ((x + xn) * cr).sum() / 6
        my = ((y + yn) * cr).sum() / 6
        mxx = (cr * (x * x + x * xn + xn * xn)).sum() / 12
        myy = (cr * (y * y + y * yn + yn * yn)).sum() / 12
        l2 = (a * a + b * b) * area + 2 * g * (a * mx + b * my) + g * g * (mxx + myy)
        exact = l2 + 4 * g * g * area
        got = v @ assemble_projection(m) @ v
        assert got == pytest.approx(exact, rel=1e-12, abs=1e-12)

    @given(coef, coef, coef)
    @settings(max_examples=10, deadline=None)
    def test_galerkin_consistency_unit_square_mesh(self, a, b, g):
        m = diamond(2)
        v = interpolate_facet(m, rt0_field(a, b, g))
        exact = a * a + b * b + g * (a + b) + 2 * g * g / 3 + 4 * g * g
        assert v @ assemble_projection(m) @ v == pytest.approx(exact, rel=1e-12, abs=1e-12)

    def test_inverse_inequality_bounded(self):
        vals = []
        for N in (4, 8, 16, 32):
            m = diamond(N)
            D = div_matrix(m)
            K = (D.T @ sps.diags(m.cell_areas) @ D).tocsc()
            M = facet_mass_matrix(m).tocsc()
            lam = spla.eigsh(K, k=1, M=M, which="LA", return_eigenvectors=False)[0]
            vals.append(m.h**2 * lam)
        assert max(vals) / min(vals) <= 1.5


class TestRhs:
    def test_zero_field(self):
        b = assemble_rhs_projection(diamond(2), lambda x, y: (0 * x, 0 * y))
        assert np.all(b == 0.0)

    @pytest.mark.parametrize("mesh", [unit_square(), diamond(3), cut_mesh(1e-4, 4)],
                             ids=["square", "diamond", "cut"])
    def test_consistency_on_rt0_fields(self, mesh):
        # for RT0 data the load vector is the consistency part of M times the dofs
        rng = np.random.default_rng(2)
        a, b, g = rng.standard_normal(3)
        f = rt0_field(a, b, g)
        M = facet_mass_matrix(mesh)
        expect = M @ interpolate_facet(mesh, f)
        assert np.allclose(assemble_rhs_projection(mesh, f), expect, atol=1e-12)

    def test_unit_square_pairing(self):
        m = unit_square()
        b = assemble_rhs_projection(m, rt0_field(1, 0, 0))
        assert b @ interpolate_facet(m, rt0_field(1, 0, 0)) == pytest.approx(1.0)


class TestDarcy:
    def test_zero_pressure_rhs(self):
        m = unit_square()
        s = assemble_darcy(m, rt0_field(1, 0, 0), lambda x, y: 0 * x)
        assert np.all(s.rhs[m.n_facets:] == 0.0)
        assert s.block_sizes == (4, 1)

    def test_blocks(self):
        m = diamond(2)
        s = assemble_darcy(m, *darcy_data("f1"))
        A = s.matrix
        nf = m.n_facets
        assert abs(A - A.T).max() == 0.0
        assert A[nf:, nf:].nnz == 0 or abs(A[nf:, nf:]).max() == 0
        B = -A[nf:, :nf]
        assert abs(B - signed_incidence(m)).max() == 0
        assert np.allclose((sps.diags(m.cell_areas) @ div_matrix(m) - B).toarray(), 0, atol=1e-14)
        assert np.allclose(s.cell_mass, m.cell_areas)

    def test_inertia(self):
        m = diamond(1)
        s = assemble_darcy(m, *darcy_data("f1"))
        ev = np.linalg.eigvalsh(s.matrix.toarray())
        assert np.sum(ev > 0) == m.n_facets
        assert np.sum(ev < 0) == m.n_cells

    def test_pressure_rhs_integrates_g(self):
        m = diamond(4)
        total = cell_integrals(m, lambda x, y: 1.0 + 0 * x).sum()
        assert total == pytest.approx(1.0, rel=1e-14)
        # g1 has zero mean on the unit square
        assert abs(cell_integrals(m, get_field("g1")).sum()) < 1e-10


class TestNodalH1:
    def test_constants(self):
        m = diamond(3)
        A2 = assemble_nodal_h1(m)
        one = np.ones(m.n_nodes)
        assert one @ A2 @ one == pytest.approx(1.0, rel=1e-13)

    def test_spd(self):
        A2 = assemble_nodal_h1(diamond(2)).toarray()
        assert np.allclose(A2, A2.T, atol=1e-15)
        assert np.linalg.eigvalsh(A2).min() > 0

    def test_unit_square_x(self):
        m = unit_square()
        x = m.vertices[:, 0]
        for stiffness in ("dofi", "drecipe", "curl"):
            assert x @ assemble_nodal_h1(m, stiffness=stiffness) @ x == pytest.approx(4 / 3)

    def test_vector_block_diagonal(self):
        m = diamond(1)
        A1 = assemble_nodal_h1(m, vector=True)
        A2 = assemble_nodal_h1(m)
        n = m.n_nodes
        assert A1.shape == (2 * n, 2 * n)
        assert abs(A1[:n, :n] - A2).max() == 0
        assert abs(A1[n:, n:] - A2).max() == 0
        assert A1[:n, n:].nnz == 0


class TestData:
    def test_f1_values(self):
        fx, fy = get_field("f1")(0.0, 1 / 8)
        assert fx == pytest.approx(-2 * PI)
        assert fy == pytest.approx(0.0, abs=1e-14)
        # cos(4 pi y) = 1 at y = 0, so only the first component vanishes
        assert np.allclose(get_field("f1")(0.25, 0.0), (0, -4 * PI), atol=1e-14)

    def test_g1_value(self):
        assert get_field("g1")(0.0, 1 / 8) == pytest.approx(-40 * PI**2)

    def test_f2_g2(self):
        assert np.allclose(get_field("f2")(0.0, 0.0), (0, 0))
        assert get_field("g2")(0.3, 0.2) == 0.0

    def test_f1_is_gradient(self):
        # f1 = grad(-sin(2 pi x) sin(4 pi y))
        h = 1e-6
        x, y = 0.31, 0.17
        pot = lambda x, y: -np.sin(2 * PI * x) * np.sin(4 * PI * y)
        fx, fy = get_field("f1")(x, y)
        assert fx == pytest.approx((pot(x + h, y) - pot(x - h, y)) / (2 * h), rel=1e-7)
        assert fy == pytest.approx((pot(x, y + h) - pot(x, y - h)) / (2 * h), rel=1e-7)

    def test_library(self):
        assert set(data_library()) == set(FIELDS) == {"f1", "g1", "f2", "g2"}

    def test_unknown(self):
        with pytest.raises(UnknownField):
            get_field("f9")
