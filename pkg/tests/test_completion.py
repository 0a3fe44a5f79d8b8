import numpy as np
import pytest

from conftest import random_positive_funcs
from toda_forge import completion as cp
from toda_forge import taukit as tk
from toda_forge.errors import DegeneracyError, InconsistencyError, StructureError
from toda_forge.iterint import IntegrandSet
from toda_forge.jetcalc import TaylorJet
from toda_forge.leznov import ChiralVector, build_solution_vector
from toda_forge.liedata import LieType, form_for
from toda_forge.minorlab import max_duality_residual

RNG = np.random.default_rng(23)
SAMPLES = np.linspace(0.1, 1.0, 9)


def build(fam, n, funcs=None):
    funcs = funcs or random_positive_funcs(RNG, n)
    return build_solution_vector(LieType(fam, n), IntegrandSet(funcs, 1.0))


def test_c2_fixture_at_zero():
    F = build("C", 2, ["1", "1"])
    Phi = cp.complete_symplectic(F, 0.0)
    np.testing.assert_array_equal(Phi + 0.0, [[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]])
    Om = form_for(F.lie_type)
    np.testing.assert_array_equal(Phi @ Om @ Phi.T, Om)


def test_c2_table_at_zero():
    F = build("C", 2, ["1", "1"])
    t = cp.bilinear_table(F, 0.0)
    for level in range(3):
        assert all(v == 0.0 for v in t.level(level))
    assert t.value(1, 2) == -1.0
    assert t.value(0, 3) == 1.0


def test_c2_constant_conserved_is_zero():
    F = build("C", 2, ["1", "1"])
    [(j, vals, drift)] = cp.conserved_quantities(F, SAMPLES)
    assert j == 1 and drift == 0.0
    np.testing.assert_array_equal(vals, 0.0)


def test_conserved_range():
    F = build("C", 3)
    with pytest.raises(StructureError):
        cp.conserved_jet(F, 3, 0.5, 1)
    with pytest.raises(StructureError):
        cp.conserved_jet(F, 0, 0.5, 1)
    assert [j for j, *_ in cp.conserved_quantities(build("B", 3), SAMPLES)] == [1, 2, 3]


def test_conserved_jet_derivative_matches_finite_difference():
    F = build("C", 3)
    jet = cp.conserved_jet(F, 1, 0.5, 1)
    h = 1e-4
    fd = (cp.conserved_quantities(F, [0.5 + h])[0][1][0] - cp.conserved_quantities(F, [0.5 - h])[0][1][0]) / (2 * h)
    assert jet.derivative(1) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("fam, n", [("C", 2), ("C", 3), ("B", 2), ("B", 3)])
def test_table_matches_direct_pairing(fam, n):
    F = build(fam, n)
    for x in (0.0, 0.4, 1.0):
        t = cp.bilinear_table(F, x)  # raises on a mismatch
        M = form_for(F.lie_type)
        d = F.derivatives(x, t.top)
        np.testing.assert_allclose(t.as_matrix(), d @ M @ d.T, atol=1e-8, rtol=1e-8)


def test_table_levels_c():
    n = 3
    F = build("C", n)
    t = cp.bilinear_table(F, 0.3)
    for level in range(2 * n - 1):
        np.testing.assert_allclose(t.level(level), 0.0, atol=1e-12)
    assert t.value(n - 1, n) == pytest.approx(-1.0)
    for i in range(2 * n):
        assert t.value(i, 2 * n - 1 - i) == pytest.approx((-1) ** (n - i), abs=1e-10)
    np.testing.assert_allclose(t.level(2 * n), 0.0, atol=1e-10)


def test_table_levels_b():
    n = 3
    F = build("B", n)
    t = cp.bilinear_table(F, 0.6)
    for level in range(2 * n):
        np.testing.assert_allclose(t.level(level), 0.0, atol=1e-12)
    for i in range(2 * n + 1):
        assert t.value(i, 2 * n - i) == pytest.approx((-1) ** (n - i), abs=1e-10)


def test_table_detects_wrong_conserved_values():
    F = build("C", 3)
    good = [cp.conserved_jet(F, j, 0.5, 8) for j in (1, 2)]
    cp.bilinear_table(F, 0.5, conserved=good)
    bad = [good[0] + 0.1, good[1]]
    with pytest.raises(InconsistencyError):
        cp.bilinear_table(F, 0.5, conserved=bad)
    with pytest.raises(StructureError):
        cp.bilinear_table(F, 0.5, conserved=good[:1])


def test_b2_fixture_bottom_rows():
    F = build("B", 2, ["1", "1"])
    Phi, sign = cp.complete_orthogonal(F, 0.0)
    np.testing.assert_array_equal(Phi[2:] + 0.0, [[1, 0, 0, 0, 0], [0, -1, 0, 0, 0], [0, 0, 0, 0, 1]])
    assert cp.group_relation_defect(Phi, form_for(F.lie_type)) <= 1e-10
    assert sign in (1, -1)


@pytest.mark.parametrize("n", [2, 3])
def test_symplectic_completion(n):
    F = build("C", n)
    Om = form_for(F.lie_type)
    for x in SAMPLES:
        Phi = cp.complete_symplectic(F, x)
        assert cp.group_relation_defect(Phi, Om) <= 1e-7
        assert np.linalg.det(Phi) == pytest.approx(1.0, abs=1e-7)
        d = F.derivatives(x, 2 * n - 1)
        np.testing.assert_array_equal(Phi[n - 1], d[n])
        np.testing.assert_array_equal(Phi[n:], d[:n])
        assert max_duality_residual(Phi, "Sp", tol=1e-7) <= 1e-7


def test_symplectic_row_formula_for_second_row():
    n = 3
    F = build("C", n)
    x = 0.7
    Phi = cp.complete_symplectic(F, x)
    d = F.derivatives(x, 2 * n - 1)
    I1 = cp.conserved_quantities(F, [x])[0][1][0]
    np.testing.assert_allclose(Phi[n - 2], -(d[n + 1] - I1 * d[n - 1]), atol=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_orthogonal_completion(n):
    F = build("B", n)
    Th = form_for(F.lie_type)
    signs = set()
    for x in SAMPLES:
        Phi, s = cp.complete_orthogonal(F, x)
        assert cp.group_relation_defect(Phi, Th) <= 1e-7
        assert abs(np.linalg.det(Phi)) == pytest.approx(1.0, abs=1e-7)
        np.testing.assert_array_equal(Phi[n:], F.derivatives(x, 2 * n)[: n + 1])
        assert max_duality_residual(Phi, "SO-odd", tol=1e-7) <= 1e-7
        signs.add(s)
    assert len(signs) == 1


def test_tau_equals_minor_of_product():
    n = 2
    lt = LieType("C", n)
    F, G = build("C", n), build("C", n)
    x, y = 0.4, 0.9
    U = cp.complete_symplectic(F, x) @ cp.complete_symplectic(G, y).T
    t = tk.tau_table(F, G, x, y)
    idx = np.arange(n - 1, 2 * n)
    assert np.linalg.det(U[np.ix_(idx, idx)]) == pytest.approx(t.taus[n + 1], rel=1e-9)


def test_degenerate_frame():
    lt = LieType("C", 2)
    F = ChiralVector.from_exprs(lt, ["1", "t", "t^2", "1 + t"])
    with pytest.raises(DegeneracyError):
        cp.complete_symplectic(F, 0.5)


def test_family_checks():
    with pytest.raises(StructureError):
        cp.complete_symplectic(build("B", 2), 0.1)
    with pytest.raises(StructureError):
        cp.complete_orthogonal(build("C", 2), 0.1)
    with pytest.raises(StructureError):
        cp.conserved_quantities(build("A", 2), [0.1])
