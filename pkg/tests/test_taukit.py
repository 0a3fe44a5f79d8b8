import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_positive_funcs
from toda_forge import taukit as tk
from toda_forge.errors import InconsistencyError, SingularPointError, StructureError
from toda_forge.iterint import IntegrandSet
from toda_forge.leznov import ChiralVector, build_solution_vector
from toda_forge.liedata import LieType, cartan_matrix

RNG = np.random.default_rng(17)
A1 = LieType("A", 1)
GRID = np.linspace(0.0, 1.0, 5)


def liouville():
    F = ChiralVector.from_exprs(A1, ["1", "t"])
    return F, F


def pair(fam, n, rng=RNG, x_max=1.0):
    lt = LieType(fam, n)
    F = build_solution_vector(lt, IntegrandSet(random_positive_funcs(rng, n), x_max))
    G = build_solution_vector(lt, IntegrandSet(random_positive_funcs(rng, n), x_max))
    return lt, F, G


def test_liouville_table():
    F, G = liouville()
    t = tk.tau_table(F, G, 0.7, 0.4)
    assert t.size == 3
    np.testing.assert_allclose(t.taus, [1.0, 1 + 0.28, 1.0], rtol=1e-14)
    assert tk.tau_derivatives(t, 1) == pytest.approx((0.4, 0.7, 1.0))
    assert tk.dd(*tk.tau_jet(t, 1)) == pytest.approx(1.0)


def test_dd_of_constant():
    assert tk.dd(1.0, 0.0, 0.0, 0.0) == 0.0


def test_first_cofactors_are_plain_pairings():
    dF = RNG.normal(size=(3, 4))
    dG = RNG.normal(size=(3, 4))
    t = tk.tau_table_from_derivs(dF, dG)
    assert t.tau_x[1] == pytest.approx(dF[1] @ dG[0])
    assert t.tau_y[1] == pytest.approx(dF[0] @ dG[1])
    assert t.tau_xy[1] == pytest.approx(dF[1] @ dG[1])


def test_index_range():
    F, G = liouville()
    t = tk.tau_table(F, G, 0.1, 0.1)
    with pytest.raises(StructureError):
        tk.tau_derivatives(t, 2)
    with pytest.raises(StructureError):
        tk.tau_table(F, build_solution_vector(LieType("A", 2), IntegrandSet(["1", "1"], 1.0)), 0.1, 0.1)


def _fd_derivs(F, G, n, i, x, y, h):
    def tau(a, b):
        return tk.tau_table(F, G, a, b, n).taus[i]

    tx = (-tau(x + 2 * h, y) + 8 * tau(x + h, y) - 8 * tau(x - h, y) + tau(x - 2 * h, y)) / (12 * h)
    ty = (-tau(x, y + 2 * h) + 8 * tau(x, y + h) - 8 * tau(x, y - h) + tau(x, y - 2 * h)) / (12 * h)
    txy = (tau(x + h, y + h) - tau(x + h, y - h) - tau(x - h, y + h) + tau(x - h, y - h)) / (4 * h * h)
    return tx, ty, txy


def test_cofactor_derivatives_against_finite_differences():
    lt, F, G = pair("A", 3, x_max=1.5)
    x, y = 0.6, 0.8
    t = tk.tau_table(F, G, x, y)
    for i in range(1, 4):
        exact = tk.tau_derivatives(t, i)
        fd = _fd_derivs(F, G, 3, i, x, y, 1e-3)
        for e, f in zip(exact, fd):
            assert e == pytest.approx(f, rel=1e-6, abs=1e-9)


def test_finite_difference_gap_is_second_order():
    lt, F, G = pair("A", 2, x_max=1.5)
    x, y = 0.5, 0.7
    exact = tk.tau_derivatives(tk.tau_table(F, G, x, y), 2)[2]
    e1 = abs(_fd_derivs(F, G, 2, 2, x, y, 4e-2)[2] - exact)
    e2 = abs(_fd_derivs(F, G, 2, 2, x, y, 2e-2)[2] - exact)
    assert e2 < e1 / 3


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_dd_recurrence_for_arbitrary_data(length, n, seed):
    rng = np.random.default_rng(seed)
    dF = rng.normal(size=(n + 2, length))
    dG = rng.normal(size=(n + 2, length))
    t = tk.tau_table_from_derivs(dF, dG)
    for i in range(1, n + 1):
        lhs = tk.dd(*tk.tau_jet(t, i))
        rhs = t.taus[i - 1] * t.taus[i + 1]
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs), abs(lhs))


def test_sigma_fields_liouville():
    F, G = liouville()
    sf = tk.sigma_fields(tk.tau_table(F, G, 1.0, 1.0), A1)
    assert sf.sigmas[0] == 2.0
    assert sf.us[0] == pytest.approx(-math.log(2.0))
    assert sf.branch_sign is None


def test_singular_point_is_excluded():
    F = ChiralVector.from_exprs(A1, ["1", "t"])
    G = ChiralVector.from_exprs(A1, ["1 - t", "1"])  # W(G) = 1, tau_1 = 1 - y + x
    with pytest.raises(SingularPointError) as e:
        tk.sigma_fields(tk.tau_table(F, G, 0.5, 2.5), A1)
    assert e.value.index == 1 and e.value.x == 0.5
    assert tk.toda_residual(F, G, A1, 0.5, 2.5) is tk.EXCLUDED
    grid = tk.toda_grid(F, G, A1, [0.5, 1.5], [0.5, 2.5])
    assert grid.excluded.tolist() == [[False, True], [False, True]]
    assert grid.max_residual[0] < 1e-14


def test_liouville_pde_everywhere():
    F, G = liouville()
    r = tk.toda_grid(F, G, A1, GRID, GRID, form="pde")
    assert np.nanmax(r.residuals) <= 1e-14
    assert np.allclose(r.residuals, 0.0, atol=1e-15)


def test_a2_constant_closed_form():
    lt = LieType("A", 2)
    F = build_solution_vector(lt, IntegrandSet(["1", "1"], 1.0))
    r = tk.toda_grid(F, F, lt, np.linspace(0, 1, 3), np.linspace(0, 1, 3))
    assert r.max_residual.max() <= 1e-9


def test_c2_endgame():
    lt, F, G = pair("C", 2)
    for x, y in RNG.uniform(0.1, 1.0, (6, 2)):
        t = tk.tau_table(F, G, x, y)
        assert tk.dd(*tk.tau_jet(t, 2)) == pytest.approx(t.taus[1] ** 2, rel=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_c_duality(n):
    lt, F, G = pair("C", n)
    for x, y in RNG.uniform(0.0, 1.0, (5, 2)):
        t = tk.tau_table(F, G, x, y)
        assert t.taus[n + 1] == pytest.approx(t.taus[n - 1], rel=1e-8)


@pytest.mark.parametrize("n", [2, 3])
def test_b_duality_sign_is_constant(n):
    lt, F, G = pair("B", n)
    ratios = []
    for x, y in RNG.uniform(0.0, 1.0, (6, 2)):
        t = tk.tau_table(F, G, x, y)
        ratios.append(t.taus[n + 1] / t.taus[n])
    assert np.allclose(np.abs(ratios), 1.0, atol=1e-8)
    assert len(set(np.sign(ratios))) == 1


def test_b_branch_flip_detected():
    # G built with det -1 completion sign: negate the middle component
    lt, F, G = pair("B", 2)
    assert tk.toda_grid(F, G, lt, GRID, GRID).branch_sign == 1
    idx = 2 * lt.rank
    H = ChiralVector(lt, lambda xs, k: G.taylor(xs, k) * np.r_[np.ones(idx), -1.0][None, :, None],
                     "user-supplied")
    r = tk.toda_grid(F, H, lt, GRID, GRID)
    assert r.branch_sign == -1
    assert r.max_residual.max() < 1e-9


def test_branch_sign_must_stay_constant():
    lt, F, G = pair("B", 2)
    idx = 2 * lt.rank

    def flipping(xs, k):
        out = G.taylor(xs, k)
        out[np.asarray(xs) > 0.5, idx] *= -1
        return out

    H = ChiralVector(lt, flipping, "user-supplied")
    with pytest.raises(InconsistencyError):
        tk.toda_grid(F, H, lt, GRID, GRID)


def test_normalization_shift_examples():
    r = tk.normalization_shift(LieType("B", 2))
    np.testing.assert_allclose(r, [math.log(2), math.log(2)])
    np.testing.assert_allclose(tk.normalization_shift(LieType("B", 3), sign=0), 0.0)
    for n in (2, 3, 4):
        lt = LieType("B", n)
        r = tk.normalization_shift(lt, sign=-1)
        np.testing.assert_allclose(cartan_matrix(lt) @ r, np.r_[np.zeros(n - 1), -math.log(2)], atol=1e-14)
    with pytest.raises(StructureError):
        tk.normalization_shift(LieType("C", 2))


@pytest.mark.parametrize("n", [2, 3])
def test_b_standard_form_after_shift(n):
    lt, F, G = pair("B", n)
    raw = tk.toda_grid(F, G, lt, GRID, GRID, form="pde")
    shifted = tk.toda_grid(F, G, lt, GRID, GRID, form="pde", shift=tk.normalization_shift(lt))
    assert raw.max_residual.max() <= 1e-8
    assert shifted.max_residual.max() <= 1e-8
    # without the signed 1/2 the unshifted fields do not solve the unit system
    t = tk.tau_table(F, G, 0.5, 0.5)
    assert tk.pde_residual_table(t, lt).max() > 0.1
    assert raw.branch_sign == 1


@pytest.mark.parametrize("n", [3, 4])
def test_d_split_identities(n):
    lt, F, G = pair("D", n)
    for x, y in RNG.uniform(0.2, 1.0, (4, 2)):
        t = tk.tau_table(F, G, x, y)
        sf = tk.sigma_fields(t, lt)
        s1, s2 = sf.sigmas[n - 2], sf.sigmas[n - 1]
        assert s1 * s2 == pytest.approx(t.taus[n - 1], rel=1e-10)
        assert s1**2 + s2**2 == pytest.approx(t.taus[n], rel=1e-10)
        q = sf.quads
        assert tk.dd(*q[n - 2]) == pytest.approx(tk.dd(*q[n - 1]), rel=1e-7)


@pytest.mark.parametrize("fam, n", [("A", 3), ("C", 3), ("B", 3), ("D", 3), ("D", 4)])
def test_toda_residuals_small(fam, n):
    lt, F, G = pair(fam, n)
    r = tk.toda_grid(F, G, lt, GRID, GRID)
    assert np.nanmax(r.residuals) <= 1e-6
    p = tk.toda_grid(F, G, lt, GRID, GRID, form="pde")
    assert np.nanmax(p.residuals) <= 1e-6


def test_perturbed_pair_fails():
    lt, F, G = pair("C", 2)
    bad = G.perturbed(1, "exp(2*t)", 1e-3)
    r = tk.toda_grid(F, bad, lt, GRID, GRID)
    assert np.nanmax(r.residuals) >= 1e-4
