"""Tau determinants of a chiral pair (F, G), their exact derivatives, the
sigma/u fields and the Toda residuals.

tau_i(x, y) = det(F^{(j)}(x) . G^{(k)}(y))_{0 <= j, k < i}, tau_0 = 1.
All x/y derivatives of tau come from cofactors of the next leading block,
so the only numerical error left is whatever is already in F and G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistencyError, SingularPointError, StructureError
from .leznov import ChiralVector
from .liedata import LieType, cartan_matrix
from .minorlab import minor


@dataclass
class TauTable:
    point: tuple[float, float]
    pair_matrix: np.ndarray
    taus: np.ndarray
    tau_x: np.ndarray = field(default=None)
    tau_y: np.ndarray = field(default=None)
    tau_xy: np.ndarray = field(default=None)

    @property
    def size(self) -> int:
        return self.pair_matrix.shape[0]

    @property
    def n(self) -> int:
        return self.size - 2


def _leading_dets(T: np.ndarray) -> np.ndarray:
    taus = np.ones(T.shape[0])
    for i in range(1, T.shape[0]):
        taus[i] = np.linalg.det(T[:i, :i])
    return taus


def tau_table_from_derivs(dF: np.ndarray, dG: np.ndarray, x: float = 0.0, y: float = 0.0) -> TauTable:
    """Tau table from derivative rows dF[j] = F^{(j)}(x), dG[k] = G^{(k)}(y).

    With n + 2 rows on each side the table holds tau_0 .. tau_{n+1} and the
    cofactor derivatives of tau_1 .. tau_n.
    """
    dF = np.asarray(dF, dtype=float)
    dG = np.asarray(dG, dtype=float)
    if dF.ndim != 2 or dF.shape != dG.shape:
        raise StructureError(f"derivative rows must have matching 2-d shapes, got {dF.shape} and {dG.shape}")
    if dF.shape[0] < 2:
        raise StructureError("need at least two derivative rows")
    T = dF @ dG.T
    t = TauTable((float(x), float(y)), T, _leading_dets(T))
    n = t.n
    t.tau_x = np.zeros(n + 1)
    t.tau_y = np.zeros(n + 1)
    t.tau_xy = np.zeros(n + 1)
    for i in range(1, n + 1):
        t.tau_x[i], t.tau_y[i], t.tau_xy[i] = _cofactor_derivs(T, i)
    return t


def tau_table(F: ChiralVector, G: ChiralVector, x: float, y: float, n: int | None = None) -> TauTable:
    if F.lie_type != G.lie_type:
        raise StructureError(f"F is {F.lie_type} but G is {G.lie_type}")
    n = F.lie_type.rank if n is None else n
    if n < 1:
        raise StructureError("tau table needs n >= 1")
    return tau_table_from_derivs(F.derivatives(x, n + 1), G.derivatives(y, n + 1), x, y)


def _cofactor(T: np.ndarray, a: int, b: int) -> float:
    k = T.shape[0]
    rows = [r for r in range(k) if r != a]
    cols = [c for c in range(k) if c != b]
    return (-1) ** (a + b) * minor(T, rows, cols)


def _cofactor_derivs(T: np.ndarray, i: int) -> tuple[float, float, float]:
    block = T[: i + 1, : i + 1]
    return (
        -_cofactor(block, i - 1, i),
        -_cofactor(block, i, i - 1),
        _cofactor(block, i - 1, i - 1),
    )


def tau_derivatives(t: TauTable, i: int) -> tuple[float, float, float]:
    """(tau_{i,x}, tau_{i,y}, tau_{i,xy}) from cofactors of the (i+1)-block."""
    if not 1 <= i <= t.n:
        raise StructureError(f"tau derivatives available for 1..{t.n}, got {i}")
    return float(t.tau_x[i]), float(t.tau_y[i]), float(t.tau_xy[i])


def tau_jet(t: TauTable, i: int) -> tuple[float, float, float, float]:
    """(v, v_x, v_y, v_xy) for tau_i; tau_0 is the constant 1."""
    if i == 0:
        return 1.0, 0.0, 0.0, 0.0
    return (float(t.taus[i]),) + tau_derivatives(t, i)


def dd(v: float, v_x: float, v_y: float, v_xy: float) -> float:
    return v * v_xy - v_x * v_y


# --------------------------------------------------------------------------
# sigma fields and their chain-rule derivatives

def _sqrt4(q, x, y, index):
    v, vx, vy, vxy = q
    if not v > 0:
        raise SingularPointError(x, y, index, "square root of a nonpositive tau combination")
    s = math.sqrt(v)
    return s, vx / (2 * s), vy / (2 * s), vxy / (2 * s) - vx * vy / (4 * s ** 3)


def _sigma_quads(t: TauTable, lt: LieType) -> list[tuple[float, float, float, float]]:
    """(sigma, sigma_x, sigma_y, sigma_xy) for sigma_1..sigma_n."""
    n = lt.rank
    if t.n < n:
        raise StructureError(f"{lt} needs a tau table of size {n + 2}, got {t.size}")
    x, y = t.point
    quads = [tau_jet(t, i) for i in range(1, n + 1)]
    if lt.family == "B":
        quads[n - 1] = _sqrt4(quads[n - 1], x, y, n)
    elif lt.family == "D":
        a = tau_jet(t, n)
        b = tau_jet(t, n - 1)
        plus = _sqrt4(tuple(p + 2 * q for p, q in zip(a, b)), x, y, n - 1)
        minus = _sqrt4(tuple(p - 2 * q for p, q in zip(a, b)), x, y, n)
        quads[n - 2] = tuple((p + m) / 2 for p, m in zip(plus, minus))
        quads[n - 1] = tuple((p - m) / 2 for p, m in zip(plus, minus))
    for i, q in enumerate(quads, start=1):
        if not q[0] > 0:
            raise SingularPointError(x, y, i)
    return quads


@dataclass
class SigmaFields:
    sigmas: np.ndarray
    us: np.ndarray
    branch_sign: int | None
    quads: list = field(repr=False, default_factory=list)


def branch_sign(t: TauTable, lt: LieType) -> int:
    """sign(tau_{n+1} / tau_n) for the B family."""
    n = lt.rank
    r = t.taus[n + 1] / t.taus[n]
    return 1 if r > 0 else -1


def sigma_fields(t: TauTable, lt: LieType) -> SigmaFields:
    """sigma_i and u_i = -log sigma_i; raises SingularPointError off the real branch."""
    quads = _sigma_quads(t, lt)
    sig = np.array([q[0] for q in quads])
    bs = None
    if lt.family == "B":
        if t.taus[lt.rank] <= 0:
            raise SingularPointError(*t.point, lt.rank)
        bs = branch_sign(t, lt)
    return SigmaFields(sig, -np.log(sig), bs, quads)


def equation_coefficients(lt: LieType, branch: int | None = None) -> np.ndarray:
    """c_i in DD(sigma_i) = c_i prod sigma_j^{-a_ij}; 1 except B's last (+-1/2)."""
    c = np.ones(lt.rank)
    if lt.family == "B":
        if branch not in (1, -1):
            raise StructureError("B family needs a branch sign of +1 or -1")
        c[-1] = branch / 2
    return c


# --------------------------------------------------------------------------
# residuals

EXCLUDED = None


def _rhs_products(sig: np.ndarray, A: np.ndarray) -> np.ndarray:
    n = len(sig)
    out = np.ones(n)
    for i in range(n):
        for j in range(n):
            if j != i and A[i, j]:
                out[i] *= sig[j] ** (-A[i, j])
    return out


def toda_residual_table(t: TauTable, lt: LieType, branch: int | None = None) -> np.ndarray:
    """Per-equation |DD(sigma_i) - c_i prod_{j != i} sigma_j^{-a_ij}| / max(1, |rhs|)."""
    quads = _sigma_quads(t, lt)
    if lt.family == "B" and branch is None:
        branch = branch_sign(t, lt)
    c = equation_coefficients(lt, branch)
    sig = np.array([q[0] for q in quads])
    lhs = np.array([dd(*q) for q in quads])
    rhs = c * _rhs_products(sig, cartan_matrix(lt))
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))


def toda_residual(F: ChiralVector, G: ChiralVector, lt: LieType, x: float, y: float,
                  branch: int | None = None):
    """Residual vector, or EXCLUDED (None) at a singular point."""
    try:
        return toda_residual_table(tau_table(F, G, x, y, lt.rank), lt, branch)
    except SingularPointError:
        return EXCLUDED


def pde_residual_table(t: TauTable, lt: LieType, shift=None, coefficients=None) -> np.ndarray:
    """|u_{i,xy} + c_i exp(sum_j a_ij u_j)| / max(1, |exp term|) for u = -log sigma - shift."""
    quads = _sigma_quads(t, lt)
    A = cartan_matrix(lt).astype(float)
    sig = np.array([q[0] for q in quads])
    u = -np.log(sig)
    if shift is not None:
        u = u - np.asarray(shift, dtype=float)
    u_xy = np.array([-dd(*q) / q[0] ** 2 for q in quads])
    c = np.ones(lt.rank) if coefficients is None else np.asarray(coefficients, dtype=float)
    e = c * np.exp(A @ u)
    return np.abs(u_xy + e) / np.maximum(1.0, np.abs(e))


def normalization_shift(lt: LieType, variant: str = "B-log2", sign: int = 1) -> np.ndarray:
    """r solving A r = (0, ..., 0, sign * log 2).

    Fields u from the B construction obey the last equation with coefficient
    +-1/2; u - r (sign = +1) then obeys the unit-coefficient system up to the
    branch sign.
    """
    if variant != "B-log2":
        raise StructureError(f"unknown shift variant {variant!r}")
    if lt.family != "B":
        raise StructureError("the log 2 shift applies to the B family only")
    if sign not in (1, -1, 0):
        raise StructureError("sign must be +1, -1 or 0")
    b = np.zeros(lt.rank)
    b[-1] = sign * math.log(2.0)
    return np.linalg.solve(cartan_matrix(lt).astype(float), b)


# --------------------------------------------------------------------------
# grid sweep

@dataclass
class GridResult:
    xs: np.ndarray
    ys: np.ndarray
    residuals: np.ndarray        # (nx, ny, n), nan at excluded points
    excluded: np.ndarray         # (nx, ny) bool
    branch_sign: int | None

    @property
    def max_residual(self) -> np.ndarray:
        """Per-equation maximum over nonexcluded points."""
        r = self.residuals[~self.excluded]
        if r.size == 0:
            return np.full(self.residuals.shape[-1], np.nan)
        return r.max(axis=0)


def toda_grid(F: ChiralVector, G: ChiralVector, lt: LieType, xs, ys, form: str = "tau",
              shift=None) -> GridResult:
    """Residuals over the grid xs x ys.

    ``form="tau"`` checks DD(sigma_i) against the signed products;
    ``form="pde"`` checks the u-form (optionally shifted).  For B the branch
    sign is measured at the first nonsingular point and must stay constant.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = lt.rank
    dF = F.derivatives_many(xs, n + 1)
    dG = G.derivatives_many(ys, n + 1)
    res = np.full((xs.size, ys.size, n), np.nan)
    excl = np.zeros((xs.size, ys.size), dtype=bool)
    branch = None
    for a, x in enumerate(xs):
        for b, y in enumerate(ys):
            t = tau_table_from_derivs(dF[a], dG[b], x, y)
            try:
                sf = sigma_fields(t, lt)
                if sf.branch_sign is not None:
                    if branch is None:
                        branch = sf.branch_sign
                    elif sf.branch_sign != branch:
                        raise InconsistencyError(
                            f"branch sign flipped to {sf.branch_sign} at (x, y) = ({x}, {y})"
                        )
                if form == "tau":
                    res[a, b] = toda_residual_table(t, lt, branch)
                else:
                    coef = equation_coefficients(lt, branch) if lt.family == "B" else None
                    if coef is not None and shift is not None:
                        coef = np.sign(coef)
                    res[a, b] = pde_residual_table(t, lt, shift, coef)
            except SingularPointError:
                excl[a, b] = True
    return GridResult(xs, ys, res, excl, branch)
