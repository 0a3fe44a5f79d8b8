"""Completion of a chiral frame F, F', ... into a symplectic or orthogonal
matrix, the pairings I~_j that parameterize it, and the induction that fills
the whole table of pairings C(F^{(i)}, F^{(j)}) from its leading entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, InconsistencyError, StructureError
from .jetcalc import TaylorJet
from .leznov import ChiralVector
from .liedata import form_for

DEGENERACY_RATIO = 1e-8


def _family(F: ChiralVector, allowed: str) -> str:
    fam = F.lie_type.family
    if fam not in allowed:
        raise StructureError(f"operation needs family in {tuple(allowed)}, got {F.lie_type}")
    return fam


def top_order(F: ChiralVector) -> int:
    """Highest derivative in the frame: 2n-1 (C) or 2n (B)."""
    n = F.lie_type.rank
    return 2 * n - 1 if F.lie_type.family == "C" else 2 * n


def conserved_range(F: ChiralVector) -> range:
    n = F.lie_type.rank
    return range(1, n) if F.lie_type.family == "C" else range(1, n + 1)


def _conserved_pair(F: ChiralVector, j: int) -> tuple[int, int]:
    n = F.lie_type.rank
    if j not in conserved_range(F):
        raise StructureError(
            f"I~_j defined for j in {conserved_range(F).start}..{conserved_range(F).stop - 1}, got {j}"
        )
    if F.lie_type.family == "C":
        return n + j - 1, n + j
    return n + j, n + j


def _derivative_jet(jet: TaylorJet, m: int, order: int) -> TaylorJet:
    for _ in range(m):
        jet = jet.differentiate()
    return jet.truncate(order)


def conserved_jet(F: ChiralVector, j: int, x: float, order: int) -> TaylorJet:
    """Jet of I~_j = C(F^{(n+j-1)}, F^{(n+j)}) or B(F^{(n+j)}, F^{(n+j)})."""
    _family(F, "CB")
    a, b = _conserved_pair(F, j)
    M = form_for(F.lie_type).astype(float)
    jets = F.jets(x, b + order)
    ja = [_derivative_jet(j_, a, order) for j_ in jets]
    jb = [_derivative_jet(j_, b, order) for j_ in jets]
    out = TaylorJet.constant(0.0, x, order)
    for p in range(F.length):
        for q in range(F.length):
            if M[p, q]:
                out = out + ja[p] * jb[q] * M[p, q]
    return out


def conserved_quantities(F: ChiralVector, x_samples) -> list[tuple[int, np.ndarray, float]]:
    """(j, I~_j at the samples, max - min over the samples); drift is reported only."""
    _family(F, "CB")
    xs = np.atleast_1d(np.asarray(x_samples, dtype=float))
    M = form_for(F.lie_type).astype(float)
    d = F.derivatives_many(xs, top_order(F))
    out = []
    for j in conserved_range(F):
        a, b = _conserved_pair(F, j)
        vals = np.einsum("pi,ij,pj->p", d[:, a], M, d[:, b])
        out.append((j, vals, float(vals.max() - vals.min())))
    return out


# --------------------------------------------------------------------------
# bilinear table

@dataclass
class BilinearTable:
    form: str
    n: int
    x: float
    entries: dict  # (i, j) with i <= j -> TaylorJet at x

    def value(self, i: int, j: int) -> float:
        if i <= j:
            return self.entries[(i, j)].value
        s = -1.0 if self.form == "C" else 1.0
        return s * self.entries[(j, i)].value

    def level(self, l: int) -> list[float]:
        return [self.value(i, l - i) for i in range(0, l // 2 + 1) if (i, l - i) in self.entries]

    def as_matrix(self) -> np.ndarray:
        k = self.top + 1
        return np.array([[self.value(i, j) for j in range(k)] for i in range(k)])

    @property
    def top(self) -> int:
        return 2 * self.n - 1 if self.form == "C" else 2 * self.n


def bilinear_table(F: ChiralVector, x: float, conserved=None, tol: float = 1e-8) -> BilinearTable:
    """Fill C(i, j) (or B(i, j)) for 0 <= i <= j <= top by induction on level.

    Leading entries come from the family conditions and the I~_j jets;
    the rest from C(i, j+1) = d/dx C(i, j) - C(i+1, j), and for B also
    B(i, i+1) = 1/2 d/dx B(i, i).  ``conserved`` may supply the I~_j jets
    (index j-1) at order >= what the induction consumes; by default they
    are computed from F.  Every entry is cross-checked against the direct
    pairing of derivative rows.
    """
    fam = _family(F, "CB")
    n = F.lie_type.rank
    top = top_order(F)
    max_level = 2 * top
    order0 = max_level  # order of jets at level 0; drops by one per level
    skew = fam == "C"

    if conserved is None:
        conserved = [None] * len(conserved_range(F))
    conserved = list(conserved)
    if len(conserved) != len(conserved_range(F)):
        raise StructureError(f"need {len(conserved_range(F))} conserved jets, got {len(conserved)}")

    def leading(k: int, level: int) -> TaylorJet:
        order = order0 - level
        if fam == "C":
            if level % 2 == 0:
                return TaylorJet.constant(0.0, x, order)
            if k <= n - 2:
                return TaylorJet.constant(0.0, x, order)
            if k == n - 1:
                return TaylorJet.constant(-1.0, x, order)
            j = k - n + 1
        else:
            if k <= n - 1:
                return TaylorJet.constant(0.0, x, order)
            if k == n:
                return TaylorJet.constant(1.0, x, order)
            j = k - n
        given = conserved[j - 1]
        if given is None:
            return conserved_jet(F, j, x, order)
        if not isinstance(given, TaylorJet) or given.order < order:
            raise StructureError(f"I~_{j} must be a jet of order >= {order}")
        return given.truncate(order)

    E: dict[tuple[int, int], TaylorJet] = {}

    def get(i: int, j: int) -> TaylorJet:
        if i <= j:
            return E[(i, j)]
        return -E[(j, i)] if skew else E[(j, i)]

    for level in range(max_level + 1):
        h = level // 2
        if level % 2 == 0:
            E[(h, h)] = leading(h, level) if fam == "B" else TaylorJet.constant(0.0, x, order0 - level)
        elif fam == "C":
            E[(h, h + 1)] = leading(h, level)
        else:
            E[(h, h + 1)] = E[(h, h)].differentiate() * 0.5
        for i in range(h - 1, -1, -1):
            j = level - i
            if j > top:
                break
            E[(i, j)] = get(i, j - 1).differentiate() - get(i + 1, j - 1)

    table = BilinearTable(fam, n, float(x), E)
    _cross_check(F, table, tol)
    return table


def _cross_check(F: ChiralVector, table: BilinearTable, tol: float) -> None:
    M = form_for(F.lie_type).astype(float)
    d = F.derivatives(table.x, table.top)
    direct = d @ M @ d.T
    for (i, j), jet in table.entries.items():
        gap = abs(jet.value - direct[i, j])
        if gap > tol * max(1.0, abs(direct[i, j])):
            raise InconsistencyError(
                f"table entry ({i}, {j}) = {jet.value!r} but direct pairing gives {direct[i, j]!r}"
            )


# --------------------------------------------------------------------------
# completion

def _check_generic(rows: np.ndarray, x: float) -> None:
    s = np.linalg.svd(rows, compute_uv=False)
    if s[-1] < DEGENERACY_RATIO * s[0]:
        raise DegeneracyError(
            f"derivative frame is rank deficient at x = {x!r}: "
            f"smallest/largest singular value {s[-1] / s[0]:.3e}"
        )


def complete_symplectic(F: ChiralVector, x: float) -> np.ndarray:
    """2n x 2n matrix with Phi Omega Phi^T = Omega.

    Rows (1-based) n..2n are F^{(n)}, F, F', ..., F^{(n-1)}; rows n-k for
    k = 1..n-1 are built from F^{(n+k)} by removing its pairings with every
    completed pair and scaling so that it pairs to 1 with row 2n-k.
    """
    _family(F, "C")
    n = F.lie_type.rank
    d = F.derivatives(x, 2 * n - 1)
    _check_generic(d, x)
    Om = form_for(F.lie_type).astype(float)

    def C(u, v):
        return float(u @ Om @ v)

    Phi = np.zeros((2 * n, 2 * n))
    for i in range(1, n + 1):
        Phi[n + i - 1] = d[i - 1]
    Phi[n - 1] = d[n]
    for k in range(1, n):
        v = d[n + k]
        w = v.copy()
        for i in range(n - k + 1, n + 1):
            e, f = Phi[i - 1], Phi[n + i - 1]
            w -= C(v, f) * e - C(v, e) * f
        partner = Phi[2 * n - k - 1]
        c = C(w, partner)
        if abs(c) < DEGENERACY_RATIO:
            raise DegeneracyError(f"row {n - k} cannot be normalized at x = {x!r}")
        Phi[n - k - 1] = w / c
    return Phi


def complete_orthogonal(F: ChiralVector, x: float) -> tuple[np.ndarray, int]:
    """(2n+1)-square Phi with Phi Theta Phi^T = Theta, and sign(det Phi).

    Rows n+1..2n+1 (1-based) are F, F', ..., F^{(n)}; row n-k+1 comes from
    F^{(n+k)}, k = 1..n, paired to 1 with row 2n-k+1 = F^{(n-k)}.
    """
    _family(F, "B")
    n = F.lie_type.rank
    d = F.derivatives(x, 2 * n)
    _check_generic(d, x)
    Th = form_for(F.lie_type).astype(float)

    def B(u, v):
        return float(u @ Th @ v)

    Phi = np.zeros((2 * n + 1, 2 * n + 1))
    for i in range(n + 1):
        Phi[n + i] = d[i]
    g = Phi[2 * n]
    for k in range(1, n + 1):
        v = d[n + k]
        w = v - B(v, g) * g
        for i in range(n - k + 2, n + 1):
            e, f = Phi[i - 1], Phi[n + i - 1]
            w -= B(v, f) * e + B(v, e) * f
        partner = Phi[2 * n - k]
        c = B(w, partner)
        if abs(c) < DEGENERACY_RATIO:
            raise DegeneracyError(f"row {n - k + 1} cannot be normalized at x = {x!r}")
        w = w / c
        w = w - 0.5 * B(w, w) * partner
        Phi[n - k] = w
    sign = 1 if np.linalg.det(Phi) > 0 else -1
    return Phi, sign


def group_relation_defect(Phi: np.ndarray, form: np.ndarray) -> float:
    return float(np.abs(Phi @ form @ Phi.T - form).max())
