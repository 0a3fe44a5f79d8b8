"""Iterated integrals I(a_1...a_k) anchored at 0, and identities among them.

I(a_1...a_k)(x) = int_0^x phi_{a_1}(x_1) I(a_2...a_k)(x_1) dx_1, with I() = 1.

Values come from one fixed-step RK4 sweep of the triangular system formed
by all suffixes of the requested words. Higher Taylor coefficients at a
point are then exact: s' = phi_head * s_tail is unrolled on jets, so only
the order-0 layer carries quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, EvalError, StructureError
from .exprlang import FuncExpr, as_expr, eval_float, eval_jet, to_source
from .jetcalc import TaylorJet, jet_pow_real, jet_product
from .liedata import j_matrix, k_matrix, leznov_swap_s

Word = tuple[int, ...]

DEFAULT_STEPS = 4096


class IntegrandSet:
    """Generating functions phi_1..phi_m on [0, x_max]."""

    def __init__(self, funcs: Iterable, x_max: float, step: float | None = None,
                 require_positive: bool = False):
        self.funcs: tuple[FuncExpr, ...] = tuple(as_expr(f) for f in funcs)
        if x_max <= 0:
            raise StructureError("integration domain [0, x_max] needs x_max > 0")
        self.x_max = float(x_max)
        self.step = float(step) if step else self.x_max / DEFAULT_STEPS
        self.require_positive = require_positive

    @property
    def m(self) -> int:
        return len(self.funcs)

    def __repr__(self):
        srcs = ", ".join(to_source(f) for f in self.funcs)
        return f"IntegrandSet([{srcs}], x_max={self.x_max}, step={self.step})"

    def with_step(self, step: float) -> "IntegrandSet":
        return IntegrandSet(self.funcs, self.x_max, step, self.require_positive)

    def relabelled(self, labels: Sequence[int]) -> "IntegrandSet":
        """New set whose a-th function is the old labels[a-1]-th."""
        return IntegrandSet([self.funcs[k - 1] for k in labels], self.x_max, self.step,
                            self.require_positive)

    def values(self, ts) -> np.ndarray:
        """phi values, shape (len(ts), m)."""
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, self.m))
        for a, f in enumerate(self.funcs):
            try:
                out[:, a] = eval_float(f, ts)
            except EvalError as exc:
                raise EvalError(f"integrand phi_{a + 1} failed: {exc}") from exc
        if self.require_positive and out.size and not np.all(out > 0):
            bad = np.argwhere(~(out > 0))[0]
            raise DomainError(
                f"phi_{bad[1] + 1} is not strictly positive at quadrature node "
                f"t={ts[bad[0]]!r}; the real branch of the fractional powers needs phi > 0"
            )
        return out

    def jets(self, x: float, order: int) -> list[TaylorJet]:
        if self.require_positive:
            self.values([x])
        return [eval_jet(f, x, order) for f in self.funcs]


def check_word(word: Sequence[int], m: int) -> Word:
    w = tuple(int(a) for a in word)
    for a in w:
        if not 1 <= a <= m:
            raise StructureError(f"label {a} in {w} does not address one of {m} integrands")
    return w


# --------------------------------------------------------------------------
# fixed-step RK4

@dataclass
class _Schedule:
    starts: np.ndarray
    widths: np.ndarray
    marks: np.ndarray  # step count after which each requested point is reached


def _schedule(points: np.ndarray, step: float) -> _Schedule:
    starts, widths, marks = [], [], []
    t = 0.0
    count = 0
    for p in points:
        d = p - t
        k = 0 if d <= 0 else max(1, math.ceil(d / step - 1e-9))
        if k:
            h = d / k
            starts.append(t + h * np.arange(k))
            widths.append(np.full(k, h))
            count += k
        marks.append(count)
        t = p
    if starts:
        return _Schedule(np.concatenate(starts), np.concatenate(widths), np.array(marks))
    return _Schedule(np.zeros(0), np.zeros(0), np.array(marks))


def rk4_sweep(rhs: Callable, y0: np.ndarray, points: Sequence[float], step: float,
              coeffs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Integrate y' = rhs(c(t), y) from t=0, returning y at each sorted point.

    ``coeffs`` maps an array of times to coefficient rows; it is called once
    for all stage nodes of the sweep.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1:
        raise StructureError("points must be a 1-d sequence")
    if pts.size and (pts[0] < 0 or np.any(np.diff(pts) < 0)):
        raise StructureError("points must be sorted ascending and >= 0")
    sch = _schedule(pts, step)
    n = sch.starts.size
    c0 = coeffs(sch.starts)
    cm = coeffs(sch.starts + sch.widths / 2)
    c1 = coeffs(sch.starts + sch.widths)
    y = np.array(y0, dtype=float)
    out = np.empty((pts.size, y.size))
    mark = 0
    for k in range(n + 1):
        while mark < pts.size and sch.marks[mark] == k:
            out[mark] = y
            mark += 1
        if k == n:
            break
        h = sch.widths[k]
        k1 = rhs(c0[k], y)
        k2 = rhs(cm[k], y + (h / 2) * k1)
        k3 = rhs(cm[k], y + (h / 2) * k2)
        k4 = rhs(c1[k], y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return out


# --------------------------------------------------------------------------
# suffix system

class SuffixSystem:
    """All distinct suffixes of a set of words, as one triangular ODE system.

    State 0 is the empty word (constant 1). Each other state is a nonempty
    suffix w with w' = phi_{w[0]} * tail(w).
    """

    def __init__(self, words: Iterable[Sequence[int]], m: int):
        suffixes = {()}
        for w in words:
            w = check_word(w, m)
            for k in range(len(w)):
                suffixes.add(w[k:])
        self.states: list[Word] = sorted(suffixes, key=lambda s: (len(s), s))
        self.index = {s: i for i, s in enumerate(self.states)}
        self.m = m
        self.heads = np.array([s[0] - 1 for s in self.states[1:]], dtype=int)
        self.tails = np.array([self.index[s[1:]] for s in self.states[1:]], dtype=int)

    def __len__(self):
        return len(self.states)

    def sweep(self, phis: IntegrandSet, points: Sequence[float], step: float | None = None) -> np.ndarray:
        """State values at each point, shape (len(points), len(states))."""
        if phis.m != self.m:
            raise StructureError("integrand count changed since the system was built")
        pts = np.asarray(points, dtype=float)
        if pts.size and pts[-1] > phis.x_max * (1 + 1e-12):
            raise StructureError(f"point {pts[-1]} beyond the integration domain [0, {phis.x_max}]")
        heads, tails = self.heads, self.tails
        y0 = np.zeros(len(self.states))
        y0[0] = 1.0
        if len(self.states) == 1:
            return np.ones((pts.size, 1))

        def coeffs(ts):
            return phis.values(ts)[:, heads]

        def rhs(c, y):
            dy = np.zeros_like(y)
            dy[1:] = c * y[tails]
            return dy

        return rk4_sweep(rhs, y0, pts, step or phis.step, coeffs)

    def lift(self, values: np.ndarray, phi_jets: Sequence[TaylorJet], order: int) -> np.ndarray:
        """Taylor coefficients of every state at one point, shape (states, order+1).

        ``values`` are the order-0 state values there; ``phi_jets`` need
        order >= order - 1.
        """
        out = np.zeros((len(self.states), order + 1))
        out[:, 0] = values
        out[0, 0] = 1.0
        if order == 0:
            return out
        phi = [np.asarray(j.coeffs[:order]) for j in phi_jets]
        for r in range(1, len(self.states)):
            h = self.heads[r - 1]
            t = self.tails[r - 1]
            prod = np.convolve(phi[h], out[t, :order])[:order]
            out[r, 1:] = prod / np.arange(1, order + 1)
        return out

    def jets_at(self, phis: IntegrandSet, x: float, order: int, values=None) -> np.ndarray:
        if values is None:
            values = self.sweep(phis, [x])[0]
        return self.lift(values, phis.jets(x, max(order - 1, 0)), order)


# --------------------------------------------------------------------------
# single-sequence API

def eval_iterseq(phis: IntegrandSet, seq: Sequence[int], points: Sequence[float]) -> list[float]:
    """I(seq) at each of the sorted points."""
    w = check_word(seq, phis.m)
    if not w:
        return [1.0] * len(points)
    sys = SuffixSystem([w], phis.m)
    vals = sys.sweep(phis, points)
    return vals[:, sys.index[w]].tolist()


def eval_iterseq_with_error(phis: IntegrandSet, seq, points) -> tuple[list[float], float]:
    """Values at step h plus max |I_h - I_{h/2}| as an error estimate."""
    coarse = eval_iterseq(phis, seq, points)
    fine = eval_iterseq(phis.with_step(phis.step / 2), seq, points)
    err = max((abs(a - b) for a, b in zip(coarse, fine)), default=0.0)
    return coarse, err


def lift_iterseq_jet(phis: IntegrandSet, seq: Sequence[int], x: float, order: int) -> TaylorJet:
    w = check_word(seq, phis.m)
    sys = SuffixSystem([w], phis.m)
    coeffs = sys.jets_at(phis, x, order)
    return TaylorJet(x, coeffs[sys.index[w]])


# --------------------------------------------------------------------------
# identities

def check_shuffle_product(phis: IntegrandSet, a: Sequence[int], b: Sequence[int], x: float) -> float:
    """|I(a)I(b) - int phi_{a1} I(a')I(b) - int phi_{b1} I(a)I(b')|.

    The two integrals ride along the suffix sweep as extra states.
    """
    a = check_word(a, phis.m)
    b = check_word(b, phis.m)
    if not a and not b:
        return 0.0  # I() I() = I(): nothing to integrate
    sys = SuffixSystem([a, b], phis.m)
    ns = len(sys)
    ia, ib = sys.index[a], sys.index[b]
    ia_t = sys.index[a[1:]] if a else None
    ib_t = sys.index[b[1:]] if b else None
    heads, tails = sys.heads, sys.tails
    cols = list(heads) + [a[0] - 1 if a else 0, b[0] - 1 if b else 0]

    def coeffs(ts):
        return phis.values(ts)[:, cols]

    def rhs(c, y):
        dy = np.zeros_like(y)
        dy[1:ns] = c[: ns - 1] * y[tails]
        if a:
            dy[ns] = c[ns - 1] * y[ia_t] * y[ib]
        if b:
            dy[ns + 1] = c[ns] * y[ia] * y[ib_t]
        return dy

    y0 = np.zeros(ns + 2)
    y0[0] = 1.0
    y = rk4_sweep(rhs, y0, [x], phis.step, coeffs)[0]
    return float(abs(y[ia] * y[ib] - y[ns] - y[ns + 1]))


def alternating_sum_words(n: int) -> list[tuple[int, Word, Word]]:
    """Terms (sign, 1->i, n->i+1) of the alternating sum A(n)."""
    return [((-1) ** i, tuple(range(1, i + 1)), tuple(range(n, i, -1))) for i in range(n + 1)]


def check_alternating_sum(phis: IntegrandSet, n: int, x: float) -> float:
    """|sum_i (-1)^i I(1->i) I(n->i+1)|; n = 0 checks nothing and returns 0."""
    if n < 0:
        raise StructureError("n must be >= 0")
    if n > phis.m:
        raise StructureError(f"A({n}) needs {n} integrands, only {phis.m} available")
    if n == 0:
        return 0.0
    terms = alternating_sum_words(n)
    sys = SuffixSystem([w for _, u, v in terms for w in (u, v)], phis.m)
    vals = sys.sweep(phis, [x])[0]
    total = sum(s * vals[sys.index[u]] * vals[sys.index[v]] for s, u, v in terms)
    return float(abs(total))


# --------------------------------------------------------------------------
# word vectors: vectors whose components are signed sums of iterated integrals

Component = tuple[tuple[float, Word], ...]


class WordVector:
    def __init__(self, components: Iterable[Iterable[tuple[float, Sequence[int]]]]):
        self.components: tuple[Component, ...] = tuple(
            tuple((float(c), tuple(w)) for c, w in comp) for comp in components
        )

    def __len__(self):
        return len(self.components)

    def words(self) -> list[Word]:
        return [w for comp in self.components for _, w in comp]

    def relabel(self, fn: Callable[[int], int]) -> "WordVector":
        return WordVector([[(c, tuple(fn(a) for a in w)) for c, w in comp] for comp in self.components])

    def scaled(self, signs: Sequence[float]) -> "WordVector":
        return WordVector([[(s * c, w) for c, w in comp] for s, comp in zip(signs, self.components)])

    def delayed(self, prefix: Sequence[int]) -> "WordVector":
        """Drop ``prefix`` from every word that starts with it; others vanish."""
        p = tuple(prefix)
        k = len(p)
        return WordVector(
            [[(c, w[k:]) for c, w in comp if w[:k] == p] for comp in self.components]
        )

    def combine(self, state_rows: np.ndarray, index: dict) -> np.ndarray:
        """Contract per-state data (states, ...) into per-component data."""
        out = np.zeros((len(self.components),) + state_rows.shape[1:])
        for i, comp in enumerate(self.components):
            for c, w in comp:
                out[i] += c * state_rows[index[w]]
        return out

    def values(self, phis: IntegrandSet, x: float) -> np.ndarray:
        sys = SuffixSystem(self.words(), phis.m)
        vals = sys.sweep(phis, [x])[0]
        return self.combine(vals, sys.index)

    def taylor(self, phis: IntegrandSet, x: float, order: int) -> np.ndarray:
        """Taylor coefficients, shape (len, order+1)."""
        sys = SuffixSystem(self.words(), phis.m)
        return self.combine(sys.jets_at(phis, x, order), sys.index)


def line_vector(n: int) -> WordVector:
    """(1, I(1), I(12), ..., I(1->n))."""
    return WordVector([[(1.0, tuple(range(1, p + 1)))] for p in range(n + 1)])


def fork_words(n: int) -> tuple[Word, Word]:
    """Main and alternate label sequences of the D_n vector on 2n-2 labels."""
    main = tuple(range(1, 2 * n - 1))
    alt = tuple(range(1, n - 1)) + (n, n - 1) + tuple(range(n + 1, 2 * n - 1))
    return main, alt


def fork_vector(n: int) -> WordVector:
    """The 2n-component D_n vector over 2n-2 generating functions."""
    main, alt = fork_words(n)
    comps = []
    for p in range(2 * n):
        if p <= n - 1:
            comps.append([(1.0, main[:p])])
        elif p == n:
            comps.append([(1.0, main[: n - 2] + (n,))])
        else:
            comps.append([(1.0, main[: p - 1]), (1.0, alt[: p - 1])])
    return WordVector(comps)


def fork_prefix(n: int, i: int) -> Word:
    main, _ = fork_words(n)
    if i <= n - 1:
        return main[:i]
    if i == n:
        return main[: n - 2] + (n,)
    return main[: i - 1]


def _inv_sqrt_product(phis: IntegrandSet, x: float, order: int) -> TaylorJet:
    jets = phis.jets(x, order)
    return jet_pow_real(jet_product(jets), -0.5)


def _taylor_to_derivs(coeffs: np.ndarray, k: int) -> np.ndarray:
    """k-th derivative vector from per-component Taylor coefficients."""
    return coeffs[:, k] * math.factorial(k)


def bilinear_pairing_check(kind: str, phis: IntegrandSet, i: int, j: int, x: float,
                           order: int | None = None) -> tuple[float, float]:
    """(computed pairing, predicted value) for the delayed/derivative identities.

    J kinds use n = len(phis) functions and the line swap s(a) = n+1-a.
    K kinds use 2n-2 functions, the D swap and the 2n x 2n matrix K.
    """
    if kind in ("J-delayed", "J-derivative"):
        n = phis.m
        if n < 2:
            raise StructureError("J identities need n >= 2 integrands")
        J = j_matrix(n + 1).astype(float)
        base = line_vector(n)

        def swap(a):
            return leznov_swap_s("line", n, a)

        if kind == "J-delayed":
            if not (0 <= i <= n and 0 <= j <= n):
                raise StructureError(f"delayed indices must lie in 0..{n}")
            left = base.delayed(range(1, i + 1))
            right = base.delayed(range(1, j + 1)).relabel(swap)
            value = _pair_values(left, right, J, phis, x)
            expected = float((-1) ** i) if i + j == n else 0.0
            return value, expected
        if kind == "J-derivative":
            if i < 0 or j < 0 or i + j > n:
                raise StructureError(f"derivative indices need i, j >= 0 and i + j <= {n}")
            return _pair_derivs(base, base.relabel(swap), J, phis, x, i, j, order), (
                float((-1) ** i) if i + j == n else 0.0
            )
    if kind in ("K-delayed", "K-derivative"):
        if phis.m % 2 or phis.m < 4:
            raise StructureError("K identities need 2n-2 integrands with n >= 3")
        n = (phis.m + 2) // 2
        K = k_matrix(n).astype(float)
        base = fork_vector(n)

        def swap(a):
            return leznov_swap_s("D", n, a)

        if kind == "K-delayed":
            top = 2 * n - 1
            if not (0 <= i <= top and 0 <= j <= top):
                raise StructureError(f"delayed indices must lie in 0..{top}")
            left = base.delayed(fork_prefix(n, i))
            right = base.delayed(fork_prefix(n, j)).relabel(swap)
            value = _pair_values(left, right, K, phis, x)
            expected = float(K[i, j]) if i + j == 2 * n - 1 else 0.0
            return value, expected
        if not (0 <= i <= n - 1 and 0 <= j <= n - 1):
            raise StructureError(f"derivative indices must lie in 0..{n - 1}")
        if i + j < 2 * n - 2:
            expected = 0.0
        else:
            expected = float((-1) ** (n - 1) * 2)
        return _pair_derivs(base, base.relabel(swap), K, phis, x, i, j, order), expected
    raise StructureError(f"unknown pairing kind {kind!r}")


def _pair_values(left: WordVector, right: WordVector, M: np.ndarray, phis, x) -> float:
    words = left.words() + right.words()
    sys = SuffixSystem(words, phis.m)
    vals = sys.sweep(phis, [x])[0]
    lv = left.combine(vals, sys.index)
    rv = right.combine(vals, sys.index)
    return float(lv @ M @ rv)


def _pair_derivs(base: WordVector, swapped: WordVector, M, phis, x, i, j, order) -> float:
    k = max(i, j) if order is None else max(order, i, j)
    phis_pos = IntegrandSet(phis.funcs, phis.x_max, phis.step, require_positive=True)
    sys = SuffixSystem(base.words() + swapped.words(), phis.m)
    states = sys.jets_at(phis_pos, x, k)
    f0 = _inv_sqrt_product(phis_pos, x, k)
    lt = _times_prefactor(base.combine(states, sys.index), f0)
    rt = _times_prefactor(swapped.combine(states, sys.index), f0)
    return float(_taylor_to_derivs(lt, i) @ M @ _taylor_to_derivs(rt, j))


def _times_prefactor(coeffs: np.ndarray, pref: TaylorJet) -> np.ndarray:
    order = coeffs.shape[1] - 1
    out = np.empty_like(coeffs)
    for r in range(coeffs.shape[0]):
        out[r] = np.convolve(coeffs[r], pref.coeffs[: order + 1])[: order + 1]
    return out
