"""Explicit chiral vectors F(x) built from n generating functions, and the
pointwise conditions they must satisfy (Wronskian = 1, symplectic and
orthogonal isotropy, and the D_n pairing conditions)."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import StructureError
from .exprlang import as_expr, eval_jet
from .iterint import IntegrandSet, SuffixSystem, WordVector, fork_vector
from .jetcalc import TaylorJet, jet_pow_real, jet_product
from .liedata import LieType, form_for

Evaluator = Callable[[np.ndarray, int], np.ndarray]


def _factorials(order: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


class ChiralVector:
    """A vector of functions of one variable, evaluable to jets at any point.

    ``evaluator(xs, order)`` returns Taylor coefficients with shape
    (len(xs), length, order + 1).
    """

    def __init__(self, lie_type: LieType, evaluator: Evaluator, provenance: str,
                 length: int | None = None, x_max: float | None = None,
                 error_estimator: Callable[[Sequence[float]], float] | None = None):
        self.lie_type = lie_type
        self.length = lie_type.vector_length if length is None else length
        if self.length != lie_type.vector_length:
            raise StructureError(
                f"{lie_type} needs a vector of length {lie_type.vector_length}, got {self.length}"
            )
        if provenance not in ("leznov-built", "user-supplied"):
            raise StructureError(f"unknown provenance {provenance!r}")
        self._evaluator = evaluator
        self.provenance = provenance
        self.x_max = x_max
        self._error_estimator = error_estimator

    def __repr__(self):
        return f"ChiralVector({self.lie_type}, length={self.length}, {self.provenance})"

    @classmethod
    def from_exprs(cls, lie_type: LieType, exprs: Sequence) -> "ChiralVector":
        trees = [as_expr(e) for e in exprs]
        if len(trees) != lie_type.vector_length:
            raise StructureError(
                f"{lie_type} needs {lie_type.vector_length} components, got {len(trees)}"
            )

        def evaluator(xs, order):
            return np.array([[eval_jet(t, x, order).coeffs for t in trees] for x in xs])

        return cls(lie_type, evaluator, "user-supplied")

    def taylor(self, xs, order: int) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = self._evaluator(xs, order)
        if out.shape != (xs.size, self.length, order + 1):
            raise StructureError("evaluator returned a malformed coefficient array")
        return out

    def derivatives(self, x: float, order: int) -> np.ndarray:
        """Rows F, F', ..., F^{(order)} at x, shape (order+1, length)."""
        return (self.taylor([x], order)[0] * _factorials(order)).T

    def derivatives_many(self, xs, order: int) -> np.ndarray:
        """Shape (len(xs), order+1, length)."""
        t = self.taylor(xs, order) * _factorials(order)
        return np.transpose(t, (0, 2, 1))

    def jets(self, x: float, order: int) -> list[TaylorJet]:
        return [TaylorJet(x, c) for c in self.taylor([x], order)[0]]

    def component(self, k: int) -> Callable[[float, int], TaylorJet]:
        if not 0 <= k < self.length:
            raise StructureError(f"component {k} outside 0..{self.length - 1}")
        return lambda x, order: TaylorJet(x, self.taylor([x], order)[0, k])

    def quadrature_error(self, xs) -> float:
        if self._error_estimator is None:
            return 0.0
        return self._error_estimator(xs)

    def perturbed(self, index: int, expr, eps: float) -> "ChiralVector":
        """Copy with eps * expr(t) added to one component (negative controls)."""
        if not 0 <= index < self.length:
            raise StructureError(f"component {index} outside 0..{self.length - 1}")
        tree = as_expr(expr)
        inner = self._evaluator

        def evaluator(xs, order):
            out = np.array(inner(xs, order), dtype=float)
            for p, x in enumerate(xs):
                out[p, index] += eps * eval_jet(tree, x, order).coeffs
            return out

        return ChiralVector(self.lie_type, evaluator, "user-supplied", x_max=self.x_max,
                            error_estimator=self._error_estimator)


class _WordEvaluator:
    """Evaluates prefactor(x) * WordVector with cached quadrature values."""

    def __init__(self, phis: IntegrandSet, vec: WordVector,
                 prefactor: Callable[[list[TaylorJet]], TaylorJet]):
        self.phis = phis
        self.vec = vec
        self.prefactor = prefactor
        self.system = SuffixSystem(vec.words(), phis.m)
        self._cache: dict[float, np.ndarray] = {}

    def state_values(self, xs) -> np.ndarray:
        missing = sorted({float(x) for x in xs} - self._cache.keys())
        if missing:
            vals = self.system.sweep(self.phis, missing)
            for x, v in zip(missing, vals):
                self._cache[x] = v
        return np.array([self._cache[float(x)] for x in xs])

    def __call__(self, xs, order: int) -> np.ndarray:
        vals = self.state_values(xs)
        out = np.empty((len(xs), len(self.vec), order + 1))
        for p, x in enumerate(xs):
            phi_jets = self.phis.jets(float(x), order)
            states = self.system.lift(vals[p], [j.truncate(max(order - 1, 0)) for j in phi_jets], order)
            raw = self.vec.combine(states, self.system.index)
            pref = self.prefactor(phi_jets).coeffs
            for r in range(raw.shape[0]):
                out[p, r] = np.convolve(raw[r], pref)[: order + 1]
        return out

    def error_estimate(self, xs) -> float:
        """max |F_h - F_{h/2}| over components at the given points."""
        xs = sorted({float(x) for x in xs})
        coarse = self.system.sweep(self.phis, xs)
        fine = self.system.sweep(self.phis, xs, self.phis.step / 2)
        err = 0.0
        for p, x in enumerate(xs):
            pref = self.prefactor(self.phis.jets(x, 0)).value
            d = self.vec.combine(coarse[p] - fine[p], self.system.index) * pref
            err = max(err, float(np.abs(d).max()))
        return err


# --------------------------------------------------------------------------
# word layouts per family

def _ascending(p: int) -> tuple[int, ...]:
    return tuple(range(1, p + 1))


def words_A(n: int) -> WordVector:
    return WordVector([[(1.0, _ascending(p))] for p in range(n + 1)])


def words_C(n: int) -> WordVector:
    comps = [[((-1.0) ** (n - p), _ascending(p))] for p in range(n)]
    for p in range(n, 2 * n - 1):
        comps.append([(1.0, _ascending(n) + tuple(range(n - 1, p - n, -1)))])
    comps.append([(1.0, _ascending(n))])
    return WordVector(comps)


def words_B(n: int) -> WordVector:
    comps = [[((-1.0) ** (n - p), _ascending(p))] for p in range(n)]
    for p in range(n, 2 * n - 1):
        comps.append([(1.0, _ascending(n) + tuple(range(n, p - n, -1)))])
    comps.append([(1.0, _ascending(n) + (n,))])
    comps.append([(1.0, _ascending(n))])
    return WordVector(comps)


def words_D(n: int) -> WordVector:
    """Fork vector on 2n-2 labels folded onto n labels (a -> 2n-1-a above n)."""
    return fork_vector(n).relabel(lambda a: a if a <= n else 2 * n - 1 - a)


def _prefactor(lt: LieType) -> Callable[[list[TaylorJet]], TaylorJet]:
    n = lt.rank
    fam = lt.family

    def pref(phi: list[TaylorJet]) -> TaylorJet:
        if fam == "A":
            return jet_product(jet_pow_real(phi[i], -(n - i) / (n + 1)) for i in range(n))
        if fam == "C":
            parts = [jet_pow_real(p, -1.0) for p in phi[: n - 1]] + [jet_pow_real(phi[n - 1], -0.5)]
            return jet_product(parts)
        if fam == "B":
            return jet_pow_real(jet_product(phi), -1.0)
        parts = [jet_pow_real(p, -1.0) for p in phi[: n - 2]]
        parts.append(jet_pow_real(phi[n - 2] * phi[n - 1], -0.5))
        return jet_product(parts)

    return pref


WORDS = {"A": words_A, "B": words_B, "C": words_C, "D": words_D}


def build_solution_vector(lt: LieType, phis: IntegrandSet) -> ChiralVector:
    """The explicit vector F for ``lt`` from n positive generating functions."""
    if phis.m != lt.rank:
        raise StructureError(f"{lt} needs exactly {lt.rank} generating functions, got {phis.m}")
    phis = IntegrandSet(phis.funcs, phis.x_max, phis.step, require_positive=True)
    ev = _WordEvaluator(phis, WORDS[lt.family](lt.rank), _prefactor(lt))
    return ChiralVector(lt, ev, "leznov-built", x_max=phis.x_max, error_estimator=ev.error_estimate)


# --------------------------------------------------------------------------
# conditions

def required_order(lt: LieType) -> int:
    return lt.rank - 1 if lt.family == "D" else lt.rank


def condition_targets(lt: LieType) -> list[tuple[str, int, int, float]]:
    """(id, i, j, target) for pairing conditions; A uses the Wronskian instead."""
    n = lt.rank
    if lt.family == "C":
        out = [(f"c=0[{i}]", i, i + 1, 0.0) for i in range(n - 1)]
        out.append(("c=1", n - 1, n, -1.0))
        return out
    if lt.family == "B":
        out = [(f"b=0[{i}]", i, i, 0.0) for i in range(n)]
        out.append(("b=1", n, n, 1.0))
        return out
    if lt.family == "D":
        out = [
            (f"d=0[{i},{j}]", i, j, 0.0)
            for i in range(n)
            for j in range(i, n)
            if i + j < 2 * n - 2
        ]
        out.append(("d=2", n - 1, n - 1, float((-1) ** (n - 1) * 2)))
        return out
    return [("w=1", -1, -1, 1.0)]


def wronskian(derivs: np.ndarray) -> float:
    """det(f_j^{(i)}) from rows of derivatives (at least length rows)."""
    k = derivs.shape[1]
    return float(np.linalg.det(derivs[:k]))


def verify_conditions(v: ChiralVector, x_samples, order: int | None = None) -> list[tuple[str, float]]:
    """Worst absolute deviation of each family condition over the samples."""
    lt = v.lie_type
    need = required_order(lt)
    order = need if order is None else order
    if order < need:
        raise StructureError(f"{lt} conditions need jets of order {need}, got {order}")
    xs = np.atleast_1d(np.asarray(x_samples, dtype=float))
    derivs = v.derivatives_many(xs, order)
    targets = condition_targets(lt)
    worst = {cid: 0.0 for cid, *_ in targets}
    if lt.family == "A":
        for d in derivs:
            worst["w=1"] = max(worst["w=1"], abs(wronskian(d) - 1.0))
        return list(worst.items())
    M = form_for(lt).astype(float)
    for d in derivs:
        for cid, i, j, target in targets:
            worst[cid] = max(worst[cid], abs(float(d[i] @ M @ d[j]) - target))
    return list(worst.items())
