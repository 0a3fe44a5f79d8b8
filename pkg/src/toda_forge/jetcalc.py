"""Truncated Taylor (jet) arithmetic at a point.

A :class:`TaylorJet` stores ``coeffs[m] = f^{(m)}(x0) / m!`` for
``m = 0..order``. Every operation here is exact on the truncated series,
so derivative identities reduce to algebra on coefficient vectors.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

from .errors import DomainError, SingularityError, StructureError

Number = Union[int, float]


def default_order(rank: int) -> int:
    """Default truncation order used by builders of rank ``rank``."""
    return 2 * rank + 2


class TaylorJet:
    __slots__ = ("base_point", "coeffs")

    def __init__(self, base_point: float, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise StructureError("jet needs a non-empty 1-d coefficient vector")
        if not np.all(np.isfinite(c)):
            raise SingularityError("non-finite Taylor coefficient", base_point)
        c.setflags(write=False)
        self.base_point = float(base_point)
        self.coeffs = c

    # constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value: float, base_point: float, order: int) -> "TaylorJet":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(base_point, c)

    @classmethod
    def variable(cls, base_point: float, order: int) -> "TaylorJet":
        """Jet of the identity function t -> t at ``base_point``."""
        c = np.zeros(order + 1)
        c[0] = base_point
        if order >= 1:
            c[1] = 1.0
        return cls(base_point, c)

    # accessors ----------------------------------------------------------

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def derivative(self, m: int) -> float:
        """The m-th derivative at the base point."""
        if not 0 <= m <= self.order:
            raise StructureError(f"derivative {m} outside jet order {self.order}")
        return float(self.coeffs[m]) * math.factorial(m)

    def derivatives(self) -> np.ndarray:
        facts = np.array([math.factorial(m) for m in range(self.order + 1)], dtype=float)
        return self.coeffs * facts

    def differentiate(self) -> "TaylorJet":
        """Jet of f' (one order lower)."""
        if self.order == 0:
            raise StructureError("cannot differentiate an order-0 jet")
        m = np.arange(1, self.order + 1)
        return TaylorJet(self.base_point, self.coeffs[1:] * m)

    def truncate(self, order: int) -> "TaylorJet":
        if order > self.order:
            raise StructureError(f"cannot raise jet order {self.order} to {order}")
        return TaylorJet(self.base_point, self.coeffs[: order + 1])

    # arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "TaylorJet":
        if isinstance(other, TaylorJet):
            if other.order != self.order:
                raise StructureError(f"jet order mismatch: {self.order} vs {other.order}")
            if other.base_point != self.base_point:
                raise StructureError(
                    f"jet base point mismatch: {self.base_point} vs {other.base_point}"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TaylorJet.constant(float(other), self.base_point, self.order)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorJet(self.base_point, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorJet(self.base_point, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorJet(self.base_point, o.coeffs - self.coeffs)

    def __neg__(self):
        return TaylorJet(self.base_point, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TaylorJet(self.base_point, self.coeffs * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        prod = np.convolve(self.coeffs, o.coeffs)[: self.order + 1]
        return TaylorJet(self.base_point, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _divide(self, o)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return _divide(o, self)

    def __pow__(self, p):
        return jet_pow_real(self, p)

    def __repr__(self):
        return f"TaylorJet(base_point={self.base_point!r}, coeffs={self.coeffs.tolist()!r})"

    def allclose(self, other: "TaylorJet", rtol=1e-12, atol=0.0) -> bool:
        return (
            self.order == other.order
            and self.base_point == other.base_point
            and bool(np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol))
        )


def _divide(a: TaylorJet, b: TaylorJet) -> TaylorJet:
    b0 = b.coeffs[0]
    if b0 == 0.0:
        raise SingularityError("division by a jet with zero constant term", a.base_point)
    q = np.zeros(a.order + 1)
    for m in range(a.order + 1):
        q[m] = (a.coeffs[m] - np.dot(b.coeffs[1 : m + 1], q[m - 1 :: -1][:m])) / b0
    return TaylorJet(a.base_point, q)


def jet_arith(op: str, a: TaylorJet, b: TaylorJet) -> TaylorJet:
    """Combine two jets pointwise; ``op`` is one of add, sub, mul, div."""
    if not isinstance(a, TaylorJet) or not isinstance(b, TaylorJet):
        raise StructureError("jet_arith expects two TaylorJet operands")
    a._coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise StructureError(f"unknown jet operation {op!r}")


def _integer_power(a: TaylorJet, k: int) -> TaylorJet:
    result = TaylorJet.constant(1.0, a.base_point, a.order)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def jet_pow_real(a: TaylorJet, p: Number) -> TaylorJet:
    """Jet of a(t)**p.

    Integral exponents work on any sign of the constant term (negative ones
    need it nonzero). Non-integral exponents need ``a.coeffs[0] > 0``.
    """
    p = float(p)
    if p.is_integer():
        k = int(p)
        if k >= 0:
            return _integer_power(a, k)
        if a.coeffs[0] == 0.0:
            raise SingularityError("negative power of a jet with zero constant term", a.base_point)
        return 1.0 / _integer_power(a, -k)
    a0 = a.coeffs[0]
    if not a0 > 0.0:
        raise DomainError(f"real power {p} of a jet with constant term {a0}", a.base_point)
    y = np.zeros(a.order + 1)
    y[0] = a0**p
    for m in range(1, a.order + 1):
        k = np.arange(1, m + 1)
        y[m] = np.sum(((p + 1.0) * k - m) * a.coeffs[1 : m + 1] * y[m - 1 :: -1][:m]) / (m * a0)
    return TaylorJet(a.base_point, y)


def jet_sqrt(a: TaylorJet) -> TaylorJet:
    return jet_pow_real(a, 0.5)


def jet_exp(a: TaylorJet) -> TaylorJet:
    y = np.zeros(a.order + 1)
    y[0] = math.exp(a.coeffs[0])
    for m in range(1, a.order + 1):
        k = np.arange(1, m + 1)
        y[m] = np.sum(k * a.coeffs[1 : m + 1] * y[m - 1 :: -1][:m]) / m
    return TaylorJet(a.base_point, y)


def jet_log(a: TaylorJet) -> TaylorJet:
    a0 = a.coeffs[0]
    if not a0 > 0.0:
        raise DomainError(f"log of a jet with constant term {a0}", a.base_point)
    y = np.zeros(a.order + 1)
    y[0] = math.log(a0)
    for m in range(1, a.order + 1):
        k = np.arange(1, m)
        acc = np.sum(k * y[1:m] * a.coeffs[m - 1 : 0 : -1]) if m > 1 else 0.0
        y[m] = (a.coeffs[m] - acc / m) / a0
    return TaylorJet(a.base_point, y)


def jet_sin_cos(a: TaylorJet) -> tuple[TaylorJet, TaylorJet]:
    """Paired recurrence s' = c u', c' = -s u'."""
    s = np.zeros(a.order + 1)
    c = np.zeros(a.order + 1)
    s[0] = math.sin(a.coeffs[0])
    c[0] = math.cos(a.coeffs[0])
    for m in range(1, a.order + 1):
        k = np.arange(1, m + 1)
        ku = k * a.coeffs[1 : m + 1]
        s[m] = np.sum(ku * c[m - 1 :: -1][:m]) / m
        c[m] = -np.sum(ku * s[m - 1 :: -1][:m]) / m
    return TaylorJet(a.base_point, s), TaylorJet(a.base_point, c)


def jet_sin(a: TaylorJet) -> TaylorJet:
    return jet_sin_cos(a)[0]


def jet_cos(a: TaylorJet) -> TaylorJet:
    return jet_sin_cos(a)[1]


def jet_product(jets) -> TaylorJet:
    jets = list(jets)
    if not jets:
        raise StructureError("empty product needs an explicit base point and order")
    out = jets[0]
    for j in jets[1:]:
        out = out * j
    return out
