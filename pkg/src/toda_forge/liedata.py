"""Cartan matrices, invariant bilinear forms and index involutions for A-D.

Public functions take 1-based indices, matching the usual matrix displays;
everything is converted to 0-based immediately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructureError

MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 3}


@dataclass(frozen=True)
class LieType:
    family: str
    rank: int

    def __post_init__(self):
        if self.family not in MIN_RANK:
            raise StructureError(f"unknown family {self.family!r}; expected one of A, B, C, D")
        if not isinstance(self.rank, (int, np.integer)) or self.rank < MIN_RANK[self.family]:
            raise StructureError(
                f"{self.family}_n needs n >= {MIN_RANK[self.family]}, got {self.rank!r}"
            )

    def __str__(self):
        return f"{self.family}{self.rank}"

    @property
    def vector_length(self) -> int:
        """Length of the chiral vector F for this type."""
        n = self.rank
        return {"A": n + 1, "B": 2 * n + 1, "C": 2 * n, "D": 2 * n}[self.family]

    @property
    def notes(self) -> list[str]:
        if self.family == "C" and self.rank == 2:
            return ["C_2 = B_2 fold"]
        return []


def cartan_matrix(lt: LieType) -> np.ndarray:
    n, fam = lt.rank, lt.family
    a = 2 * np.eye(n, dtype=np.int64)
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = -1
    if fam == "C":
        a[n - 1, n - 2] = -2
    elif fam == "B":
        a[n - 2, n - 1] = -2
    elif fam == "D":
        # fork: nodes n-1 and n both attach to n-2, not to each other
        a[n - 2, n - 1] = a[n - 1, n - 2] = 0
        a[n - 3, n - 1] = a[n - 1, n - 3] = -1
    return a


def j_matrix(dim: int) -> np.ndarray:
    """Skew-diagonal matrix with entries (i, dim-1-i) = (-1)^i, 0-based."""
    if dim < 1:
        raise StructureError("J needs dim >= 1")
    m = np.zeros((dim, dim), dtype=np.int64)
    for i in range(dim):
        m[i, dim - 1 - i] = (-1) ** i
    return m


def k_matrix(n: int) -> np.ndarray:
    """Symmetric 2n x 2n skew-diagonal matrix of the D_n construction.

    The upper half alternates 1, -1, ... down to row n; the lower half is its
    mirror so that K is symmetric.
    """
    if n < 1:
        raise StructureError("K needs n >= 1")
    dim = 2 * n
    m = np.zeros((dim, dim), dtype=np.int64)
    for i in range(n):
        m[i, dim - 1 - i] = (-1) ** i
        m[dim - 1 - i, i] = (-1) ** i
    return m


def structure_form(kind: str, n: int) -> np.ndarray:
    """Integer matrix of the requested invariant form.

    kind: ``Omega`` (2n), ``Theta-odd`` (2n+1), ``Theta-even`` (2n),
    ``J`` (dimension n+1) or ``K`` (2n).
    """
    if n < 1:
        raise StructureError("structure_form needs n >= 1")
    eye = np.eye(n, dtype=np.int64)
    zero = np.zeros((n, n), dtype=np.int64)
    if kind == "Omega":
        return np.block([[zero, eye], [-eye, zero]])
    if kind == "Theta-even":
        return np.block([[zero, eye], [eye, zero]])
    if kind == "Theta-odd":
        m = np.zeros((2 * n + 1, 2 * n + 1), dtype=np.int64)
        m[:n, n : 2 * n] = eye
        m[n : 2 * n, :n] = eye
        m[2 * n, 2 * n] = 1
        return m
    if kind == "J":
        return j_matrix(n + 1)
    if kind == "K":
        return k_matrix(n)
    raise StructureError(f"unknown form kind {kind!r}")


def form_for(lt: LieType) -> np.ndarray:
    """The form preserved by the group of the chiral vector's family."""
    if lt.family == "C":
        return structure_form("Omega", lt.rank)
    if lt.family == "B":
        return structure_form("Theta-odd", lt.rank)
    if lt.family == "D":
        return structure_form("K", lt.rank)
    raise StructureError("A_n vectors carry no bilinear form (Wronskian condition)")


def iota_swap(family: str, n: int, index: int) -> int:
    """Swap of the two index halves; for the odd orthogonal case 2n+1 is fixed.

    ``family`` is ``B-odd`` or ``C/D-even`` (``even`` is accepted too).
    """
    if family == "B-odd":
        top = 2 * n + 1
    elif family in ("C/D-even", "even", "C", "D"):
        top = 2 * n
    else:
        raise StructureError(f"unknown involution family {family!r}")
    if not 1 <= index <= top:
        raise StructureError(f"index {index} outside 1..{top}")
    if index <= n:
        return index + n
    if index <= 2 * n:
        return index - n
    return index


def leznov_swap_s(kind: str, n: int, index: int) -> int:
    """Relabelling of generating functions.

    ``line``: s(i) = n+1-i on 1..n.
    ``D``: on 1..2n-2, reverses the outer labels and fixes n-1 and n.
    """
    if kind == "line":
        if not 1 <= index <= n:
            raise StructureError(f"index {index} outside 1..{n}")
        return n + 1 - index
    if kind == "D":
        if not 1 <= index <= 2 * n - 2:
            raise StructureError(f"index {index} outside 1..{2 * n - 2}")
        if index in (n - 1, n):
            return index
        return 2 * n - 1 - index
    raise StructureError(f"unknown swap kind {kind!r}")


def iota_set(family: str, n: int, indices) -> tuple[int, ...]:
    return tuple(sorted(iota_swap(family, n, k) for k in indices))
