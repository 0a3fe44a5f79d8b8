"""Principal minors, cofactors, and the cofactor/complement and group dualities.

Index sets are 1-based sorted tuples, as in the usual notation M_S.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import PreconditionError, StructureError
from .liedata import iota_set, structure_form

GROUPS = ("Sp", "SO-odd", "SO-even")


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Residual:
    """A residual plus any conditioning remarks gathered while computing it."""

    value: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __float__(self):
        return self.value


def _index_set(S, N: int) -> tuple[int, ...]:
    s = tuple(int(k) for k in S)
    if list(s) != sorted(set(s)):
        raise StructureError(f"index set {S!r} must be sorted and distinct")
    if s and (s[0] < 1 or s[-1] > N):
        raise StructureError(f"index set {S!r} outside 1..{N}")
    return s


def complement(S, N: int) -> tuple[int, ...]:
    s = set(_index_set(S, N))
    return tuple(k for k in range(1, N + 1) if k not in s)


def all_subsets(N: int):
    for m in range(N + 1):
        yield from itertools.combinations(range(1, N + 1), m)


def principal_minor(A, S) -> float:
    A = np.asarray(A, dtype=float)
    s = _index_set(S, A.shape[0])
    if not s:
        return 1.0
    idx = np.array(s) - 1
    return float(np.linalg.det(A[np.ix_(idx, idx)]))


def minor(A, rows, cols) -> float:
    """Determinant of A restricted to 0-based ``rows`` x ``cols``."""
    if len(rows) == 0:
        return 1.0
    return float(np.linalg.det(np.asarray(A, dtype=float)[np.ix_(rows, cols)]))


def cofactor_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    if A.shape != (N, N):
        raise StructureError("cofactor_matrix needs a square matrix")
    C = np.empty_like(A)
    idx = np.arange(N)
    for i in range(N):
        rows = idx[idx != i]
        for j in range(N):
            cols = idx[idx != j]
            C[i, j] = (-1) ** (i + j) * minor(A, rows, cols)
    return C


def _near_singular(A: np.ndarray, det: float) -> bool:
    N = A.shape[0]
    return abs(det) < 1e-8 * max(np.abs(A).max(), 1e-300) ** N


def check_cofactor_minor_identity(A, S) -> Residual:
    """|M^C_S - M^A_{S-bar} det(A)^{|S|-1}| relative to max(1, |rhs|)."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    s = _index_set(S, N)
    det = float(np.linalg.det(A))
    notes = []
    if _near_singular(A, det):
        msg = f"near-singular matrix: |det A| = {abs(det):.3e}"
        warnings.warn(msg, ConditioningWarning, stacklevel=2)
        notes.append(msg)
    C = cofactor_matrix(A)
    rhs = principal_minor(A, complement(s, N)) * det ** (len(s) - 1)
    lhs = principal_minor(C, s)
    return Residual(abs(lhs - rhs) / max(1.0, abs(rhs)), tuple(notes))


def group_form(group: str, N: int) -> np.ndarray:
    if group == "Sp":
        if N % 2:
            raise StructureError("Sp needs even dimension")
        return structure_form("Omega", N // 2)
    if group == "SO-even":
        if N % 2:
            raise StructureError("SO-even needs even dimension")
        return structure_form("Theta-even", N // 2)
    if group == "SO-odd":
        if N % 2 == 0:
            raise StructureError("SO-odd needs odd dimension")
        return structure_form("Theta-odd", N // 2)
    raise StructureError(f"unknown group {group!r}")


def group_defect(A, group: str) -> float:
    """max-norm of A^T Form A - Form."""
    A = np.asarray(A, dtype=float)
    F = group_form(group, A.shape[0])
    return float(np.abs(A.T @ F @ A - F).max())


def _iota_family(group: str) -> str:
    return "B-odd" if group == "SO-odd" else "C/D-even"


def check_group_minor_duality(A, group: str, S, tol: float = 1e-9) -> float:
    """|M_S - sign * M_{iota(S-bar)}| for A in Sp or (S)O."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    defect = group_defect(A, group)
    if defect > tol:
        raise PreconditionError(f"matrix violates the {group} relation: defect {defect:.3e}")
    s = _index_set(S, N)
    sign = 1.0
    if group != "Sp":
        sign = 1.0 if np.linalg.det(A) > 0 else -1.0
    image = iota_set(_iota_family(group), N // 2, complement(s, N))
    return abs(principal_minor(A, s) - sign * principal_minor(A, image))


def max_duality_residual(A, group: str, tol: float = 1e-9) -> float:
    """Exhaustive sweep of check_group_minor_duality over all subsets."""
    N = np.asarray(A).shape[0]
    return max(check_group_minor_duality(A, group, S, tol) for S in all_subsets(N))


def random_group_element(group: str, n: int, seed, det_sign: int = 1) -> np.ndarray:
    """Random element of Sp(2n), SO(2n+1) ("SO-odd") or SO(2n) ("SO-even").

    Exponential of a random Lie algebra element with entries in [-1/2, 1/2].
    ``det_sign=-1`` composes an orthogonal element with a fixed reflection
    preserving the form.
    """
    rng = np.random.default_rng(seed)
    if group == "Sp":
        N = 2 * n
        S = rng.uniform(-0.5, 0.5, (N, N))
        S = (S + S.T) / 2
        Om = structure_form("Omega", n).astype(float)
        H = -Om @ S  # Omega @ H is symmetric
        A = expm(H)
        if det_sign != 1:
            raise StructureError("symplectic matrices always have determinant 1")
        return A
    if group in ("SO-odd", "SO-even"):
        N = 2 * n + 1 if group == "SO-odd" else 2 * n
        T = rng.uniform(-0.5, 0.5, (N, N))
        T = (T - T.T) / 2
        Th = group_form(group, N).astype(float)
        A = expm(Th @ T)
        if det_sign == -1:
            A = A @ reflection(group, n)
        elif det_sign != 1:
            raise StructureError("det_sign must be +1 or -1")
        return A
    raise StructureError(f"unknown group {group!r}")


def reflection(group: str, n: int) -> np.ndarray:
    """Determinant -1 isometry of the orthogonal form."""
    if group == "SO-odd":
        R = np.eye(2 * n + 1)
        R[2 * n, 2 * n] = -1.0
        return R
    if group == "SO-even":
        R = np.eye(2 * n)
        R[[n - 1, 2 * n - 1]] = R[[2 * n - 1, n - 1]]
        return R
    raise StructureError(f"no reflection for {group!r}")
