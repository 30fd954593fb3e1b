"""Predicates and defect measures for partial isometries.

An operator T is a partial isometry when T T* T = T, and a power partial
isometry when every positive power is one.  On an n-dimensional space the
powers are checked up to n+1; a verdict of true is later corroborated by
the canonical decomposition, whose exact block reconstruction certifies
the property for all powers (unitaries and truncated shifts tensored with
identities are power partial isometries).

All defects are reported in the Frobenius norm: cheap to evaluate and
invariant under the unitary conjugations the decomposition performs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError, InputError, PredicateError
from .linalg import DEFAULT_TOL, Tolerance, as_square_operator, frobenius

__all__ = [
    "DefectReport",
    "StarViolation",
    "is_partial_isometry",
    "partial_isometry_defect",
    "is_power_partial_isometry",
    "is_star_commuting_family",
    "product_pi_defect",
    "pull_defects",
    "projection_commutation_defect",
]


@dataclass(frozen=True)
class DefectReport:
    """Per-power partial-isometry defects ||T^n T*^n T^n - T^n||_F.

    verdict is true iff every listed defect is within the tolerance the
    check ran with.
    """

    max_power_checked: int
    per_power_defect: tuple[float, ...]
    verdict: bool

    @property
    def worst_power(self) -> int | None:
        """1-based power with the largest defect, None when empty."""
        if not self.per_power_defect:
            return None
        return 1 + int(np.argmax(self.per_power_defect))


class StarViolation(NamedTuple):
    """One failed pair in a star-commutation check.

    kind is "commutator" for T_m T_n != T_n T_m and "star" for
    T_m* T_n != T_n T_m*; indices are 0-based positions in the family.
    """

    m: int
    n: int
    kind: str
    defect: float


def partial_isometry_defect(T) -> float:
    """||T T* T - T||_F, the distance from the defining identity."""
    M = as_square_operator(T)
    return frobenius(M @ M.conj().T @ M - M)


def is_partial_isometry(T, tol: Tolerance = DEFAULT_TOL) -> bool:
    return partial_isometry_defect(T) <= tol.abs_tol


def is_power_partial_isometry(T, tol: Tolerance = DEFAULT_TOL) -> DefectReport:
    """Check T^n for n = 1 .. dim+1 and report the defects.

    Decreasing range chains on C^n stabilize within n steps, so powers
    beyond n+1 add no information here; the decomposition provides the
    certificate for all powers when it succeeds.
    """
    M = as_square_operator(T)
    n = M.shape[0]
    defects = []
    power = np.eye(n, dtype=complex)
    for _ in range(n + 1):
        power = power @ M
        defects.append(frobenius(power @ power.conj().T @ power - power))
    verdict = all(d <= tol.abs_tol for d in defects)
    return DefectReport(
        max_power_checked=n + 1,
        per_power_defect=tuple(defects),
        verdict=verdict,
    )


def is_star_commuting_family(Ts, tol: Tolerance = DEFAULT_TOL) -> list[StarViolation]:
    """Return all pairwise star-commutation violations; empty means pass.

    For m < n both the commutator [T_m, T_n] and the star defect
    T_m* T_n - T_n T_m* are measured.  The (n, m) star defect is the
    adjoint of the (m, n) one and has the same norm, so each unordered
    pair is reported once per kind.  A singleton family passes trivially:
    self-star-commutation is not part of the definition.
    """
    ops = [as_square_operator(T, f"operator {i}") for i, T in enumerate(Ts)]
    if not ops:
        return []
    dim = ops[0].shape[0]
    for i, M in enumerate(ops):
        if M.shape[0] != dim:
            raise DimensionMismatchError(
                f"operator {i} has dimension {M.shape[0]}, expected {dim}"
            )
    violations = []
    for m in range(len(ops)):
        for n in range(m + 1, len(ops)):
            A, B = ops[m], ops[n]
            c = frobenius(A @ B - B @ A)
            if c > tol.abs_tol:
                violations.append(StarViolation(m, n, "commutator", c))
            s = frobenius(A.conj().T @ B - B @ A.conj().T)
            if s > tol.abs_tol:
                violations.append(StarViolation(m, n, "star", s))
    return violations


def product_pi_defect(V, W, tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Measure both sides of the product criterion for partial isometries.

    Returns (||[V*V, WW*]||_F, ||(VW)(VW)*(VW) - VW||_F).  The product of
    two partial isometries is again one exactly when the initial
    projection of V commutes with the range projection of W, so the two
    values vanish together.
    """
    A = as_square_operator(V, "V")
    B = as_square_operator(W, "W")
    if A.shape != B.shape:
        raise DimensionMismatchError("V and W must have equal dimension")
    for name, M in (("V", A), ("W", B)):
        d = partial_isometry_defect(M)
        if d > tol.abs_tol:
            raise PredicateError(f"{name} is not a partial isometry (defect {d:.3e})")
    init_V = A.conj().T @ A
    range_W = B @ B.conj().T
    commutator = frobenius(init_V @ range_W - range_W @ init_V)
    P = A @ B
    product_defect = frobenius(P @ P.conj().T @ P - P)
    return commutator, product_defect


def pull_defects(T, tol: Tolerance = DEFAULT_TOL) -> tuple[float, float]:
    """Worst-case defects of the two pull-through identities.

    For a power partial isometry, multiplying by T pulls range projections
    up one power and source projections down one:

        T (T^n T*^n)   = (T^{n+1} T*^{n+1}) T      for n >= 0
        T (T*^n T^n)   = (T*^{n-1} T^{n-1}) T      for n >= 1

    Both are checked for n up to dim+1 and the maxima returned.
    """
    M = as_square_operator(T)
    n = M.shape[0]
    Mh = M.conj().T
    # powers 0 .. n+2
    pows = [np.eye(n, dtype=complex)]
    for _ in range(n + 2):
        pows.append(pows[-1] @ M)
    rng = [Pk @ Pk.conj().T for Pk in pows]   # T^k T*^k
    src = [Pk.conj().T @ Pk for Pk in pows]   # T*^k T^k
    pull1 = max(
        frobenius(M @ rng[k] - rng[k + 1] @ M) for k in range(n + 2)
    )
    pull2 = max(
        frobenius(M @ src[k] - src[k - 1] @ M) for k in range(1, n + 2)
    )
    return pull1, pull2


def projection_commutation_defect(T, tol: Tolerance = DEFAULT_TOL) -> float:
    """Worst pairwise commutator among the range/source projections.

    For a power partial isometry the family {T^n T*^n} u {T*^n T^n} is a
    commuting family of projections; this returns the largest deviation
    for powers up to dim.
    """
    M = as_square_operator(T)
    n = M.shape[0]
    pows = [np.eye(n, dtype=complex)]
    for _ in range(n):
        pows.append(pows[-1] @ M)
    projs = [Pk @ Pk.conj().T for Pk in pows] + [Pk.conj().T @ Pk for Pk in pows]
    worst = 0.0
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            worst = max(worst, frobenius(projs[i] @ projs[j] - projs[j] @ projs[i]))
    return worst
