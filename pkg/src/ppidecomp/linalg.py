"""Tolerance-aware dense complex linear algebra.

Everything downstream works with orthonormal frames: a subspace of C^n is
represented by an n x k matrix with orthonormal columns.  Rank decisions
are made on singular values with a threshold relative to the largest
singular value, so they are invariant under rescaling of the input.  All
frames come out of a fixed SVD pipeline, which makes repeated runs on
identical input bit-for-bit reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConsistencyError, DimensionMismatchError, InputError

__all__ = [
    "Tolerance",
    "Subspace",
    "as_operator",
    "as_square_operator",
    "onb_of_range",
    "kernel",
    "projector",
    "intersect",
    "complete_to_unitary",
    "same_subspace",
    "frobenius",
    "eigenvalue_matching_distance",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds used across the library.

    abs_tol bounds absolute defects measured in the Frobenius norm;
    rank_rel_tol is the relative singular-value cutoff for rank decisions
    (relative to the largest singular value of the matrix at hand).
    """

    abs_tol: float = 1e-9
    rank_rel_tol: float = 1e-10

    def __post_init__(self):
        if self.abs_tol < 0 or self.rank_rel_tol < 0:
            raise InputError("tolerances must be nonnegative")


DEFAULT_TOL = Tolerance()

# Orthonormality slack allowed on stored frames.
_FRAME_TOL = 1e-12


def as_operator(A, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite complex 2-D array, raising InputError otherwise."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got ndim={M.ndim}")
    if not np.all(np.isfinite(M.view(float))):
        raise InputError(f"{name} has non-finite entries")
    return M


def as_square_operator(A, name: str = "matrix") -> np.ndarray:
    M = as_operator(A, name)
    if M.shape[0] != M.shape[1]:
        raise InputError(f"{name} must be square, got shape {M.shape}")
    return M


def frobenius(A) -> float:
    """Frobenius norm as a plain float."""
    return float(np.linalg.norm(A))


class Subspace:
    """A subspace of C^n held as an orthonormal column frame.

    The frame is validated on construction (columns orthonormal to 1e-12)
    and stored read-only.  Frames are not canonical: two Subspace objects
    spanning the same space generally hold different frames, so equality
    of subspaces is always tested through projectors (``same_subspace``),
    never by comparing frames.
    """

    __slots__ = ("frame",)

    def __init__(self, frame):
        F = as_operator(frame, "frame")
        if F.shape[1] > 0:
            gram = F.conj().T @ F
            defect = frobenius(gram - np.eye(F.shape[1]))
            if defect > _FRAME_TOL * max(1, F.shape[1]):
                raise ConsistencyError(
                    f"frame columns are not orthonormal (defect {defect:.3e})"
                )
        F = F.copy()
        F.flags.writeable = False
        object.__setattr__(self, "frame", F)

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def projector(self) -> np.ndarray:
        return projector(self)

    @staticmethod
    def zero(ambient_dim: int) -> "Subspace":
        return Subspace(np.zeros((ambient_dim, 0), dtype=complex))

    @staticmethod
    def full(ambient_dim: int) -> "Subspace":
        return Subspace(np.eye(ambient_dim, dtype=complex))

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def _svd_rank(s: np.ndarray, tol: Tolerance) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel_tol * s[0]))


def onb_of_range(A, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis of the column space of A.

    The dimension is the numerical rank: the number of singular values
    exceeding rank_rel_tol times the largest one.
    """
    M = as_operator(A)
    if M.shape[1] == 0:
        return Subspace.zero(M.shape[0])
    u, s, _ = np.linalg.svd(M)
    r = _svd_rank(s, tol)
    return Subspace(u[:, :r])


def kernel(A, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis of the null space of A.

    dim(range) + dim(kernel) equals the number of columns by construction,
    since both read the rank off the same singular values.
    """
    M = as_operator(A)
    if M.shape[1] == 0:
        return Subspace.zero(0)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    r = _svd_rank(s, tol)
    return Subspace(vh[r:].conj().T)


def projector(S: Subspace) -> np.ndarray:
    """Orthogonal projector frame @ frame* onto the subspace."""
    if S.dim == 0:
        return np.zeros((S.ambient_dim, S.ambient_dim), dtype=complex)
    return S.frame @ S.frame.conj().T


def intersect(S1: Subspace, S2: Subspace, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Intersection of two subspaces.

    Computed as the kernel of (I - P1) + (I - P2), which is exact for any
    pair of subspaces: the sum is positive semidefinite and its null
    vectors are precisely those fixed by both projectors.  When P1 and P2
    commute (the only case arising from range/source projections here) the
    result coincides with the range of the product P1 @ P2; the general
    construction is used anyway so the operation cannot be silently
    misused on non-commuting projections.
    """
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionMismatchError(
            f"ambient dimensions differ: {S1.ambient_dim} vs {S2.ambient_dim}"
        )
    n = S1.ambient_dim
    eye = np.eye(n, dtype=complex)
    D = (eye - projector(S1)) + (eye - projector(S2))
    return kernel(D, tol)


def complete_to_unitary(frames: list[Subspace], tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Assemble a unitary whose leading columns are the given frames.

    The frames must be pairwise orthogonal; their concatenation, in the
    given order, forms the leading columns.  The remaining columns are an
    orthonormal basis of the orthogonal complement (from the SVD kernel of
    the concatenation's adjoint), so the result is unitary to 1e-12.
    """
    frames = list(frames)
    if not frames:
        raise InputError("complete_to_unitary needs at least one frame")
    n = frames[0].ambient_dim
    for S in frames:
        if S.ambient_dim != n:
            raise DimensionMismatchError("frames live in different ambient spaces")
    total = sum(S.dim for S in frames)
    if total > n:
        raise ConsistencyError(f"frames span {total} > ambient {n} dimensions")
    for i in range(len(frames)):
        for j in range(i + 1, len(frames)):
            if frames[i].dim == 0 or frames[j].dim == 0:
                continue
            overlap = frobenius(frames[i].frame.conj().T @ frames[j].frame)
            if overlap > tol.abs_tol:
                raise ConsistencyError(
                    f"frames {i} and {j} are not orthogonal (overlap {overlap:.3e})"
                )
    blocks = [S.frame for S in frames if S.dim > 0]
    B = np.hstack(blocks) if blocks else np.zeros((n, 0), dtype=complex)
    if total < n:
        tail = kernel(B.conj().T, tol).frame if total > 0 else np.eye(n, dtype=complex)
        U = np.hstack([B, tail])
    else:
        U = B
    defect = frobenius(U.conj().T @ U - np.eye(n))
    if defect > _FRAME_TOL * max(1, n):
        raise ConsistencyError(f"completion failed unitarity (defect {defect:.3e})")
    return U


def same_subspace(S1: Subspace, S2: Subspace, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Equality test through projectors; frames are never compared."""
    if S1.ambient_dim != S2.ambient_dim:
        raise DimensionMismatchError("ambient dimensions differ")
    return frobenius(projector(S1) - projector(S2)) <= tol.abs_tol


def eigenvalue_matching_distance(a, b) -> float:
    """Largest pointwise distance in an optimal matching of two spectra.

    Both arguments are 1-D arrays of complex eigenvalues of equal length;
    the optimal assignment (Hungarian method) pairs them so the maximum
    |a_i - b_j| over matched pairs is reported.  Sorting-based comparisons
    are unstable when eigenvalues nearly tie; matching is not.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise DimensionMismatchError(
            f"spectra have different sizes: {a.size} vs {b.size}"
        )
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
