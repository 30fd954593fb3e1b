"""Simultaneous decomposition of star-commuting power partial isometries.

A finite family {T_0, .., T_{M-1}} star-commutes when all pairs commute
and each operator commutes with the adjoints of the others.  Such a
family splits the space into an orthogonal sum of tensor-model summands,
one per multi-index over the label alphabet {u} u {p >= 1} (the infinite
shift/backshift labels cannot occur for matrices).  On the summand with
index i the m-th operator acts as

    identity legs (x) V_{i,m}                 if i_m = u
    .. (x) J_{i_m} on leg m (x) .. (x) 1      otherwise,

with one tensor leg C^p per non-u entry (ascending operator order) and a
trailing multiplicity space carrying the commuting unitaries V_{i,m}.

The construction is inductive over the operators, implemented as a loop:
after processing a prefix, each summand is held as an ambient orthonormal
basis whose column order matches the legs-then-multiplicity tensor order.
The next operator leaves every summand invariant, acts there as
(identity on the legs) tensor R for a power partial isometry R on the
multiplicity space, and the canonical decomposition of R refines the
summand.  The identity-tensor form is not assumed: ``extract_tensor_factor``
averages the diagonal blocks and then verifies the form, failing loudly
with the measured defect when it does not hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .canonical import decompose, truncated_shift
from .errors import (
    DecompositionError,
    DimensionMismatchError,
    FormViolationError,
    InputError,
    PredicateError,
)
from .linalg import DEFAULT_TOL, Tolerance, as_square_operator, frobenius
from .pisometry import is_star_commuting_family

__all__ = [
    "Label",
    "FamilySummand",
    "FamilyDecomposition",
    "FamilyVerification",
    "label_sort_key",
    "extract_tensor_factor",
    "decompose_family",
    "summand_model_operator",
    "reconstruct_family",
    "verify_family",
    "commutant_reducing_check",
]

# A summand label is "u" for a unitary slot or an int p >= 1 for a
# truncated-shift leg of that length.
Label = str | int


def label_sort_key(label: Label) -> tuple[int, int]:
    """Canonical label order: u before all chain lengths, then ascending p."""
    if label == "u":
        return (0, 0)
    return (1, int(label))


def _check_label(label: Label) -> Label:
    if label == "u":
        return label
    if isinstance(label, int) and label >= 1:
        return label
    raise InputError(f"bad summand label {label!r}: expected 'u' or int >= 1")


def _multi_kron(mats: list[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


@dataclass(frozen=True)
class FamilySummand:
    """One tensor-model summand of a family decomposition.

    index[m] is the label of operator m; leg_dims holds the tensor-leg
    dimension for each non-u label in ascending operator order; unitaries
    maps each u-slot position to its unitary on the multiplicity space;
    basis is the ambient orthonormal frame in legs-then-multiplicity
    column order.
    """

    index: tuple[Label, ...]
    leg_dims: tuple[int, ...]
    mult_dim: int
    unitaries: dict[int, np.ndarray]
    basis: np.ndarray

    def __post_init__(self):
        for label in self.index:
            _check_label(label)
        expected_legs = tuple(p for p in self.index if p != "u")
        if tuple(self.leg_dims) != expected_legs:
            raise InputError(
                f"leg_dims {self.leg_dims} do not match index {self.index}"
            )
        if self.basis.shape[1] != self.total_dim:
            raise InputError(
                f"basis has {self.basis.shape[1]} columns, expected {self.total_dim}"
            )
        if set(self.unitaries) != {
            m for m, label in enumerate(self.index) if label == "u"
        }:
            raise InputError("unitaries must cover exactly the u-slots")

    @property
    def leg_total(self) -> int:
        out = 1
        for p in self.leg_dims:
            out *= p
        return out

    @property
    def total_dim(self) -> int:
        return self.leg_total * self.mult_dim

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def sort_key(self):
        return tuple(label_sort_key(l) for l in self.index)


@dataclass(frozen=True)
class FamilyDecomposition:
    M: int
    summands: tuple[FamilySummand, ...]
    residuals: tuple[float, ...]

    @property
    def ambient_dim(self) -> int:
        return self.summands[0].ambient_dim

    def index_multiset(self) -> tuple[tuple[tuple[Label, ...], int], ...]:
        """Sorted multiset of (index, mult_dim) pairs, the recovery target."""
        return tuple(
            sorted(((s.index, s.mult_dim) for s in self.summands),
                   key=lambda t: (tuple(label_sort_key(l) for l in t[0]), t[1]))
        )


def extract_tensor_factor(B, leg_dim: int, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Recover R from B = I_{leg_dim} (x) R, verifying the form.

    The diagonal blocks of a matrix of that form all equal R, so their
    average is exact when the form holds and damps round-off when it
    nearly does.  The averaged candidate is then checked against B; a
    defect beyond abs_tol times the dimension of B raises
    FormViolationError carrying the defect.
    """
    M = as_square_operator(B)
    n = M.shape[0]
    if leg_dim < 1:
        raise InputError(f"leg dimension must be >= 1, got {leg_dim}")
    if n % leg_dim != 0:
        raise InputError(f"dimension {n} is not divisible by leg {leg_dim}")
    r = n // leg_dim
    blocks = M.reshape(leg_dim, r, leg_dim, r)
    R = np.mean(
        [blocks[i, :, i, :] for i in range(leg_dim)], axis=0
    ) if leg_dim > 1 else blocks[0, :, 0, :].copy()
    defect = frobenius(M - np.kron(np.eye(leg_dim, dtype=complex), R))
    if defect > tol.abs_tol * max(1, n):
        raise FormViolationError(
            f"operator is not of identity-tensor form (defect {defect:.3e})",
            defect=defect,
        )
    return R


def _initial_summands(T: np.ndarray, tol: Tolerance) -> list[FamilySummand]:
    dec = decompose(T, tol)
    out = []
    if dec.dim_u > 0:
        out.append(
            FamilySummand(
                index=("u",),
                leg_dims=(),
                mult_dim=dec.dim_u,
                unitaries={0: dec.unitary_part},
                basis=dec.basis[:, : dec.dim_u],
            )
        )
    off = dec.dim_u
    for p, mult in dec.blocks:
        size = p * mult
        out.append(
            FamilySummand(
                index=(p,),
                leg_dims=(p,),
                mult_dim=mult,
                unitaries={},
                basis=dec.basis[:, off : off + size],
            )
        )
        off += size
    return out


def _restrict_unitary(V: np.ndarray, F: np.ndarray, tol: Tolerance, what: str) -> np.ndarray:
    """Compress V to the columns of F, insisting F spans a reducing subspace."""
    C = F.conj().T @ V @ F
    leak = frobenius(V @ F - F @ C)
    if leak > tol.abs_tol * max(1, V.shape[0]):
        raise DecompositionError(
            f"{what} is not reducing for an inherited unitary (leak {leak:.3e})",
            diagnostics={"leak": leak},
        )
    return C


def _extend(
    summands: list[FamilySummand], T: np.ndarray, m: int, tol: Tolerance
) -> list[FamilySummand]:
    n = T.shape[0]
    out: list[FamilySummand] = []
    for s in summands:
        W = s.basis
        C = W.conj().T @ T @ W
        leak = frobenius(T @ W - W @ C)
        if leak > tol.abs_tol * max(1, n):
            raise FormViolationError(
                f"operator {m} does not leave summand {s.index} invariant "
                f"(leak {leak:.3e})",
                defect=leak,
            )
        try:
            R = extract_tensor_factor(C, s.leg_total, tol)
        except FormViolationError as exc:
            raise FormViolationError(
                f"operator {m} on summand {s.index}: {exc}", defect=exc.defect
            ) from exc
        dec = decompose(R, tol)

        if dec.dim_u > 0:
            F_u = dec.basis[:, : dec.dim_u]
            unitaries = {
                mm: _restrict_unitary(V, F_u, tol, f"summand {s.index + ('u',)}")
                for mm, V in s.unitaries.items()
            }
            unitaries[m] = dec.unitary_part
            out.append(
                FamilySummand(
                    index=s.index + ("u",),
                    leg_dims=s.leg_dims,
                    mult_dim=dec.dim_u,
                    unitaries=unitaries,
                    basis=W @ np.kron(np.eye(s.leg_total, dtype=complex), F_u),
                )
            )
        off = dec.dim_u
        for q, mq in dec.blocks:
            size = q * mq
            F_q = dec.basis[:, off : off + size]
            off += size
            unitaries = {}
            for mm, V in s.unitaries.items():
                compressed = _restrict_unitary(
                    V, F_q, tol, f"summand {s.index + (q,)}"
                )
                unitaries[mm] = extract_tensor_factor(compressed, q, tol)
            out.append(
                FamilySummand(
                    index=s.index + (q,),
                    leg_dims=s.leg_dims + (q,),
                    mult_dim=mq,
                    unitaries=unitaries,
                    basis=W @ np.kron(np.eye(s.leg_total, dtype=complex), F_q),
                )
            )
    return out


def decompose_family(Ts, tol: Tolerance = DEFAULT_TOL) -> FamilyDecomposition:
    """Simultaneously decompose a star-commuting family.

    The first operator is decomposed canonically; each further operator
    refines every summand through its restriction R (recovered by
    ``extract_tensor_factor``).  Summands that end up with multiplicity 0
    never arise as objects: a zero-dimensional unitary part or an absent
    chain length simply produces no child.  The result lists summands in
    canonical index order.
    """
    ops = [as_square_operator(T, f"operator {i}") for i, T in enumerate(Ts)]
    if not ops:
        raise InputError("family must contain at least one operator")
    n = ops[0].shape[0]
    for i, T in enumerate(ops):
        if T.shape[0] != n:
            raise DimensionMismatchError(
                f"operator {i} has dimension {T.shape[0]}, expected {n}"
            )
    violations = is_star_commuting_family(ops, tol)
    if violations:
        raise PredicateError(
            f"family is not star-commuting ({len(violations)} violating pairs, "
            f"worst {max(v.defect for v in violations):.3e})",
            report=violations,
        )

    summands = _initial_summands(ops[0], tol)
    for m in range(1, len(ops)):
        summands = _extend(summands, ops[m], m, tol)
    summands.sort(key=FamilySummand.sort_key)

    covered = sum(s.total_dim for s in summands)
    if covered != n:
        raise DecompositionError(
            f"summands cover {covered} of {n} dimensions",
            diagnostics={"covered": covered, "ambient": n},
        )
    fd = FamilyDecomposition(
        M=len(ops), summands=tuple(summands), residuals=()
    )
    rebuilt = reconstruct_family(fd)
    residuals = tuple(frobenius(rebuilt[m] - ops[m]) for m in range(len(ops)))
    return FamilyDecomposition(M=fd.M, summands=fd.summands, residuals=residuals)


def summand_model_operator(s: FamilySummand, m: int) -> np.ndarray:
    """Model of operator m on the summand, in leg-then-multiplicity order."""
    if not (0 <= m < len(s.index)):
        raise InputError(f"operator position {m} outside family of {len(s.index)}")
    label = s.index[m]
    if label == "u":
        return np.kron(np.eye(s.leg_total, dtype=complex), s.unitaries[m])
    sigma = [mm for mm, l in enumerate(s.index) if l != "u"]
    pos = sigma.index(m)
    mats = [np.eye(p, dtype=complex) for p in s.leg_dims]
    mats[pos] = truncated_shift(int(label))
    mats.append(np.eye(s.mult_dim, dtype=complex))
    return _multi_kron(mats)


def reconstruct_family(fd: FamilyDecomposition) -> list[np.ndarray]:
    """Rebuild each operator from the summand models and bases."""
    n = fd.ambient_dim
    out = []
    for m in range(fd.M):
        acc = np.zeros((n, n), dtype=complex)
        for s in fd.summands:
            W = s.basis
            acc += W @ summand_model_operator(s, m) @ W.conj().T
        out.append(acc)
    return out


@dataclass(frozen=True)
class FamilyVerification:
    verdict: bool
    complete: bool
    compression_defect: float      # max ||W* T_m W - model||
    leakage_defect: float          # max ||(1 - WW*) T_m W||
    basis_orthogonality: float     # max cross-summand overlap
    basis_orthonormality: float    # max within-summand frame defect
    unitary_defect: float          # max ||V*V - 1||
    unitary_commutation: float     # max ||[V, V']|| within a summand
    nilpotency_defect: float       # max ||(T_m|_summand)^p|| over p-slots
    nilpotency_floor_ok: bool      # ||(T_m|_summand)^{p-1}|| >= 1/2 everywhere
    residuals: tuple[float, ...]


def verify_family(Ts, fd: FamilyDecomposition, tol: Tolerance = DEFAULT_TOL) -> FamilyVerification:
    """Re-check a family decomposition; the report carries any failures."""
    ops = [as_square_operator(T, f"operator {i}") for i, T in enumerate(Ts)]
    if len(ops) != fd.M:
        raise InputError(f"family has {len(ops)} operators, decomposition {fd.M}")
    n = fd.ambient_dim
    for i, T in enumerate(ops):
        if T.shape[0] != n:
            raise InputError(
                f"operator {i} has dimension {T.shape[0]}, expected {n}"
            )

    compression = 0.0
    leakage = 0.0
    nilp = 0.0
    nilp_floor = True
    eye = np.eye(n, dtype=complex)
    for s in fd.summands:
        W = s.basis
        ortho = eye - W @ W.conj().T
        for m, T in enumerate(ops):
            C = W.conj().T @ T @ W
            compression = max(
                compression, frobenius(C - summand_model_operator(s, m))
            )
            leakage = max(leakage, frobenius(ortho @ T @ W))
            label = s.index[m]
            if label != "u":
                p = int(label)
                Cp = np.linalg.matrix_power(C, p)
                nilp = max(nilp, frobenius(Cp))
                floor = np.linalg.norm(np.linalg.matrix_power(C, p - 1), 2)
                if floor < 0.5:
                    nilp_floor = False

    cross = 0.0
    frame_defect = 0.0
    for a in range(len(fd.summands)):
        Wa = fd.summands[a].basis
        frame_defect = max(
            frame_defect,
            frobenius(Wa.conj().T @ Wa - np.eye(Wa.shape[1])),
        )
        for b in range(a + 1, len(fd.summands)):
            cross = max(
                cross, frobenius(Wa.conj().T @ fd.summands[b].basis)
            )
    complete = sum(s.total_dim for s in fd.summands) == n

    u_defect = 0.0
    u_comm = 0.0
    for s in fd.summands:
        Vs = [s.unitaries[m] for m in sorted(s.unitaries)]
        for V in Vs:
            u_defect = max(
                u_defect, frobenius(V.conj().T @ V - np.eye(V.shape[0]))
            )
        for a in range(len(Vs)):
            for b in range(a + 1, len(Vs)):
                u_comm = max(u_comm, frobenius(Vs[a] @ Vs[b] - Vs[b] @ Vs[a]))

    rebuilt = reconstruct_family(fd)
    residuals = tuple(frobenius(rebuilt[m] - ops[m]) for m in range(fd.M))

    worst = max(
        compression, leakage, cross, frame_defect, u_defect, u_comm, nilp,
        max(residuals) if residuals else 0.0,
    )
    verdict = complete and nilp_floor and worst <= tol.abs_tol
    return FamilyVerification(
        verdict=verdict,
        complete=complete,
        compression_defect=compression,
        leakage_defect=leakage,
        basis_orthogonality=cross,
        basis_orthonormality=frame_defect,
        unitary_defect=u_defect,
        unitary_commutation=u_comm,
        nilpotency_defect=nilp,
        nilpotency_floor_ok=nilp_floor,
        residuals=residuals,
    )


def commutant_reducing_check(fd: FamilyDecomposition, R, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Must every summand reduce an operator star-commuting with the family?

    The family itself is rebuilt from the decomposition (faithful up to
    the recorded residuals) to check the precondition that R
    star-commutes with it; a violation raises PredicateError.  When the
    precondition holds, the answer is True iff every summand projector
    commutes with R within abs_tol.
    """
    Rm = as_square_operator(R, "R")
    n = fd.ambient_dim
    if Rm.shape[0] != n:
        raise DimensionMismatchError(
            f"R has dimension {Rm.shape[0]}, ambient is {n}"
        )
    rebuilt = reconstruct_family(fd)
    # Precondition tolerance scales with dimension and the size of R;
    # reconstruction error is within the recorded residuals.
    pre_tol = Tolerance(
        abs_tol=tol.abs_tol * max(1, n) * max(1.0, frobenius(Rm)),
        rank_rel_tol=tol.rank_rel_tol,
    )
    for m, T in enumerate(rebuilt):
        violations = is_star_commuting_family([T, Rm], pre_tol)
        if violations:
            raise PredicateError(
                f"R does not star-commute with operator {m} "
                f"(worst defect {max(v.defect for v in violations):.3e})",
                report=violations,
            )
    for s in fd.summands:
        P = s.basis @ s.basis.conj().T
        if frobenius(P @ Rm - Rm @ P) > tol.abs_tol:
            return False
    return True
