"""Canonical block decomposition of a single power partial isometry.

Every power partial isometry on C^d is unitarily equivalent to

    V  (+)  (+)_p  J_p (x) I_{m_p}

where V is unitary, J_p is the p-dimensional truncated shift
(e_n -> e_{n+1} for n < p, e_p -> 0, with J_1 = 0), and m_p counts the
length-p shift chains.  The infinite-dimensional statement has two more
summand types, a forward and a backward shift; on a finite-dimensional
space those cannot occur, because an isometry of C^d is already unitary.
The decomposition returned here keeps slots for them only implicitly: the
subspaces they would occupy are computed and asserted zero-dimensional
(``vacuity_dims``).  The exact combinatorial backend in ``orbits`` is
where forward/backward rays are realized.

The unitary summand lives on the intersection of the ranges of all T^n
with the ranges of all T*^n; both chains of projections are decreasing,
so on C^d they stabilize once consecutive powers have equal rank.  Chains
of length p are rooted in the multiplicity space

    M_p = (1 - T T*)(T*^{p-1} T^{p-1} - T*^p T^p) H,

and the chain basis is the image of an orthonormal basis of M_p under
T^0, ..., T^{p-1}; those images are re-orthonormalized defensively and a
drift beyond 1e-6 aborts with a degeneracy error instead of being
silently absorbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConsistencyError,
    DecompositionError,
    DegeneracyError,
    InputError,
    PredicateError,
)
from .linalg import (
    DEFAULT_TOL,
    Subspace,
    Tolerance,
    as_square_operator,
    complete_to_unitary,
    frobenius,
    intersect,
    onb_of_range,
)
from .pisometry import is_power_partial_isometry

__all__ = [
    "CanonicalDecomposition",
    "VerificationReport",
    "IdentityReport",
    "truncated_shift",
    "canonical_model",
    "range_limit_projection",
    "source_limit_projection",
    "multiplicity_space",
    "block_space",
    "decompose",
    "reconstruct",
    "verify",
    "vacuity_dims",
    "identity_report",
]

# A nonzero difference of range/source projections of a genuine power
# partial isometry is itself a projection, so its Frobenius norm is >= 1;
# anything this small is numerical residue of a vanished block.
_ZERO_PROJ_NORM = 0.5

# Drift allowed on chain frames before re-orthonormalization is refused.
_CHAIN_DRIFT_LIMIT = 1e-6


def truncated_shift(p: int) -> np.ndarray:
    """The truncated shift J_p on C^p; J_1 is the 1x1 zero matrix."""
    if p < 1:
        raise InputError(f"truncated shift needs p >= 1, got {p}")
    J = np.zeros((p, p), dtype=complex)
    for n in range(p - 1):
        J[n + 1, n] = 1.0
    return J


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Result of ``decompose``.

    blocks lists (p, multiplicity) pairs with p ascending; basis is the
    global change-of-basis unitary whose leading columns span the unitary
    summand followed by the chain bases for each p in order.  residual is
    ||basis* T basis - model||_F at construction time.
    """

    ambient_dim: int
    unitary_part: np.ndarray
    blocks: tuple[tuple[int, int], ...]
    basis: np.ndarray
    residual: float

    @property
    def dim_u(self) -> int:
        return self.unitary_part.shape[0]

    def block_multiset(self) -> tuple[int, ...]:
        """Chain lengths with multiplicity, sorted ascending."""
        out: list[int] = []
        for p, m in self.blocks:
            out.extend([p] * m)
        return tuple(sorted(out))

    def model(self) -> np.ndarray:
        return canonical_model(self.unitary_part, self.blocks, self.ambient_dim)


@dataclass(frozen=True)
class VerificationReport:
    verdict: bool
    residual: float
    dimension_ok: bool
    basis_unitarity_defect: float
    unitary_part_defect: float


def canonical_model(unitary_part: np.ndarray, blocks, ambient_dim: int) -> np.ndarray:
    """Block-diagonal model: unitary part first, then J_p (x) I_m ascending."""
    M = np.zeros((ambient_dim, ambient_dim), dtype=complex)
    k = unitary_part.shape[0]
    M[:k, :k] = unitary_part
    off = k
    for p, m in blocks:
        size = p * m
        M[off : off + size, off : off + size] = np.kron(
            truncated_shift(p), np.eye(m, dtype=complex)
        )
        off += size
    if off != ambient_dim:
        raise ConsistencyError(
            f"blocks plus unitary part fill {off} of {ambient_dim} dimensions"
        )
    return M


def _gate(T, tol: Tolerance) -> np.ndarray:
    M = as_square_operator(T)
    if M.shape[0] == 0:
        raise InputError("operator must act on a space of positive dimension")
    report = is_power_partial_isometry(M, tol)
    if not report.verdict:
        raise PredicateError(
            "not a power partial isometry "
            f"(worst defect {max(report.per_power_defect):.3e} "
            f"at power {report.worst_power})",
            report=report,
        )
    return M


def _powers(M: np.ndarray, count: int) -> list[np.ndarray]:
    """[I, M, M^2, ..., M^count]."""
    out = [np.eye(M.shape[0], dtype=complex)]
    for _ in range(count):
        out.append(out[-1] @ M)
    return out


def _rank(A: np.ndarray, tol: Tolerance) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_rel_tol * s[0]))


def _limit_range_frame(M: np.ndarray, tol: Tolerance) -> Subspace:
    """Range of T^n at the first n with rank(T^n) = rank(T^{n+1}).

    The ranges of consecutive powers are nested, so equal rank means equal
    range from that point on; n never exceeds the dimension.
    """
    d = M.shape[0]
    power = np.eye(d, dtype=complex)
    rank_here = d
    for _ in range(d + 1):
        nxt = power @ M
        rank_next = _rank(nxt, tol)
        if rank_next == rank_here:
            return onb_of_range(power, tol)
        power, rank_here = nxt, rank_next
    # Ranks strictly decrease at most d times, so this is unreachable for
    # any input; guard against a broken tolerance configuration.
    raise DecompositionError("range chain failed to stabilize within dim steps")


def range_limit_projection(T, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Subspace where the decreasing chain of ranges T^n H settles."""
    M = _gate(T, tol)
    return _limit_range_frame(M, tol)


def source_limit_projection(T, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Same stabilization applied to the adjoint: the limit of T*^n H."""
    M = _gate(T, tol)
    return _limit_range_frame(M.conj().T, tol)


def _multiplicity_frame(M: np.ndarray, p: int, tol: Tolerance) -> Subspace:
    d = M.shape[0]
    eye = np.eye(d, dtype=complex)
    Tp1 = np.linalg.matrix_power(M, p - 1)
    Tp = Tp1 @ M
    src_diff = Tp1.conj().T @ Tp1 - Tp.conj().T @ Tp
    if frobenius(src_diff) < _ZERO_PROJ_NORM:
        return Subspace.zero(d)
    return onb_of_range((eye - M @ M.conj().T) @ src_diff, tol)


def multiplicity_space(T, p: int, tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Root space M_p of the length-p chains.

    M_p = (1 - T T*)(T*^{p-1} T^{p-1} - T*^p T^p) H; the two factors are
    commuting projections, so the product is again a projection and its
    range is found reliably.  For p = 1 this is ker T intersect ker T*.
    """
    if p < 1:
        raise InputError(f"chain length must be >= 1, got {p}")
    M = _gate(T, tol)
    return _multiplicity_frame(M, p, tol)


def _loewdin(F: np.ndarray) -> tuple[np.ndarray, float]:
    """Closest orthonormal frame and the drift max|sigma - 1|."""
    if F.shape[1] == 0:
        return F, 0.0
    u, s, vh = np.linalg.svd(F, full_matrices=False)
    return u @ vh, float(np.max(np.abs(s - 1.0)))


def _chain_frames(M: np.ndarray, root: Subspace, p: int) -> list[Subspace]:
    """Images of the M_p frame under T^0 .. T^{p-1}, re-orthonormalized.

    T^{n-1} maps M_p isometrically onto the n-th chain level, so the raw
    images are orthonormal up to round-off; the drift is measured and a
    value beyond the limit raises instead of being smoothed over.
    """
    frames = []
    F = root.frame
    for level in range(p):
        if level > 0:
            F = M @ F
        G, drift = _loewdin(F)
        if drift > _CHAIN_DRIFT_LIMIT:
            raise DegeneracyError(
                f"chain level {level + 1} of length-{p} block drifted from "
                f"orthonormality by {drift:.3e}",
                diagnostics={"p": p, "level": level + 1, "drift": drift},
            )
        frames.append(Subspace(G))
        F = G.copy()
    return frames


def block_space(T, p: int, tol: Tolerance = DEFAULT_TOL) -> tuple[Subspace, list[Subspace]]:
    """The length-p summand and its chain levels.

    Returns (H_p, levels) where levels[n] is the image of the M_p frame
    under T^n and H_p is their orthogonal direct sum.  A unitary input has
    no chains at all, so H_p is zero-dimensional for every p.
    """
    if p < 1:
        raise InputError(f"chain length must be >= 1, got {p}")
    M = _gate(T, tol)
    root = _multiplicity_frame(M, p, tol)
    if root.dim == 0:
        return Subspace.zero(M.shape[0]), [Subspace.zero(M.shape[0])] * p
    levels = _chain_frames(M, root, p)
    return Subspace(np.hstack([S.frame for S in levels])), levels


def _vacuity_dims(M: np.ndarray, P: Subspace, Q: Subspace, tol: Tolerance) -> tuple[int, int]:
    d = M.shape[0]
    eye = np.eye(d, dtype=complex)
    Pm, Qm = P.projector(), Q.projector()
    s_dim = onb_of_range((eye - Pm) @ Qm, tol).dim
    b_dim = onb_of_range((eye - Qm) @ Pm, tol).dim
    return s_dim, b_dim


def vacuity_dims(T, tol: Tolerance = DEFAULT_TOL) -> tuple[int, int]:
    """Dimensions of the forward/backward-shift slots, provably 0 here.

    Returns (dim (1-P)QH, dim (1-Q)PH) for the two limit projections P
    and Q.  On a finite-dimensional space T restricted to QH is an
    isometry, hence unitary, which forces QH inside PH and both numbers
    to zero; a nonzero value signals an input outside the contract.
    """
    M = _gate(T, tol)
    P = _limit_range_frame(M, tol)
    Q = _limit_range_frame(M.conj().T, tol)
    return _vacuity_dims(M, P, Q, tol)


def decompose(T, tol: Tolerance = DEFAULT_TOL) -> CanonicalDecomposition:
    """Compute the canonical decomposition of a power partial isometry.

    Raises PredicateError when the input fails the power check, and
    DecompositionError when dimensions fail to add up or the final
    residual exceeds tolerance (with diagnostics attached).
    """
    M = _gate(T, tol)
    d = M.shape[0]

    P = _limit_range_frame(M, tol)
    Q = _limit_range_frame(M.conj().T, tol)
    s_dim, b_dim = _vacuity_dims(M, P, Q, tol)
    if s_dim or b_dim:
        raise DecompositionError(
            "shift-type summands detected on a finite-dimensional space; "
            "input is outside the power-partial-isometry contract",
            diagnostics={"shift_dim": s_dim, "backshift_dim": b_dim},
        )
    Hu = intersect(P, Q, tol)

    unitary_part = Hu.frame.conj().T @ M @ Hu.frame
    u_defect = frobenius(
        unitary_part.conj().T @ unitary_part - np.eye(Hu.dim)
    )
    if u_defect > tol.abs_tol:
        raise DecompositionError(
            f"restriction to the limit subspace is not unitary (defect {u_defect:.3e})",
            diagnostics={"unitary_defect": u_defect},
        )

    blocks: list[tuple[int, int]] = []
    frames: list[Subspace] = [Hu]
    remaining = d - Hu.dim
    for p in range(1, d + 1):
        if remaining == 0:
            break
        root = _multiplicity_frame(M, p, tol)
        if root.dim == 0:
            continue
        levels = _chain_frames(M, root, p)
        frames.append(Subspace(np.hstack([S.frame for S in levels])))
        blocks.append((p, root.dim))
        remaining -= p * root.dim
    if remaining != 0:
        raise DecompositionError(
            "chain blocks and unitary part do not exhaust the space",
            diagnostics={
                "ambient_dim": d,
                "dim_u": Hu.dim,
                "blocks": blocks,
                "unaccounted": remaining,
            },
        )

    U = complete_to_unitary(frames, tol)
    model = canonical_model(unitary_part, blocks, d)
    residual = frobenius(U.conj().T @ M @ U - model)
    if residual > tol.abs_tol:
        raise DecompositionError(
            f"decomposition residual {residual:.3e} exceeds tolerance {tol.abs_tol:.1e}",
            diagnostics={"residual": residual, "blocks": blocks, "dim_u": Hu.dim},
        )
    return CanonicalDecomposition(
        ambient_dim=d,
        unitary_part=unitary_part,
        blocks=tuple(blocks),
        basis=U,
        residual=residual,
    )


def _check_internal(dec: CanonicalDecomposition) -> None:
    d = dec.ambient_dim
    if dec.basis.shape != (d, d):
        raise ConsistencyError("basis shape does not match ambient dimension")
    filled = dec.dim_u + sum(p * m for p, m in dec.blocks)
    if filled != d:
        raise ConsistencyError(
            f"dimension bookkeeping broken: {filled} != {d}"
        )


def reconstruct(dec: CanonicalDecomposition) -> np.ndarray:
    """Rebuild the operator: basis @ model @ basis*."""
    _check_internal(dec)
    U = dec.basis
    return U @ dec.model() @ U.conj().T


def verify(T, dec: CanonicalDecomposition, tol: Tolerance = DEFAULT_TOL) -> VerificationReport:
    """Re-check a decomposition against an operator; never raises on a
    mathematical failure, the report carries it."""
    M = as_square_operator(T)
    if M.shape[0] != dec.ambient_dim:
        raise InputError(
            f"operator dimension {M.shape[0]} != decomposition ambient {dec.ambient_dim}"
        )
    d = dec.ambient_dim
    dimension_ok = dec.dim_u + sum(p * m for p, m in dec.blocks) == d
    U = dec.basis
    basis_defect = frobenius(U.conj().T @ U - np.eye(d))
    k = dec.dim_u
    upart_defect = frobenius(
        dec.unitary_part.conj().T @ dec.unitary_part - np.eye(k)
    )
    if dimension_ok:
        residual = frobenius(U.conj().T @ M @ U - dec.model())
    else:
        residual = float("inf")
    verdict = (
        dimension_ok
        and residual <= tol.abs_tol
        and basis_defect <= tol.abs_tol
        and upart_defect <= tol.abs_tol
    )
    return VerificationReport(
        verdict=verdict,
        residual=residual,
        dimension_ok=dimension_ok,
        basis_unitarity_defect=basis_defect,
        unitary_part_defect=upart_defect,
    )


@dataclass(frozen=True)
class IdentityReport:
    """Measured defects of the structural identities behind the theorem.

    All quantities are Frobenius-norm defects except the integer
    bookkeeping fields.  Where a pair of projection differences is
    negligibly small, its products are not formed explicitly; instead a
    submultiplicative bound certifies them and the bound is folded into
    the reported maximum, so every value is a true upper bound over the
    full index range.
    """

    pull_up_max: float            # T (T^n T*^n) = (T^{n+1} T*^{n+1}) T
    pull_down_max: float          # T (T*^n T^n) = (T*^{n-1} T^{n-1}) T
    limit_commutator: float       # PQ = QP
    range_block_orthogonality: float   # P_m P_n = delta_{mn} P_m
    grid_orthogonality: float     # Q_{m,n} mutually orthogonal projections
    grid_partial_sum: float       # telescoped double sums match
    chain_kill_max: float         # T^p annihilates M_p
    shift_dim: int                # dim (1-P)QH, must be 0
    backshift_dim: int            # dim (1-Q)PH, must be 0
    chain_dim_total: int          # sum over p of dim H_p
    complement_dim: int           # dim (1-P)(1-Q)H

    @property
    def max_defect(self) -> float:
        return max(
            self.pull_up_max,
            self.pull_down_max,
            self.limit_commutator,
            self.range_block_orthogonality,
            self.grid_orthogonality,
            self.grid_partial_sum,
            self.chain_kill_max,
        )

    @property
    def bookkeeping_ok(self) -> bool:
        return (
            self.shift_dim == 0
            and self.backshift_dim == 0
            and self.chain_dim_total == self.complement_dim
        )


def identity_report(T, tol: Tolerance = DEFAULT_TOL) -> IdentityReport:
    """Evaluate the pull-through, orthogonality and bookkeeping identities.

    Only index pairs whose projection differences are non-negligible are
    multiplied out; the rest are covered by norm bounds (||AB||_F <=
    ||A||_F ||B||_F), which keeps the cost quadratic in the number of
    *live* chain lengths rather than in the dimension.
    """
    M = _gate(T, tol)
    d = M.shape[0]
    pows = _powers(M, d + 2)
    rng = [Pk @ Pk.conj().T for Pk in pows]
    src = [Pk.conj().T @ Pk for Pk in pows]

    pull_up = max(frobenius(M @ rng[k] - rng[k + 1] @ M) for k in range(d + 2))
    pull_down = max(frobenius(M @ src[k] - src[k - 1] @ M) for k in range(1, d + 2))

    limit_comm = frobenius(rng[d] @ src[d] - src[d] @ rng[d])

    Pr = [rng[m] - rng[m + 1] for m in range(d + 1)]
    Ps = [src[n] - src[n + 1] for n in range(d + 1)]
    rnorm = [frobenius(A) for A in Pr]
    snorm = [frobenius(A) for A in Ps]
    # Live indices: differences that are genuine projections (norm >= 1);
    # sub-threshold ones are certified by bounds below.
    eta = 1e-11
    live_r = [m for m in range(d + 1) if rnorm[m] > eta]
    live_s = [n for n in range(d + 1) if snorm[n] > eta]

    p_orth = 0.0
    for i in live_r:
        for j in live_r:
            target = Pr[i] if i == j else 0.0
            p_orth = max(p_orth, frobenius(Pr[i] @ Pr[j] - target))
    tail_r = max((rnorm[m] for m in range(d + 1) if m not in live_r), default=0.0)
    all_r = max(rnorm, default=0.0)
    p_orth = max(p_orth, tail_r * (all_r + 1.0))

    # Q_{m,n} = Pr[m] Ps[n]: form only live pairs, certify the rest.
    formed: dict[tuple[int, int], np.ndarray] = {}
    gbound: dict[tuple[int, int], float] = {}
    for m in range(d + 1):
        for n in range(d + 1):
            if m in live_r and n in live_s:
                G = Pr[m] @ Ps[n]
                gn = frobenius(G)
                if gn > eta:
                    formed[(m, n)] = G
                gbound[(m, n)] = gn
            else:
                gbound[(m, n)] = rnorm[m] * snorm[n]
    keys = sorted(formed)
    q_orth = 0.0
    for a in range(len(keys)):
        Ga = formed[keys[a]]
        q_orth = max(q_orth, frobenius(Ga @ Ga - Ga))
        q_orth = max(q_orth, frobenius(Ga - Ga.conj().T))
        for b in range(a + 1, len(keys)):
            q_orth = max(q_orth, frobenius(Ga @ formed[keys[b]]))
    small_max = max(
        (gbound[k] for k in gbound if k not in formed), default=0.0
    )
    big_max = max((frobenius(formed[k]) for k in formed), default=0.0)
    q_orth = max(q_orth, small_max * (1.0 + max(big_max, small_max)))

    # Partial sums: checked exactly on the live grid plus the far corner;
    # omitted tiny terms enter as certified slack.
    grid_m = sorted(set(live_r) | {0, d})
    grid_n = sorted(set(live_s) | {0, d})
    eye = np.eye(d, dtype=complex)
    q_sum = 0.0
    for Mcap in grid_m:
        for Ncap in grid_n:
            acc = np.zeros((d, d), dtype=complex)
            slack = 0.0
            for (m, n), G in formed.items():
                if m <= Mcap and n <= Ncap:
                    acc += G
            for (m, n), bound in gbound.items():
                if m <= Mcap and n <= Ncap and (m, n) not in formed:
                    slack += bound
            rhs = (eye - rng[Mcap + 1]) @ (eye - src[Ncap + 1])
            q_sum = max(q_sum, frobenius(acc - rhs) + slack)

    # Chains: T^p kills M_p; total chain dimension matches the complement.
    chain_kill = 0.0
    chain_total = 0
    for p in range(1, d + 1):
        if snorm[p - 1] <= _ZERO_PROJ_NORM:
            continue
        root = _multiplicity_frame(M, p, tol)
        if root.dim == 0:
            continue
        chain_total += p * root.dim
        chain_kill = max(chain_kill, frobenius(pows[p] @ root.frame))

    P = _limit_range_frame(M, tol)
    Q = _limit_range_frame(M.conj().T, tol)
    s_dim, b_dim = _vacuity_dims(M, P, Q, tol)
    complement = onb_of_range(
        (eye - P.projector()) @ (eye - Q.projector()), tol
    ).dim

    return IdentityReport(
        pull_up_max=pull_up,
        pull_down_max=pull_down,
        limit_commutator=limit_comm,
        range_block_orthogonality=p_orth,
        grid_orthogonality=q_orth,
        grid_partial_sum=q_sum,
        chain_kill_max=chain_kill,
        shift_dim=s_dim,
        backshift_dim=b_dim,
        chain_dim_total=chain_total,
        complement_dim=complement,
    )
