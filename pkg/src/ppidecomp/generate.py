"""Deterministic planted-instance synthesis with ground-truth records.

Everything here is a pure function of (spec, seed): the same inputs give
bit-identical outputs, which is what makes recovered decompositions
comparable against their plants in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .canonical import CanonicalDecomposition, canonical_model, frobenius
from .errors import InputError
from .family import FamilyDecomposition, FamilySummand, label_sort_key, summand_model_operator
from .orbits import PartialInjection, validate
from .linalg import as_square_operator

__all__ = [
    "PlantSpec",
    "SummandSpec",
    "FamilyPlantSpec",
    "random_unitary",
    "plant_single",
    "plant_family",
    "random_partial_injection",
    "random_plant_spec",
    "random_family_spec",
    "random_star_commutant",
]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(n: int, seed) -> np.ndarray:
    """Haar-distributed n x n unitary, deterministic per seed.

    QR of a complex Gaussian sample with the R-diagonal phases absorbed
    into Q, which makes the distribution Haar and the output independent
    of LAPACK's sign conventions.
    """
    if n < 1:
        raise InputError(f"random_unitary needs n >= 1, got {n}")
    rng = _rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


@dataclass(frozen=True)
class PlantSpec:
    """Ground truth for a single planted operator: unitary dimension,
    chain-length multiplicities, and the seed."""

    dim_u: int
    mults: dict[int, int]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "mults", dict(self.mults))
        if self.dim_u < 0:
            raise InputError("dim_u must be nonnegative")
        for p, m in self.mults.items():
            if p < 1 or m < 1:
                raise InputError(f"bad block ({p}, {m}): need p >= 1, mult >= 1")
        if self.total_dim < 1:
            raise InputError("planted operator must have positive dimension")

    @property
    def total_dim(self) -> int:
        return self.dim_u + sum(p * m for p, m in self.mults.items())

    def blocks(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.mults.items()))


def plant_single(spec: PlantSpec) -> tuple[np.ndarray, CanonicalDecomposition]:
    """Build T = W (V_u (+) blocks) W* with Haar V_u and W; returns the
    operator together with the decomposition that planted it."""
    rng = np.random.default_rng(spec.seed)
    n = spec.total_dim
    if spec.dim_u > 0:
        V_u = random_unitary(spec.dim_u, rng)
    else:
        V_u = np.zeros((0, 0), dtype=complex)
    blocks = spec.blocks()
    model = canonical_model(V_u, blocks, n)
    W = random_unitary(n, rng)
    T = W @ model @ W.conj().T
    truth = CanonicalDecomposition(
        ambient_dim=n,
        unitary_part=V_u,
        blocks=blocks,
        basis=W,
        residual=frobenius(W.conj().T @ T @ W - model),
    )
    return T, truth


@dataclass(frozen=True)
class SummandSpec:
    """One summand of a family plant: its index over {u} u {p >= 1},
    the multiplicity dimension, and one seed per u-slot."""

    index: tuple
    mult_dim: int
    unitary_seeds: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(self.index))
        object.__setattr__(self, "unitary_seeds", dict(self.unitary_seeds))
        for label in self.index:
            if label != "u" and not (isinstance(label, int) and label >= 1):
                raise InputError(f"bad label {label!r} in summand index")
        if self.mult_dim < 1:
            raise InputError("summand multiplicity must be >= 1")
        u_slots = {m for m, l in enumerate(self.index) if l == "u"}
        if set(self.unitary_seeds) != u_slots:
            raise InputError(
                f"unitary seeds {sorted(self.unitary_seeds)} must cover "
                f"exactly the u-slots {sorted(u_slots)}"
            )

    @property
    def leg_total(self) -> int:
        out = 1
        for label in self.index:
            if label != "u":
                out *= int(label)
        return out

    @property
    def total_dim(self) -> int:
        return self.leg_total * self.mult_dim


@dataclass(frozen=True)
class FamilyPlantSpec:
    M: int
    summands: tuple[SummandSpec, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))
        if self.M < 1:
            raise InputError("family needs at least one operator")
        if not self.summands:
            raise InputError("family plant needs at least one summand")
        for s in self.summands:
            if len(s.index) != self.M:
                raise InputError(
                    f"summand index {s.index} has length {len(s.index)}, expected {self.M}"
                )
        if self.total_dim < 1:
            raise InputError("family plant must have positive dimension")

    @property
    def total_dim(self) -> int:
        return sum(s.total_dim for s in self.summands)


def _commuting_unitaries(
    mult: int, slots: list[int], seeds: dict[int, int], base_seed, rng: np.random.Generator
) -> dict[int, np.ndarray]:
    """Commuting unitaries on C^mult: a shared Haar eigenbasis with
    independent unit-modulus spectra per slot.  Sharing the eigenbasis
    makes commutation (and star-commutation) exact by construction."""
    if not slots:
        return {}
    Q = random_unitary(mult, rng)
    out = {}
    for m in slots:
        phases = np.random.default_rng([base_seed, seeds[m]]).uniform(
            0.0, 2.0 * np.pi, size=mult
        )
        out[m] = (Q * np.exp(1j * phases)) @ Q.conj().T
    return out


def plant_family(spec: FamilyPlantSpec) -> tuple[list[np.ndarray], FamilyDecomposition]:
    """Build a star-commuting family in model form, conjugated once.

    Summands sharing the same index are merged (their multiplicity spaces
    direct-sum and the slot unitaries block-diagonalize): the canonical
    summand per index is unique, so the ground truth must present merged
    summands for recovery comparisons to be exact.
    """
    # Group by index, canonical order; keep spec order within groups.
    groups: dict[tuple, list[SummandSpec]] = {}
    for s in spec.summands:
        groups.setdefault(s.index, []).append(s)
    ordered = sorted(groups, key=lambda ix: tuple(label_sort_key(l) for l in ix))

    rng = np.random.default_rng(spec.seed)
    n = spec.total_dim
    pieces = []  # (index, leg_dims, mult, unitaries, offset)
    offset = 0
    for ix in ordered:
        members = groups[ix]
        slots = [m for m, l in enumerate(ix) if l == "u"]
        mult = sum(s.mult_dim for s in members)
        per_member = [
            _commuting_unitaries(s.mult_dim, slots, s.unitary_seeds, spec.seed, rng)
            for s in members
        ]
        unitaries = {}
        for m in slots:
            blocks = [pm[m] for pm in per_member]
            V = np.zeros((mult, mult), dtype=complex)
            pos = 0
            for B in blocks:
                k = B.shape[0]
                V[pos : pos + k, pos : pos + k] = B
                pos += k
            unitaries[m] = V
        leg_dims = tuple(int(l) for l in ix if l != "u")
        dim = mult
        for p in leg_dims:
            dim *= p
        pieces.append((ix, leg_dims, mult, unitaries, offset))
        offset += dim
    if offset != n:
        raise InputError("summand dimensions are inconsistent")

    W = random_unitary(n, rng)
    summands = []
    for ix, leg_dims, mult, unitaries, off in pieces:
        dim = mult
        for p in leg_dims:
            dim *= p
        summands.append(
            FamilySummand(
                index=ix,
                leg_dims=leg_dims,
                mult_dim=mult,
                unitaries=unitaries,
                basis=W[:, off : off + dim],
            )
        )

    Ts = []
    for m in range(spec.M):
        model = np.zeros((n, n), dtype=complex)
        for s, (_, _, _, _, off) in zip(summands, pieces):
            dim = s.total_dim
            model[off : off + dim, off : off + dim] = summand_model_operator(s, m)
        Ts.append(W @ model @ W.conj().T)

    truth = FamilyDecomposition(
        M=spec.M,
        summands=tuple(summands),
        residuals=tuple(0.0 for _ in range(spec.M)),
    )
    return Ts, truth


def random_partial_injection(
    n: int, edge_density: float, flag_prob: float, seed
) -> PartialInjection:
    """Greedy seeded partial injection on n nodes.

    Sources are visited in a seeded order; each draws an edge with
    probability edge_density toward a uniformly chosen target that still
    has free in-degree.  Flags are then offered to every node where the
    rules allow one (no predecessor for past, no successor for future),
    each accepted with probability flag_prob.
    """
    if n < 0:
        raise InputError("node count must be nonnegative")
    if not (0.0 <= edge_density <= 1.0 and 0.0 <= flag_prob <= 1.0):
        raise InputError("edge_density and flag_prob must lie in [0, 1]")
    rng = _rng(seed)
    successor: dict[int, int] = {}
    taken: set[int] = set()
    for src in rng.permutation(n):
        if rng.random() >= edge_density:
            continue
        free = [t for t in range(n) if t not in taken]
        if not free:
            break
        tgt = int(free[rng.integers(len(free))])
        successor[int(src)] = tgt
        taken.add(tgt)
    past = frozenset(
        v for v in range(n)
        if v not in taken and rng.random() < flag_prob
    )
    future = frozenset(
        v for v in range(n)
        if v not in successor and rng.random() < flag_prob
    )
    f = PartialInjection(
        node_count=n, successor=successor, past_flags=past, future_flags=future
    )
    problems = validate(f)
    if problems:  # construction respects the rules; guard anyway
        raise InputError("generator produced an invalid graph: " + "; ".join(problems))
    return f


def random_plant_spec(seed, max_dim: int = 64) -> PlantSpec:
    """Seeded random PlantSpec with total dimension in [1, max_dim]."""
    rng = _rng(seed)
    target = int(rng.integers(1, max_dim + 1))
    dim_u = int(rng.integers(0, min(10, target) + 1))
    remaining = target - dim_u
    mults: dict[int, int] = {}
    while remaining > 0:
        p = int(rng.integers(1, min(8, remaining) + 1))
        mult = int(rng.integers(1, min(3, remaining // p) + 1))
        mults[p] = mults.get(p, 0) + mult
        remaining -= p * mult
    if dim_u == 0 and not mults:
        dim_u = 1
    return PlantSpec(dim_u=dim_u, mults=mults, seed=int(rng.integers(2**63)))


def random_family_spec(seed, M: int, max_dim: int = 60) -> FamilyPlantSpec:
    """Seeded random FamilyPlantSpec with distinct indices, dim <= max_dim."""
    rng = _rng(seed)
    while True:
        count = int(rng.integers(1, 4))
        indices: set[tuple] = set()
        tries = 0
        while len(indices) < count and tries < 50:
            ix = tuple(
                "u" if rng.random() < 0.4 else int(rng.integers(1, 4))
                for _ in range(M)
            )
            indices.add(ix)
            tries += 1
        summands = []
        for ix in sorted(indices, key=lambda t: tuple(label_sort_key(l) for l in t)):
            mult = int(rng.integers(1, 4))
            seeds = {
                m: int(rng.integers(2**31))
                for m, l in enumerate(ix)
                if l == "u"
            }
            summands.append(SummandSpec(index=ix, mult_dim=mult, unitary_seeds=seeds))
        spec = FamilyPlantSpec(
            M=M, summands=tuple(summands), seed=int(rng.integers(2**63))
        )
        if spec.total_dim <= max_dim:
            return spec


def random_star_commutant(fd: FamilyDecomposition, seed) -> np.ndarray:
    """An operator star-commuting with the family a decomposition models.

    Per summand, the commutant acts as identity on the tensor legs and as
    an operator on the multiplicity space that commutes with every slot
    unitary and every adjoint: a random linear combination of the
    identity, the slot unitaries, and their adjoints (all of which share
    an eigenbasis), or an unconstrained random matrix when the summand
    has no u-slots.
    """
    rng = _rng(seed)
    n = fd.ambient_dim
    R = np.zeros((n, n), dtype=complex)
    for s in fd.summands:
        k = s.mult_dim
        if s.unitaries:
            X = (rng.standard_normal() + 1j * rng.standard_normal()) * np.eye(
                k, dtype=complex
            )
            for V in s.unitaries.values():
                X += (rng.standard_normal() + 1j * rng.standard_normal()) * V
                X += (rng.standard_normal() + 1j * rng.standard_normal()) * V.conj().T
        else:
            X = rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))
        block = np.kron(np.eye(s.leg_total, dtype=complex), X)
        W = s.basis
        R += W @ block @ W.conj().T
    return as_square_operator(R)
