"""Exact combinatorial backend: partial injections as finite graphs.

A partial injection on {0, .., n-1} (out-degree and in-degree at most 1)
is the combinatorial shadow of a power partial isometry acting on basis
vectors: e_j maps to e_{successor(j)} or to 0.  Orbits classify exactly:

    cycle of length k      -> unitary summand (k-th roots of unity)
    two-sided infinite ray -> bilateral shift, also unitary
    forward ray            -> unilateral shift
    backward ray           -> backward shift
    finite chain, length p -> truncated shift J_p

Infinite rays are not materialized: a ``past`` flag on a node marks an
implicit infinite backward tail, a ``future`` flag an infinite forward
tail.  Flags may only sit where the explicit graph ends (no predecessor
for past, no successor for future), which also keeps them off cycles.
This gives exact, finite answers for all four summand types, including
the two that provably cannot occur for matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterator

import numpy as np

from .errors import InputError
from .canonical import CanonicalDecomposition

__all__ = [
    "PartialInjection",
    "OrbitSignature",
    "DecompositionSignature",
    "validate",
    "classify_orbits",
    "to_matrix",
    "signature_of_decomposition",
    "signatures_match",
    "enumerate_partial_injections",
]


@dataclass(frozen=True)
class PartialInjection:
    node_count: int
    successor: dict[int, int] = field(default_factory=dict)
    past_flags: frozenset[int] = field(default_factory=frozenset)
    future_flags: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "successor", dict(self.successor))
        object.__setattr__(self, "past_flags", frozenset(self.past_flags))
        object.__setattr__(self, "future_flags", frozenset(self.future_flags))

    def predecessor(self) -> dict[int, int]:
        return {v: k for k, v in self.successor.items()}


@dataclass(frozen=True)
class OrbitSignature:
    """Orbit census: everything a partial injection is made of."""

    u_cycles: tuple[int, ...] = ()   # cycle lengths, sorted
    u_lines: int = 0                 # two-sided infinite orbits
    s_count: int = 0                 # forward rays
    b_count: int = 0                 # backward rays
    chains: tuple[int, ...] = ()     # finite chain lengths, sorted

    @property
    def cycle_dim(self) -> int:
        return sum(self.u_cycles)

    @property
    def is_finite(self) -> bool:
        return self.u_lines == 0 and self.s_count == 0 and self.b_count == 0

    def unitary_eigenvalues(self) -> np.ndarray:
        """Spectrum of the unitary summand: k-th roots of unity per cycle."""
        vals = [
            np.exp(2j * np.pi * np.arange(k) / k) for k in self.u_cycles
        ]
        return np.concatenate(vals) if vals else np.zeros(0, dtype=complex)


@dataclass(frozen=True)
class DecompositionSignature:
    """What the numerical decomposition of a 0/1 matrix can see.

    Cycle lengths are not recoverable from dimensions alone, so the
    unitary summand is summarized by its dimension and its eigenvalue
    multiset (a length-k cycle contributes exactly the k-th roots of
    unity).
    """

    chains: tuple[int, ...]
    unitary_dim: int
    unitary_eigenvalues: np.ndarray


def validate(f: PartialInjection) -> list[str]:
    """All invariant violations, empty when the graph is valid."""
    problems = []
    n = f.node_count
    if n < 0:
        problems.append(f"node_count {n} is negative")
        return problems
    indeg: dict[int, int] = {}
    for a, b in f.successor.items():
        if not (0 <= a < n):
            problems.append(f"source node {a} out of range")
        if not (0 <= b < n):
            problems.append(f"target node {b} out of range")
        indeg[b] = indeg.get(b, 0) + 1
    for b, k in indeg.items():
        if k > 1:
            problems.append(f"node {b} has in-degree {k} (injectivity)")
    has_pred = set(indeg)
    for v in f.past_flags:
        if not (0 <= v < n):
            problems.append(f"past flag on out-of-range node {v}")
        elif v in has_pred:
            problems.append(f"past flag on node {v} which has a predecessor")
    for v in f.future_flags:
        if not (0 <= v < n):
            problems.append(f"future flag on out-of-range node {v}")
        elif v in f.successor:
            problems.append(f"future flag on node {v} which has a successor")
    return problems


def classify_orbits(f: PartialInjection) -> OrbitSignature:
    """Partition the nodes into maximal orbits and classify each one."""
    problems = validate(f)
    if problems:
        raise InputError("invalid partial injection: " + "; ".join(problems))
    pred = f.predecessor()
    visited: set[int] = set()
    cycles: list[int] = []
    chains: list[int] = []
    lines = forward = backward = 0

    # Path orbits start at nodes without predecessor; everything left
    # afterwards sits on cycles.
    for head in range(f.node_count):
        if head in pred or head in visited:
            continue
        length = 0
        node = head
        while True:
            visited.add(node)
            length += 1
            if node in f.successor:
                node = f.successor[node]
            else:
                break
        past = head in f.past_flags
        future = node in f.future_flags
        if past and future:
            lines += 1
        elif future:
            forward += 1
        elif past:
            backward += 1
        else:
            chains.append(length)

    for start in range(f.node_count):
        if start in visited:
            continue
        length = 0
        node = start
        while True:
            visited.add(node)
            length += 1
            node = f.successor[node]
            if node == start:
                break
        cycles.append(length)

    return OrbitSignature(
        u_cycles=tuple(sorted(cycles)),
        u_lines=lines,
        s_count=forward,
        b_count=backward,
        chains=tuple(sorted(chains)),
    )


def to_matrix(f: PartialInjection) -> np.ndarray:
    """0/1 matrix of the map: column j holds e_{successor(j)} or zero.

    Only flag-free graphs have a finite matrix model; flags mean the
    operator lives on an infinite-dimensional space.
    """
    problems = validate(f)
    if problems:
        raise InputError("invalid partial injection: " + "; ".join(problems))
    if f.past_flags or f.future_flags:
        raise InputError("flagged graphs have no finite matrix model")
    M = np.zeros((f.node_count, f.node_count), dtype=complex)
    for a, b in f.successor.items():
        M[b, a] = 1.0
    return M


def signature_of_decomposition(dec: CanonicalDecomposition) -> DecompositionSignature:
    """Summarize a decomposition for comparison with an orbit census."""
    eig = (
        np.linalg.eigvals(dec.unitary_part)
        if dec.dim_u > 0
        else np.zeros(0, dtype=complex)
    )
    return DecompositionSignature(
        chains=dec.block_multiset(),
        unitary_dim=dec.dim_u,
        unitary_eigenvalues=eig,
    )


def signatures_match(
    orbit_sig: OrbitSignature,
    dec_sig: DecompositionSignature,
    eig_tol: float = 1e-9,
) -> bool:
    """Exact agreement of chain multisets and unitary data.

    Chain multisets and unitary dimensions must agree exactly; the
    unitary eigenvalue multisets are compared through an optimal matching
    within eig_tol.  Only finite (flag-free) signatures can match a
    matrix decomposition.
    """
    if not orbit_sig.is_finite:
        raise InputError("only flag-free signatures compare against matrices")
    if orbit_sig.chains != dec_sig.chains:
        return False
    if orbit_sig.cycle_dim != dec_sig.unitary_dim:
        return False
    from .linalg import eigenvalue_matching_distance

    want = orbit_sig.unitary_eigenvalues()
    return eigenvalue_matching_distance(want, dec_sig.unitary_eigenvalues) <= eig_tol


def enumerate_partial_injections(n: int) -> Iterator[PartialInjection]:
    """All flag-free partial injections on n nodes.

    There are sum_k C(n,k)^2 k! of them (209 for n = 4); intended for
    exhaustive cross-checks at small n.
    """
    nodes = range(n)
    for k in range(n + 1):
        for domain in combinations(nodes, k):
            for image in permutations(nodes, k):
                yield PartialInjection(
                    node_count=n,
                    successor=dict(zip(domain, image)),
                )
