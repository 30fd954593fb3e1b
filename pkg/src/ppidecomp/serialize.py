"""JSON wire formats.

A complex matrix travels as {"rows": n, "cols": m, "re": [[..]], "im": [[..]]}
with row-major nested arrays; parsers reject ragged rows and non-finite
values.  Summand labels are "u", "s", "b" or "p:<int>".  All parse
failures raise InputError so callers (notably the CLI) can map them to a
uniform exit code.
"""

from __future__ import annotations

import math

import numpy as np

from .canonical import CanonicalDecomposition, VerificationReport
from .errors import InputError
from .family import FamilyDecomposition, FamilySummand, FamilyVerification
from .generate import FamilyPlantSpec, PlantSpec, SummandSpec
from .orbits import OrbitSignature, PartialInjection
from .pisometry import DefectReport, StarViolation

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "defect_report_to_json",
    "violations_to_json",
    "decomposition_to_json",
    "decomposition_from_json",
    "verification_to_json",
    "label_to_json",
    "label_from_json",
    "family_to_json",
    "family_from_json",
    "family_verification_to_json",
    "injection_to_json",
    "injection_from_json",
    "signature_to_json",
    "plant_spec_from_json",
    "family_plant_spec_from_json",
]


def matrix_to_json(M) -> dict:
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise InputError("only 2-D matrices serialize")
    return {
        "rows": A.shape[0],
        "cols": A.shape[1],
        "re": A.real.tolist(),
        "im": A.imag.tolist(),
    }


def _grid(obj, rows: int, cols: int, what: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != rows:
        raise InputError(f"{what} must be a list of {rows} rows")
    out = np.empty((rows, cols), dtype=float)
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != cols:
            raise InputError(f"{what} row {i} is ragged (expected {cols} entries)")
        for j, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise InputError(f"{what}[{i}][{j}] is not a finite number")
            out[i, j] = float(v)
    return out


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict):
        raise InputError("matrix JSON must be an object")
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("matrix JSON needs integer 'rows' and 'cols'") from exc
    if rows < 0 or cols < 0:
        raise InputError("matrix dimensions must be nonnegative")
    re = _grid(obj.get("re"), rows, cols, "re")
    im = _grid(obj.get("im"), rows, cols, "im")
    return re + 1j * im


def defect_report_to_json(r: DefectReport) -> dict:
    return {
        "max_power_checked": r.max_power_checked,
        "per_power_defect": list(r.per_power_defect),
        "verdict": r.verdict,
    }


def violations_to_json(violations: list[StarViolation]) -> list[dict]:
    return [
        {"m": v.m, "n": v.n, "kind": v.kind, "defect": v.defect}
        for v in violations
    ]


def decomposition_to_json(dec: CanonicalDecomposition) -> dict:
    return {
        "dim_u": dec.dim_u,
        "blocks": [{"p": p, "mult": m} for p, m in dec.blocks],
        "residual": dec.residual,
        "basis": matrix_to_json(dec.basis),
        "unitary_part": matrix_to_json(dec.unitary_part),
    }


def decomposition_from_json(obj) -> CanonicalDecomposition:
    if not isinstance(obj, dict):
        raise InputError("decomposition JSON must be an object")
    try:
        basis = matrix_from_json(obj["basis"])
        unitary_part = matrix_from_json(obj["unitary_part"])
        blocks = tuple(
            (int(b["p"]), int(b["mult"])) for b in obj["blocks"]
        )
        residual = float(obj["residual"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad decomposition JSON: {exc}") from exc
    if basis.shape[0] != basis.shape[1]:
        raise InputError("decomposition basis must be square")
    dec = CanonicalDecomposition(
        ambient_dim=basis.shape[0],
        unitary_part=unitary_part,
        blocks=blocks,
        basis=basis,
        residual=residual,
    )
    if int(obj.get("dim_u", dec.dim_u)) != dec.dim_u:
        raise InputError("dim_u does not match the unitary part")
    return dec


def verification_to_json(r: VerificationReport) -> dict:
    return {
        "verdict": r.verdict,
        "residual": r.residual,
        "dimension_ok": r.dimension_ok,
        "basis_unitarity_defect": r.basis_unitarity_defect,
        "unitary_part_defect": r.unitary_part_defect,
    }


def label_to_json(label) -> str:
    if label in ("u", "s", "b"):
        return str(label)
    return f"p:{int(label)}"


def label_from_json(text) -> str | int:
    if text in ("u", "s", "b"):
        return str(text)
    if isinstance(text, str) and text.startswith("p:"):
        try:
            p = int(text[2:])
        except ValueError as exc:
            raise InputError(f"bad label {text!r}") from exc
        if p < 1:
            raise InputError(f"bad label {text!r}: chain length must be >= 1")
        return p
    raise InputError(f"bad label {text!r}: expected 'u', 's', 'b' or 'p:<int>'")


def family_to_json(fd: FamilyDecomposition) -> dict:
    return {
        "M": fd.M,
        "summands": [
            {
                "index": [label_to_json(l) for l in s.index],
                "leg_dims": list(s.leg_dims),
                "mult_dim": s.mult_dim,
                "unitaries": {
                    str(m): matrix_to_json(V) for m, V in sorted(s.unitaries.items())
                },
                "basis": matrix_to_json(s.basis),
            }
            for s in fd.summands
        ],
        "residuals": list(fd.residuals),
    }


def family_from_json(obj) -> FamilyDecomposition:
    if not isinstance(obj, dict):
        raise InputError("family decomposition JSON must be an object")
    try:
        M = int(obj["M"])
        summands = []
        for raw in obj["summands"]:
            index = tuple(label_from_json(t) for t in raw["index"])
            summands.append(
                FamilySummand(
                    index=index,
                    leg_dims=tuple(int(x) for x in raw["leg_dims"]),
                    mult_dim=int(raw["mult_dim"]),
                    unitaries={
                        int(k): matrix_from_json(v)
                        for k, v in raw["unitaries"].items()
                    },
                    basis=matrix_from_json(raw["basis"]),
                )
            )
        residuals = tuple(float(r) for r in obj.get("residuals", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad family decomposition JSON: {exc}") from exc
    return FamilyDecomposition(M=M, summands=tuple(summands), residuals=residuals)


def family_verification_to_json(r: FamilyVerification) -> dict:
    return {
        "verdict": r.verdict,
        "complete": r.complete,
        "compression_defect": r.compression_defect,
        "leakage_defect": r.leakage_defect,
        "basis_orthogonality": r.basis_orthogonality,
        "basis_orthonormality": r.basis_orthonormality,
        "unitary_defect": r.unitary_defect,
        "unitary_commutation": r.unitary_commutation,
        "nilpotency_defect": r.nilpotency_defect,
        "nilpotency_floor_ok": r.nilpotency_floor_ok,
        "residuals": list(r.residuals),
    }


def injection_to_json(f: PartialInjection) -> dict:
    return {
        "nodes": f.node_count,
        "edges": sorted([a, b] for a, b in f.successor.items()),
        "past_flags": sorted(f.past_flags),
        "future_flags": sorted(f.future_flags),
    }


def injection_from_json(obj) -> PartialInjection:
    if not isinstance(obj, dict):
        raise InputError("partial injection JSON must be an object")
    try:
        n = int(obj["nodes"])
        edges = obj.get("edges", [])
        successor = {}
        for e in edges:
            a, b = int(e[0]), int(e[1])
            if a in successor:
                raise InputError(f"node {a} has two outgoing edges")
            successor[a] = b
        past = frozenset(int(v) for v in obj.get("past_flags", []))
        future = frozenset(int(v) for v in obj.get("future_flags", []))
    except InputError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"bad partial injection JSON: {exc}") from exc
    return PartialInjection(
        node_count=n, successor=successor, past_flags=past, future_flags=future
    )


def signature_to_json(sig: OrbitSignature) -> dict:
    return {
        "u_cycles": list(sig.u_cycles),
        "u_lines": sig.u_lines,
        "s_count": sig.s_count,
        "b_count": sig.b_count,
        "chains": list(sig.chains),
    }


def plant_spec_from_json(obj) -> PlantSpec:
    if not isinstance(obj, dict):
        raise InputError("plant spec JSON must be an object")
    try:
        return PlantSpec(
            dim_u=int(obj["dim_u"]),
            mults={int(p): int(m) for p, m in obj.get("mults", {}).items()},
            seed=int(obj["seed"]),
        )
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad plant spec JSON: {exc}") from exc


def family_plant_spec_from_json(obj) -> FamilyPlantSpec:
    if not isinstance(obj, dict):
        raise InputError("family plant spec JSON must be an object")
    try:
        summands = tuple(
            SummandSpec(
                index=tuple(label_from_json(t) for t in raw["index"]),
                mult_dim=int(raw["mult_dim"]),
                unitary_seeds={
                    int(k): int(v)
                    for k, v in raw.get("unitary_seeds", {}).items()
                },
            )
            for raw in obj["summands"]
        )
        return FamilyPlantSpec(
            M=int(obj["M"]), summands=summands, seed=int(obj["seed"])
        )
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad family plant spec JSON: {exc}") from exc
