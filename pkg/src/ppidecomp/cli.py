"""Command-line front end.

    ppidecomp analyze          <matrix.json | family.json | inline JSON>
    ppidecomp decompose        <matrix.json>
    ppidecomp decompose-family <family.json>
    ppidecomp orbit-classify   <graph.json> [--cross-check]
    ppidecomp plant            <spec.json> [--seed N]
    ppidecomp verify           <bundle.json>

Inputs are file paths or inline JSON (anything starting with '{').
Reports go to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 mathematical verdict failure, 2 input error, 3 internal inconsistency.
A directory of *.json files can be processed concurrently with
``--batch DIR`` in place of the input argument.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import canonical, family, orbits, pisometry, serialize
from .errors import InputError, PPIDecompError, PredicateError
from .generate import plant_family, plant_single
from .linalg import Tolerance

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _tolerance(args) -> Tolerance:
    if args.tol <= 0 or args.rank_tol <= 0:
        raise InputError("--tol and --rank-tol must be positive")
    return Tolerance(abs_tol=args.tol, rank_rel_tol=args.rank_tol)


def _load_json(source: str):
    text = source
    if not source.lstrip().startswith(("{", "[")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc


def _is_family(payload) -> bool:
    return isinstance(payload, dict) and "operators" in payload


def _family_operators(payload):
    ops = payload.get("operators")
    if not isinstance(ops, list) or not ops:
        raise InputError("family JSON needs a nonempty 'operators' list")
    return [serialize.matrix_from_json(o) for o in ops]


def cmd_analyze(payload, args):
    tol = _tolerance(args)
    if _is_family(payload):
        ops = _family_operators(payload)
        reports = [pisometry.is_power_partial_isometry(T, tol) for T in ops]
        violations = pisometry.is_star_commuting_family(ops, tol)
        ok = all(r.verdict for r in reports) and not violations
        report = {
            "operators": [serialize.defect_report_to_json(r) for r in reports],
            "star_violations": serialize.violations_to_json(violations),
            "verdict": ok,
        }
        text = (
            f"star-commuting power partial isometries: {ok} "
            f"({len(violations)} violating pairs)"
        )
    else:
        T = serialize.matrix_from_json(payload)
        r = pisometry.is_power_partial_isometry(T, tol)
        ok = r.verdict
        report = serialize.defect_report_to_json(r)
        text = (
            f"power partial isometry: {ok} "
            f"(worst defect {max(r.per_power_defect):.3e} at power {r.worst_power})"
        )
    return (EXIT_OK if ok else EXIT_VERDICT), report, text


def cmd_decompose(payload, args):
    tol = _tolerance(args)
    T = serialize.matrix_from_json(payload)
    dec = canonical.decompose(T, tol)
    report = serialize.decomposition_to_json(dec)
    text = (
        f"H_u dim {dec.dim_u}, blocks {list(dec.blocks)}, "
        f"residual {dec.residual:.3e}"
    )
    return EXIT_OK, report, text


def cmd_decompose_family(payload, args):
    tol = _tolerance(args)
    ops = _family_operators(payload)
    fd = family.decompose_family(ops, tol)
    report = serialize.family_to_json(fd)
    summary = [
        ([serialize.label_to_json(l) for l in s.index], s.mult_dim)
        for s in fd.summands
    ]
    text = f"summands {summary}, max residual {max(fd.residuals):.3e}"
    return EXIT_OK, report, text


def cmd_orbit_classify(payload, args):
    tol = _tolerance(args)
    f = serialize.injection_from_json(payload)
    problems = orbits.validate(f)
    if problems:
        raise InputError("invalid partial injection: " + "; ".join(problems))
    sig = orbits.classify_orbits(f)
    report = serialize.signature_to_json(sig)
    if args.cross_check:
        if not sig.is_finite:
            raise InputError("--cross-check requires a flag-free graph")
        if f.node_count == 0:
            report["cross_check"] = "ok"
        else:
            dec = canonical.decompose(orbits.to_matrix(f), tol)
            if not orbits.signatures_match(sig, orbits.signature_of_decomposition(dec)):
                # Reserved failure path: the exact and numerical backends disagree.
                return (
                    EXIT_INTERNAL,
                    {"error": "cross-check mismatch", "signature": report},
                    "cross-check mismatch",
                )
            report["cross_check"] = "ok"
    text = (
        f"cycles {list(sig.u_cycles)}, lines {sig.u_lines}, "
        f"s {sig.s_count}, b {sig.b_count}, chains {list(sig.chains)}"
    )
    return EXIT_OK, report, text


def cmd_plant(payload, args):
    if isinstance(payload, dict) and "summands" in payload:
        spec = serialize.family_plant_spec_from_json(payload)
        if args.seed is not None:
            spec = type(spec)(M=spec.M, summands=spec.summands, seed=args.seed)
        ops, truth = plant_family(spec)
        report = {
            "operators": [serialize.matrix_to_json(T) for T in ops],
            "truth": serialize.family_to_json(truth),
        }
        text = f"planted family of {spec.M} operators, dim {spec.total_dim}"
    else:
        spec = serialize.plant_spec_from_json(payload)
        if args.seed is not None:
            spec = type(spec)(dim_u=spec.dim_u, mults=spec.mults, seed=args.seed)
        T, truth = plant_single(spec)
        report = {
            "operator": serialize.matrix_to_json(T),
            "truth": serialize.decomposition_to_json(truth),
        }
        text = f"planted operator of dim {spec.total_dim}, blocks {list(spec.blocks())}"
    return EXIT_OK, report, text


def cmd_verify(payload, args):
    tol = _tolerance(args)
    if not isinstance(payload, dict) or "decomposition" not in payload:
        raise InputError("verify expects {'operator(s)': .., 'decomposition': ..}")
    if "operators" in payload:
        ops = _family_operators(payload)
        fd = serialize.family_from_json(payload["decomposition"])
        rep = family.verify_family(ops, fd, tol)
        report = serialize.family_verification_to_json(rep)
        verdict = rep.verdict
    elif "operator" in payload:
        T = serialize.matrix_from_json(payload["operator"])
        dec = serialize.decomposition_from_json(payload["decomposition"])
        rep = canonical.verify(T, dec, tol)
        report = serialize.verification_to_json(rep)
        verdict = rep.verdict
    else:
        raise InputError("verify expects an 'operator' or 'operators' key")
    text = f"verify: {'pass' if verdict else 'fail'}"
    return (EXIT_OK if verdict else EXIT_VERDICT), report, text


_COMMANDS = {
    "analyze": cmd_analyze,
    "decompose": cmd_decompose,
    "decompose-family": cmd_decompose_family,
    "orbit-classify": cmd_orbit_classify,
    "plant": cmd_plant,
    "verify": cmd_verify,
}


def _run_one(command, source: str, args) -> tuple[int, dict, str]:
    """Run one command on one input, mapping errors to exit codes."""
    try:
        payload = _load_json(source)
        return _COMMANDS[command](payload, args)
    except InputError as exc:
        return EXIT_INPUT, {"error": str(exc)}, f"input error: {exc}"
    except PredicateError as exc:
        report = {"error": str(exc)}
        if isinstance(exc.report, pisometry.DefectReport):
            report["report"] = serialize.defect_report_to_json(exc.report)
        elif isinstance(exc.report, list):
            report["report"] = serialize.violations_to_json(exc.report)
        return EXIT_VERDICT, report, f"verdict failure: {exc}"
    except PPIDecompError as exc:
        return EXIT_INTERNAL, {"error": str(exc)}, f"internal failure: {exc}"


def _emit(args, code: int, report: dict, text: str) -> None:
    if args.format == "text":
        print(text)
    else:
        out = json.dumps(report, indent=2)
        if args.output:
            Path(args.output).write_text(out + "\n")
        else:
            print(out)
    if code != EXIT_OK:
        print(text, file=sys.stderr)


def _run_batch(command, directory: str, args) -> int:
    root = Path(directory)
    if not root.is_dir():
        print(f"batch target {directory} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    files = sorted(root.glob("*.json"))
    if not files:
        print(f"no *.json files under {directory}", file=sys.stderr)
        return EXIT_INPUT

    def work(path: Path):
        code, report, text = _run_one(command, str(path), args)
        return {"file": path.name, "exit_code": code, "report": report, "summary": text}

    with ThreadPoolExecutor() as pool:
        results = list(pool.map(work, files))
    print(json.dumps(results, indent=2))
    return max(r["exit_code"] for r in results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ppidecomp",
        description="Canonical decompositions of power partial isometries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("input", nargs="?", help="file path or inline JSON")
        p.add_argument("--batch", metavar="DIR", help="process every *.json in DIR")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--rank-tol", type=float, default=1e-10)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("-o", "--output", default=None)
        p.add_argument(
            "--cross-check",
            action="store_true",
            help="orbit-classify only: compare against the matrix backend",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.batch:
        return _run_batch(args.command, args.batch, args)
    if args.input is None:
        print("an input (or --batch DIR) is required", file=sys.stderr)
        return EXIT_INPUT
    code, report, text = _run_one(args.command, args.input, args)
    _emit(args, code, report, text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
