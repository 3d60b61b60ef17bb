"""Command-line front end: JSON in, JSON report out.

Exit codes: 0 certified or success, 2 refuted (report carries a witness),
3 not refuted or undetermined, 1 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext
from typing import Optional

import numpy as np

from . import generators as gen
from . import scalar_geometry as sg
from .block_toeplitz import BlockOp
from .classify import (
    ClassReport,
    Verdict,
    gamma_contraction_certificate,
    is_gamma_isometry,
    is_gamma_unitary,
    is_p_isometry,
    is_p_unitary,
    is_spherical,
    p_contraction_certificate,
    vn_falsify,
)
from .decompose import (
    InternalInconsistency,
    NoSolution,
    canonical_p,
    fundamental_operator,
    solve_sigma,
    wold_isometry,
    wold_p_isometry,
)
from .dilate import DilationData, penta_dilation, schaffer, solve_f1f2
from .jsonio import SchemaError, decode_operator, decode_ops, decode_triple, dumps, to_jsonable
from .linalg_core import TOL, CommutingTriple

EXIT_OK, EXIT_INPUT, EXIT_REFUTED, EXIT_UNDETERMINED = 0, 1, 2, 3
_CODE_VERDICT = {EXIT_OK: "Certified", EXIT_REFUTED: "Refuted", EXIT_UNDETERMINED: "NotRefuted"}
_VERDICT_EXIT = {Verdict.CERTIFIED: EXIT_OK, Verdict.REFUTED: EXIT_REFUTED, Verdict.NOT_REFUTED: EXIT_UNDETERMINED}

CLASSIFY_KINDS = (
    "p-contraction",
    "p-unitary",
    "p-isometry",
    "gamma-contraction",
    "gamma-unitary",
    "gamma-isometry",
    "spherical-unitary",
    "spherical-isometry",
    "spherical-contraction",
    "row-contraction",
)
SAMPLE_CLASSES = ("penta-point", "b-penta-point", "p-unitary", "p-isometry", "gamma-contraction", "p-contraction-normal")


class InputError(Exception):
    pass


def _report(report: ClassReport, **extra) -> dict:
    out = {
        "verdict": report.verdict.value,
        "residuals": report.residuals,
        "details": report.details,
    }
    if report.witness is not None:
        out["witness"] = report.witness
    out.update(extra)
    return out


def _pair(obj: dict) -> list:
    return decode_ops(obj, ("S", "P"))


def _spherical_ops(obj: dict) -> list:
    if "ops" in obj:
        ops = [decode_operator(x) for x in obj["ops"]]
        if not ops:
            raise SchemaError("ops must be non-empty")
        return ops
    A, S, _ = decode_triple(obj)
    return [A, S * 0.5]


# commands


def cmd_classify(args, obj) -> tuple:
    kind = args.kind
    tol = args.tol
    if kind.startswith("gamma"):
        S, P = _pair(obj)
        if kind == "gamma-contraction":
            rep = gamma_contraction_certificate(S, P, tol)
        elif kind == "gamma-unitary":
            rep = is_gamma_unitary(S, P, tol, args.levels)
        else:
            rep = is_gamma_isometry(S, P, tol, args.levels)
    elif kind.startswith("spherical") or kind == "row-contraction":
        sk = "row_contraction" if kind == "row-contraction" else kind.split("-", 1)[1]
        rep = is_spherical(sk, _spherical_ops(obj), tol, args.levels)
    else:
        triple = decode_triple(obj)
        if kind == "p-unitary":
            rep = is_p_unitary(triple, tol, args.levels)
        elif kind == "p-isometry":
            rep = is_p_isometry(triple, tol, args.levels)
        else:
            if isinstance(triple[0], BlockOp):
                raise InputError("p-contraction classification works on matrices")
            rep = p_contraction_certificate(triple, tol, falsify_budget=args.trials, degree=args.degree, seed=args.seed)
    return _VERDICT_EXIT[rep.verdict], _report(rep, kind=kind)


def _decomposition_json(dec) -> dict:
    out = {
        "dims": {"unitary": dec.part_u.dim, "rest": dec.part_c.dim},
        "part_u": dec.part_u,
        "part_c": dec.part_c,
        "restricted_u": dec.restricted_u,
        "certificates": {k: _report(v) for k, v in dec.certificates.items()},
        "reducing_residual": dec.reducing_residual,
        "approximate": dec.approximate,
    }
    if dec.restricted_c is not None:
        out["restricted_c"] = dec.restricted_c
    if dec.window_levels is not None:
        out["window_levels"] = dec.window_levels
    return out


def cmd_decompose(args, obj) -> tuple:
    tol = args.tol
    if "V" in obj:
        V = decode_operator(obj["V"])
        return EXIT_OK, {"decomposition": _decomposition_json(wold_isometry(V, tol, args.levels))}
    triple = decode_triple(obj)
    if isinstance(triple[0], BlockOp):
        t = CommutingTriple(*triple, tol=tol)
        rep = is_p_isometry(t, tol, args.levels)
        if rep.refuted:
            return EXIT_REFUTED, {"precondition": _report(rep, kind="p-isometry")}
        dec = wold_p_isometry(t, tol, args.levels, seed=args.seed)
        return EXIT_OK, {"decomposition": _decomposition_json(dec)}
    t = CommutingTriple(*triple, tol=tol)
    rep = p_contraction_certificate(t, tol, falsify_budget=args.trials, degree=args.degree, seed=args.seed)
    if rep.refuted:
        return EXIT_REFUTED, {"precondition": _report(rep, kind="p-contraction")}
    dec = canonical_p(t, tol, seed=args.seed)
    return EXIT_OK, {"precondition": _report(rep, kind="p-contraction"), "decomposition": _decomposition_json(dec)}


def _dilation_data(obj: dict, fo) -> Optional[DilationData]:
    d = obj.get("data")
    if d is None:
        return None
    coords = d.get("coords", "ambient")
    if "F1" in d:
        F1, F2 = decode_operator(d["F1"]), decode_operator(d["F2"])
        if coords == "ambient":
            return DilationData.from_ambient(F1, F2, fo.defect.basis)
        return DilationData(F1=F1, F2=F2)
    if coords != "defect":
        raise InputError("sequence data must be given in defect coordinates (coords: defect)")
    return DilationData(X1=[decode_operator(x) for x in d.get("X1", [])], Xn=[decode_operator(x) for x in d.get("Xn", [])])


def cmd_dilate(args, obj) -> tuple:
    tol = args.tol
    if args.kind == "schaffer":
        S, P = _pair(obj) if "A" not in obj else decode_triple(obj)[1:]
        sch = schaffer(S, P, tol, levels=args.levels)
        exact = max(v for k, v in sch.report.items() if k not in ("omega(F)", "fundamental residual")) <= 1e-9
        out = {
            "T_F": sch.T_F,
            "V0": sch.V0,
            "report": sch.report,
            "gamma_isometry": _report(sch.gamma_isometry),
        }
        return (EXIT_OK if exact else EXIT_REFUTED), out
    A, S, P = decode_triple(obj)
    sigma = solve_sigma((A, S, P), tol)
    out = {"solve_sigma": {"solvable": sigma.solvable, "psd": sigma.psd, "margins": sigma.margins}}
    if not sigma.solvable:
        out["reason"] = "the Sigma equation has no solution, so no admissible data exists"
        return EXIT_REFUTED, out
    fo = fundamental_operator(S, P, tol)
    data = _dilation_data(obj, fo)
    if data is None:
        data = solve_f1f2((A, S, P), tol, seed=args.seed)
        out["data_source"] = "search"
        if data is None:
            out["reason"] = "no admissible (F1, F2) found within the search budget"
            return EXIT_UNDETERMINED, out
    else:
        out["data_source"] = "input"
    res = penta_dilation((A, S, P), data, degree=args.degree, tol=tol)
    out.update(
        {
            "X": res.X,
            "T_F": res.T_F,
            "V0": res.V0,
            "conditions": res.conditions,
            "report": res.report,
            "monomial_check": res.monomial_check,
            "p_isometry": _report(res.certificate),
            "passed": res.passed,
            "failed": res.failed,
        }
    )
    return (EXIT_OK if res.passed else EXIT_REFUTED), out


def cmd_fundop(args, obj) -> tuple:
    S, P = _pair(obj) if "A" not in obj else decode_triple(obj)[1:]
    try:
        fo = fundamental_operator(S, P, args.tol)
    except NoSolution as exc:
        return EXIT_REFUTED, {"solvable": False, "residual": exc.residual}
    return EXIT_OK, {
        "solvable": True,
        "F": fo.F,
        "F_ambient": fo.ambient(),
        "defect_basis": fo.defect.basis,
        "residual": fo.residual,
        "omega": fo.omega,
        "cross_residual": fo.cross_residual,
    }


def cmd_solve_sigma(args, obj) -> tuple:
    sol = solve_sigma(decode_triple(obj), args.tol)
    out = {"solvable": sol.solvable, "psd": sol.psd, "margins": sol.margins}
    if sol.solvable:
        out.update({"X": sol.X, "residual": sol.residual, "omega": sol.omega})
    return (EXIT_OK if sol.solvable else EXIT_REFUTED), out


def cmd_falsify(args, obj) -> tuple:
    triple = decode_triple(obj)
    if isinstance(triple[0], BlockOp):
        raise InputError("falsify works on matrices")
    hit = vn_falsify(triple, degree=args.degree, trials=args.trials, seed=args.seed)
    if hit is None:
        return EXIT_UNDETERMINED, {"witness": None}
    return EXIT_REFUTED, {"witness": hit}


def sample_instances(cls: str, count: int, dim: int, seed: int, tol: float = TOL) -> list:
    """Instances of ``cls`` that pass their own classifier."""
    if cls not in SAMPLE_CLASSES:
        raise InputError(f"unknown sample class {cls!r}; expected one of {', '.join(SAMPLE_CLASSES)}")
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        if cls in ("penta-point", "b-penta-point"):
            pt = sg.sample("penta" if cls == "penta-point" else "b_penta", rng)
            check = sg.in_pentablock_closed if cls == "penta-point" else sg.in_b_pentablock
            if bool(check(pt, 1e-12)):
                out.append({"a": complex(pt.a), "s": complex(pt.s), "p": complex(pt.p)})
            continue
        if cls == "p-unitary":
            t = gen.p_unitary(dim, rng)
            ok = is_p_unitary(t, 1e-8).certified
        elif cls == "p-contraction-normal":
            t = gen.normal_p_contraction(dim, rng)
            ok = p_contraction_certificate(t, 1e-8).certified
        elif cls == "p-isometry":
            t = gen.mixed_p_isometry(int(rng.integers(0, dim)), max(1, dim), rng).triple
            ok = is_p_isometry(t, 1e-10).certified
        else:
            S, P = gen.gamma_contraction(dim, rng)
            ok = not gamma_contraction_certificate(S, P, 1e-8).refuted
            t = {"S": S, "P": P}
        if ok:
            out.append(t)
    return out


def cmd_sample(args, obj) -> tuple:
    return EXIT_OK, {"class": args.cls, "instances": sample_instances(args.cls, args.count, args.dim, args.seed, args.tol)}


COMMANDS = {
    "classify": cmd_classify,
    "decompose": cmd_decompose,
    "dilate": cmd_dilate,
    "fundop": cmd_fundop,
    "solve-sigma": cmd_solve_sigma,
    "falsify": cmd_falsify,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=TOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--degree", type=int, default=None)
    common.add_argument("--trials", type=int, default=50)
    common.add_argument("--levels", type=int, default=8, help="BlockOp window in levels")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")

    inp = argparse.ArgumentParser(add_help=False)
    inp.add_argument("input", nargs="?", default=None, help="JSON file, or - for stdin")
    inp.add_argument("--json", dest="inline", default=None, help="inline JSON input")

    parser = argparse.ArgumentParser(prog="pentablock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("classify", parents=[common, inp])
    p.add_argument("--kind", choices=CLASSIFY_KINDS, default="p-contraction")
    sub.add_parser("decompose", parents=[common, inp])
    p = sub.add_parser("dilate", parents=[common, inp])
    p.add_argument("--kind", choices=("penta", "schaffer"), default="penta")
    sub.add_parser("fundop", parents=[common, inp])
    sub.add_parser("solve-sigma", parents=[common, inp])
    sub.add_parser("falsify", parents=[common, inp])
    p = sub.add_parser("sample", parents=[common])
    p.add_argument("cls", metavar="class")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dim", type=int, default=3)
    return parser


def _load(args) -> dict:
    if args.inline is not None:
        text, where = args.inline, "--json"
    elif args.input in (None, "-"):
        text, where = sys.stdin.read(), "stdin"
    else:
        try:
            with open(args.input, encoding="utf-8") as fh:
                text, where = fh.read(), args.input
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {where} at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise InputError("top-level JSON value must be an object")
    return obj


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.degree is None:
        args.degree = 5 if args.command == "dilate" else 4
    if args.command == "sample" and args.cls not in SAMPLE_CLASSES:
        print(f"error: unknown sample class {args.cls!r}; expected one of {', '.join(SAMPLE_CLASSES)}", file=sys.stderr)
        return EXIT_INPUT
    limit = nullcontext()
    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limit = threadpool_limits(limits=args.threads)
    try:
        with limit:
            obj = {} if args.command == "sample" else _load(args)
            code, body = COMMANDS[args.command](args, obj)
    except (InputError, SchemaError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalInconsistency as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    report = {"command": args.command, **to_jsonable(body)}
    if args.command != "sample":
        report.setdefault("verdict", _CODE_VERDICT[code])
    text = dumps(report) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    try:
        sys.exit(run())
    except BrokenPipeError:
        sys.stderr.close()
        sys.exit(EXIT_INPUT)
