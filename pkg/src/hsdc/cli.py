"""Command-line front end.

Input is one JSON document::

    {"matrices": [[[1, 0], [0, 2]], ...], "tolerances": {"pd_tol": 1e-8}, "labels": [...]}

with complex entries written as [re, im]. Exit status: 0 when the command
ran (the verdict is in the output), 2 for unreadable or invalid input, 3
for a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings

import numpy as np

from .core import MatrixFamily, Tolerances
from .detect import pencil_max_rank
from .errors import InputError, NumericalError, SDCError
from .jacobi import joint_diagonalize
from .solver import detect, random_sdc_family, solve

SCHEMA = "hsdc.report/1"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# --- encoding --------------------------------------------------------------------

def _entry(x):
    if isinstance(x, bool) or x is None:
        raise InputError(f"invalid matrix entry {x!r}")
    if isinstance(x, (int, float)):
        return x
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise InputError(f"invalid matrix entry {x!r}")


def decode_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("a matrix must be a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError("ragged matrix rows")
    vals = [[_entry(x) for x in r] for r in rows]
    cplx = any(isinstance(x, complex) for r in vals for x in r)
    return np.array(vals, dtype=complex if cplx else float)


def encode_matrix(a: np.ndarray) -> list:
    """Nested lists; floats keep their shortest round-trip repr."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return [[[float(z.real), float(z.imag)] for z in row] for row in a]
    return [[float(x) for x in row] for row in a]


def read_document(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "matrices" not in doc:
        raise InputError('the document must be an object with a "matrices" list')
    if not isinstance(doc["matrices"], list) or not doc["matrices"]:
        raise InputError('"matrices" must be a non-empty list')
    return doc


def _tolerances(doc: dict, args) -> Tolerances:
    values = dict(doc.get("tolerances") or {})
    for item in args.tol or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--tol expects KEY=VALUE, got {item!r}")
        values[key.strip()] = None if value.strip().lower() == "none" else value
    if args.seed is not None:
        values["rng_seed"] = args.seed
    if args.max_sweeps is not None:
        values["max_sweeps"] = args.max_sweeps
    try:
        return Tolerances.from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def load_family(path: str, args) -> tuple[MatrixFamily, Tolerances, dict]:
    doc = read_document(path)
    tol = _tolerances(doc, args)
    mats = [decode_matrix(m) for m in doc["matrices"]]
    return MatrixFamily.from_matrices(mats, tol), tol, doc


# --- output ------------------------------------------------------------------------

def _emit(payload: dict, args, lines: list[str]):
    if args.json:
        print(json.dumps({"schema": SCHEMA, **payload}))
    else:
        print("\n".join(lines))


def _write(path: str, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"schema": SCHEMA, **payload}, fh)
        fh.write("\n")


def _report_lines(report) -> list[str]:
    lines = [f"verdict: {report.verdict.value}", f"route: {report.route.value}", f"kernel dimension: {report.q}"]
    if report.max_rank is not None:
        lines.append(f"max rank: {report.max_rank} ({report.rank_method})")
    if report.witness is not None:
        lines.append("witness: " + " ".join(f"{x:.6g}" for x in report.witness))
    lines += [f"reason: {r}" for r in report.reasons]
    lines += [f"note: {n}" for n in report.notes]
    return lines


# --- commands ------------------------------------------------------------------------

def cmd_detect(args) -> int:
    F, tol, _ = load_family(args.file, args)
    report = detect(F, tol, route=args.route)
    _emit({"command": "detect", "report": report.to_dict()}, args, _report_lines(report))
    return EXIT_OK


def cmd_diagonalize(args) -> int:
    F, tol, _ = load_family(args.file, args)
    out = solve(F, tol, route=args.route)
    payload = {"command": "diagonalize", "report": out.detect.to_dict(), "timings": out.timings}
    lines = _report_lines(out.detect)
    if out.result is not None:
        res = out.result
        payload.update(backward_error=res.backward_error, transform=encode_matrix(res.transform), diagonals=encode_matrix(res.diagonals))
        lines.append(f"backward error: {res.backward_error:.3e}")
        if args.out:
            _write(args.out, {"transform": payload["transform"], "diagonals": payload["diagonals"], "backward_error": res.backward_error})
            lines.append(f"wrote {args.out}")
    _emit(payload, args, lines)
    return EXIT_OK


def cmd_jointdiag(args) -> int:
    F, tol, _ = load_family(args.file, args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = joint_diagonalize(F, tol)
    notes = [str(w.message) for w in caught]
    payload = {
        "command": "jointdiag",
        "U": encode_matrix(res.U),
        "diagonals": encode_matrix(res.diagonals),
        "final_off2": float(res.final_off2),
        "off2_history": [float(x) for x in res.off2_history],
        "sweeps": res.sweeps,
        "converged": bool(res.converged),
        "stop_reason": res.stop_reason,
        "notes": notes,
    }
    lines = [f"off2: {res.final_off2:.3e} after {res.sweeps} sweeps ({res.stop_reason})"] + [f"note: {n}" for n in notes]
    if args.out:
        _write(args.out, {"U": payload["U"], "diagonals": payload["diagonals"]})
        lines.append(f"wrote {args.out}")
    _emit(payload, args, lines)
    return EXIT_OK


def cmd_maxrank(args) -> int:
    F, tol, _ = load_family(args.file, args)
    r, lam, method, trace = pencil_max_rank(F, tol, "numeric" if args.numeric else "auto")
    names = [f"x{i + 1}" for i in range(F.m)]
    ds = [d.render(names) for d in trace.ds] if trace is not None else []
    payload = {"command": "maxrank", "max_rank": r, "witness": [float(x) for x in lam], "method": method, "d": ds}
    lines = [f"max rank: {r} ({method})", "witness: " + " ".join(f"{float(x):.6g}" for x in lam)]
    lines += [f"d{j + 1} = {s}" for j, s in enumerate(ds)]
    _emit(payload, args, lines)
    return EXIT_OK


def _parse_size(text: str) -> tuple[int, int]:
    try:
        m, n = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise InputError(f"sizes are written MxN, got {text!r}") from exc
    if m < 1 or n < 1:
        raise InputError(f"sizes must be positive, got {text!r}")
    return m, n


def cmd_bench(args) -> int:
    tol = _tolerances({}, args)
    seed0 = 0 if args.seed is None else args.seed
    rows = []
    for m, n in (_parse_size(s) for s in args.sizes):
        errs, times = [], []
        for rep in range(args.repetitions):
            F, _, _ = random_sdc_family(n, m, seed0 + rep, complex_=args.complex)
            start = time.perf_counter()
            out = solve(F, tol, route=args.route)
            times.append(time.perf_counter() - start)
            errs.append(out.result.backward_error if out.result is not None else float("nan"))
        rows.append({"m": m, "n": n, "err": float(np.mean(errs)), "seconds": float(np.mean(times)), "repetitions": args.repetitions})
    lines = [f"{'m':>4} {'n':>4} {'Err':>10} {'time(s)':>9}"]
    lines += [f"{r['m']:>4} {r['n']:>4} {r['err']:>10.2e} {r['seconds']:>9.3f}" for r in rows]
    _emit({"command": "bench", "rows": rows}, args, lines)
    return EXIT_OK


# --- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--route", choices=["sdp", "pencil", "both"], default="sdp")
    common.add_argument("--tol", action="append", metavar="KEY=VALUE", help="override a tolerance (repeatable)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out", metavar="PATH", help="write the computed matrices here")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--max-sweeps", type=int, default=None)

    parser = argparse.ArgumentParser(prog="hsdc", description="Simultaneous diagonalization of Hermitian matrices by *-congruence.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, help_ in [
        ("detect", cmd_detect, "decide whether the family is SDC"),
        ("diagonalize", cmd_diagonalize, "compute the congruence and diagonals"),
        ("jointdiag", cmd_jointdiag, "unitary joint diagonalization of a commuting family"),
        ("maxrank", cmd_maxrank, "maximum rank of the Hermitian pencil"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("file", help="input JSON document, or - for stdin")
        if name == "maxrank":
            p.add_argument("--numeric", action="store_true", help="random sampling instead of the exact reduction")
        p.set_defaults(func=func)
    p = sub.add_parser("bench", parents=[common], help="random SDC families, averaged backward error")
    p.add_argument("--sizes", nargs="+", default=["3x3", "10x20"], metavar="MxN", help="m matrices of size n")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--complex", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        stage = getattr(exc, "stage", None)
        print(f"numerical failure{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SDCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
