"""Command-line entry point ``medialmap``.

Subcommands: ``edt`` (squared distance field), ``mam`` (medial axis map,
optional threshold mask and rendering) and ``verify`` (acceptance suites).

Exit codes: 0 ok, 1 verification failure, 2 unparsable input, 3 empty set,
4 bad parameter.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .edt import edt_mask, edt_points
from .fields import EmptySetError, GridSpec
from .fileio import (FormatError, mask_from_pgm, read_points_csv, render_pgm, write_field,
                     write_mask_pgm)
from .lowtrans import BackendKind, EnvelopeNotConverged, LowerTransformBackend
from .mam import MamParams, mam_field, suplevel_mask
from .report import all_passed
from .suites import SUITES, run_suite

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_EMPTY, EXIT_PARAM = 0, 1, 2, 3, 4

# JSON schema of the ``verify --report`` file.
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["suite", "seed", "passed", "checks"],
    "additionalProperties": False,
    "properties": {
        "suite": {"enum": list(SUITES)},
        "seed": {"type": "integer", "minimum": 0},
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "measured", "bound", "relation", "slack", "passed"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "measured": {"type": ["number", "null"]},
                    "bound": {"type": ["number", "null"]},
                    "relation": {"enum": ["<=", ">="]},
                    "slack": {"type": ["number", "null"]},
                    "passed": {"type": "boolean"},
                    "details": {"type": "object"},
                },
            },
        },
    },
}


class ParamError(ValueError):
    """A parameter outside its domain."""


def parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 5:
        raise FormatError(f"--grid expects 'x0,y0,h,nx,ny', got {text!r}")
    try:
        x0, y0, h = (float(p) for p in parts[:3])
        nx, ny = (int(p) for p in parts[3:])
    except ValueError:
        raise FormatError(f"--grid: cannot parse {text!r}") from None
    try:
        return GridSpec(x0, y0, h, nx, ny)
    except ValueError as exc:
        raise ParamError(f"--grid: {exc}") from None


def _load_set(path: str, grid: str | None):
    """A point set (CSV, needs --grid) or a mask (PGM, grid optional)."""
    spec = parse_grid(grid) if grid else None
    if path.lower().endswith(".pgm"):
        mask = mask_from_pgm(path, spec)
        return mask, mask.spec
    if spec is None:
        raise ParamError("point input needs --grid x0,y0,h,nx,ny")
    return read_points_csv(path), spec


def _threads(n: int) -> int:
    if n < 1:
        raise ParamError(f"--threads must be >= 1, got {n}")
    return n


def cmd_edt(args) -> int:
    k, spec = _load_set(args.input, args.grid)
    threads = _threads(args.threads)
    if hasattr(k, "bits"):
        field = edt_mask(k, threads)
    else:
        field = edt_points(k, spec)
    write_field(args.out, field)
    return EXIT_OK


def cmd_mam(args) -> int:
    lam = args.lam
    if not (lam > 0 and math.isfinite(lam)):
        raise ParamError(f"--lambda must be > 0, got {lam}")
    if args.tol is not None and not args.tol > 0:
        raise ParamError(f"--tol must be > 0, got {args.tol}")
    if args.threshold is not None and not math.isfinite(args.threshold):
        raise ParamError("--threshold must be finite")
    if args.out_mask and args.threshold is None:
        raise ParamError("--out-mask needs --threshold")
    backend = LowerTransformBackend(BackendKind(args.backend), tol=args.tol, threads=_threads(args.threads))
    k, spec = _load_set(args.input, args.grid)
    res = mam_field(k, spec, MamParams(lam, backend))
    write_field(args.out, res.m_field)
    if args.out_mask:
        write_mask_pgm(args.out_mask, suplevel_mask(res.m_field, args.threshold))
    if args.render:
        render_pgm(args.render, res.m_field)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.seed < 0:
        raise ParamError("--seed must be >= 0")
    iterative = None
    if args.iterative_tol is not None:
        if not args.iterative_tol > 0:
            raise ParamError("--iterative-tol must be > 0")
        iterative = LowerTransformBackend(BackendKind.ITERATIVE, tol=args.iterative_tol)
    checks = run_suite(args.suite, args.seed, iterative=iterative)
    for c in checks:
        print(c.line())
    ok = all_passed(checks)
    if args.report:
        report = {"suite": args.suite, "seed": args.seed, "passed": ok,
                  "checks": [c.to_json() for c in checks]}
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n")
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'} "
          f"({sum(c.passed for c in checks)}/{len(checks)} checks)")
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="medialmap", description="Multiscale medial axis maps on grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    def inputs(p):
        p.add_argument("input", help="points.csv (x,y per line) or mask.pgm (nonzero = member)")
        p.add_argument("--grid", help="x0,y0,h,nx,ny (required for CSV; PGM defaults to 0,0,1,w,h)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--out", required=True, help="output MMAF1 field file")

    p = sub.add_parser("edt", help="squared distance field")
    inputs(p)
    p.set_defaults(func=cmd_edt)

    p = sub.add_parser("mam", help="medial axis map")
    inputs(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--backend", choices=[b.value for b in BackendKind], default="opening")
    p.add_argument("--tol", type=float, help="iterative backend convergence tolerance")
    p.add_argument("--threshold", type=float, help="suplevel threshold for --out-mask")
    p.add_argument("--out-mask", help="PGM mask of {M >= threshold}")
    p.add_argument("--render", help="8-bit PGM rendering (range in <file>.json)")
    p.set_defaults(func=cmd_mam)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--iterative-tol", type=float, help="override the iterative backend tolerance")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)     # usage errors exit with 2
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EmptySetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ParamError, EnvelopeNotConverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
