"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  Errors are
written to stderr as one JSON object ``{"error": kind, "message": ...}``.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core_algebra import Mesh, as_number
from .gramian_frame import FrameError, build_frame, import_frame, save_frame, verify_frame_axioms
from .limits import DivergentSchemeError, cascade_eval
from .linalg import SingularSystemError
from .regularity import regularity_report
from .schemes import KERNELS, Scheme, SchemeError, build_bspline, build_dd, build_rbf, check_scheme, get_kernel

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
DATA_ENV = "HOLZYG_DATA"


class UsageError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument helpers


def parse_rows(text: str) -> list[int]:
    """``"A..B"`` (inclusive) or a comma list ``"-2,0,3"``."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
            if hi < lo:
                raise UsageError(f"empty row range {text!r}")
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse rows {text!r}; use A..B or a comma list") from None


def _spacing(text: str):
    try:
        h = as_number(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid mesh spacing {text!r}") from None
    if not h > 0:
        raise UsageError(f"mesh spacing must be positive, got {text!r}")
    return h


def _mesh(args) -> Mesh:
    return Mesh(_spacing(args.hl), _spacing(args.hr))


def _positive(name: str, value, minimum: int = 1) -> int:
    if value is None:
        raise UsageError(f"--{name} is required")
    if value < minimum:
        raise UsageError(f"--{name} must be at least {minimum}, got {value}")
    return value


def _resolve(path: str) -> Path:
    """Existing path, else the same name under ``$HOLZYG_DATA``."""
    p = Path(path)
    if p.exists():
        return p
    root = os.environ.get(DATA_ENV)
    if root and (Path(root) / path).exists():
        return Path(root) / path
    raise UsageError(f"file not found: {path}")


def _load_json(path: str) -> dict:
    p = _resolve(path)
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: not valid JSON ({exc})") from None


def _load_scheme(path: str) -> Scheme:
    try:
        return Scheme.from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"{path}: malformed scheme file ({exc})") from None


def _load_frame(path: str, tol: float = 1e-6):
    obj = _load_json(path)
    try:
        return import_frame(obj, tol=tol)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: malformed frame file ({exc})") from None


def _dump(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    # repr of a float is the shortest string that round-trips
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands


def cmd_scheme_build(args) -> int:
    mesh = _mesh(args)
    fam = args.family
    if fam == "bspline":
        if args.L is not None or args.kernel is not None or args.m is not None:
            raise UsageError("bspline takes --degree only")
        s = build_bspline(mesh, _positive("degree", args.degree))
    elif fam == "dd":
        if args.degree is not None or args.kernel is not None or args.m is not None:
            raise UsageError("dd takes --L only")
        s = build_dd(mesh, _positive("L", args.L))
    else:
        if args.degree is not None:
            raise UsageError("rbf does not take --degree")
        if args.kernel is None:
            raise UsageError("rbf needs --kernel")
        L = _positive("L", args.L)
        m = _positive("m", args.m)
        params = {} if args.p is None else {"p": args.p}
        try:
            kernel = get_kernel(args.kernel, **params)
        except (SchemeError, TypeError) as exc:
            raise UsageError(str(exc)) from None
        if not max(kernel.eta, 1) <= m <= 2 * L:
            raise UsageError(f"need max(eta, 1) <= m <= 2L; kernel {kernel.name} has eta={kernel.eta}")
        s = build_rbf(mesh, kernel, L, m)
    _dump(s.to_json(), args.out)
    return EXIT_OK


def cmd_scheme_check(args) -> int:
    rep = check_scheme(_load_scheme(args.file))
    _dump(rep.to_json(), None)
    if not rep.ok:
        raise NumericalFailure(f"scheme check failed: {json.dumps(rep.to_json(), sort_keys=True)}")
    return EXIT_OK


def cmd_frame_build(args) -> int:
    mesh = _mesh(args)
    if args.family != "dd":
        raise UsageError("only the dd frame family is supported")
    L = _positive("L", args.L, 2)
    ps = build_dd(mesh, L)
    if args.import_file:
        F = _load_frame(args.import_file)
        if F.scheme.params.get("L") != L or F.scheme.mesh != mesh:
            raise UsageError("imported frame does not match --L/--hl/--hr")
    else:
        F = build_frame(ps, v=args.v, smoothness=args.smoothness)
    if args.out:
        save_frame(F, args.out)
    else:
        _dump(F.to_json(), None)
    return EXIT_OK


def cmd_frame_verify(args) -> int:
    F = _load_frame(args.file, tol=1e-6)
    test = _load_scheme(args.test_scheme) if args.test_scheme else build_bspline(F.scheme.mesh, 2)
    J = _positive("levels", args.levels)
    rep = verify_frame_axioms(F, j_max=J, test_scheme=test, test_index=args.test_index, parseval_levels=J)
    _dump(_jsonable(rep), args.out)
    if not rep["ok"]:
        raise NumericalFailure("frame axioms violated")
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def cmd_analyze(args) -> int:
    n_max = _positive("levels", args.levels)
    rows = parse_rows(args.rows)
    zs = _load_scheme(args.scheme)
    F = _load_frame(args.frame)
    rep = regularity_report(zs, F, rows, n_max, s=args.smoothness)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(rep.dumps())
    for key, stem in (("r_n", "r_n"), ("r_star_n", "r_star_n"), ("gamma", "gamma")):
        (out / f"{stem}.csv").write_text(rep.table(key))
        if key != "gamma":
            (out / f"{stem}_4dp.csv").write_text(rep.table(key, 4))
    sys.stdout.write(rep.table("r_star_n", 4))
    return EXIT_OK


def cmd_limits_eval(args) -> int:
    J = args.level
    if J is None or J < 0:
        raise UsageError("--level must be a non-negative integer")
    rows = parse_rows(args.rows)
    s = _load_scheme(args.scheme)
    samples = [cascade_eval(s, i, J) for i in rows]
    lo = min(f.start for f in samples)
    hi = max(f.start + len(f.values) for f in samples)
    x = s.mesh.level_points(lo, hi, J)
    cols = [f.aligned(lo, hi) for f in samples]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "x"] + [f"zeta_{i}" for i in rows])
        for r, m in enumerate(range(lo, hi)):
            w.writerow([m, _fmt(x[r])] + [_fmt(c[r]) for c in cols])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="holzyg", description="Regularity of semi-regular subdivision limits via tight wavelet frames.")
    p.add_argument("--config", help="JSON file whose keys override the command-line flags")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def mesh_flags(q):
        q.add_argument("--hl", default="1", help="left knot spacing (exact for integers and p/q)")
        q.add_argument("--hr", default="1", help="right knot spacing")

    sch = sub.add_parser("scheme", help="build or check subdivision schemes")
    ssub = sch.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = ssub.add_parser("build")
    b.add_argument("--family", required=True, choices=["bspline", "dd", "rbf"])
    b.add_argument("--degree", type=int)
    b.add_argument("--L", type=int)
    b.add_argument("--kernel", choices=sorted(KERNELS))
    b.add_argument("--m", type=int)
    b.add_argument("--p", type=int, help="polyharmonic power index (|x|^(2p+1))")
    mesh_flags(b)
    b.add_argument("--out")
    b.set_defaults(func=cmd_scheme_build)
    c = ssub.add_parser("check")
    c.add_argument("file")
    c.set_defaults(func=cmd_scheme_check)

    fr = sub.add_parser("frame", help="build or verify tight wavelet frames")
    fsub = fr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = fsub.add_parser("build")
    b.add_argument("--family", default="dd", choices=["dd"])
    b.add_argument("--L", type=int, required=True)
    mesh_flags(b)
    b.add_argument("--v", type=int, help="vanishing moments to enforce (default: maximal)")
    b.add_argument("--smoothness", type=float, help="Hoelder smoothness metadata s of the frame")
    b.add_argument("--import", dest="import_file", help="frame JSON to verify and adopt instead of building")
    b.add_argument("--out")
    b.set_defaults(func=cmd_frame_build)
    v = fsub.add_parser("verify")
    v.add_argument("file")
    v.add_argument("--levels", type=int, default=10, help="levels for support counts and the Parseval sum")
    v.add_argument("--test-scheme", help="scheme JSON for the Parseval check (default: quadratic B-spline)")
    v.add_argument("--test-index", type=int, default=-1)
    v.add_argument("--out")
    v.set_defaults(func=cmd_frame_verify)

    a = sub.add_parser("analyze", help="estimate Hoelder-Zygmund exponents")
    a.add_argument("--scheme", required=True)
    a.add_argument("--frame", required=True)
    a.add_argument("--rows", required=True, help="A..B or comma list")
    a.add_argument("--levels", type=int, required=True, help="largest estimator index n")
    a.add_argument("--smoothness", type=float, help="override the frame's smoothness metadata")
    a.add_argument("--out", required=True, help="output directory")
    a.set_defaults(func=cmd_analyze)

    lim = sub.add_parser("limits", help="sample basic limit functions")
    lsub = lim.add_subparsers(dest="action", required=True, parser_class=_Parser)
    e = lsub.add_parser("eval")
    e.add_argument("--scheme", required=True)
    e.add_argument("--rows", required=True)
    e.add_argument("--level", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_limits_eval)
    return p


def _glue_negative_values(argv: list[str]) -> list[str]:
    # "--rows -2..2" would otherwise be read as an option
    out, it = [], iter(argv)
    for a in it:
        if a in ("--rows", "--hl", "--hr"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def _apply_config(args, path: str) -> None:
    cfg = _load_json(path)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "action", "func", "config") or not hasattr(args, dest):
            raise UsageError(f"config key {key!r} is not a flag of this command")
        setattr(args, dest, val)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        if args.config:
            _apply_config(args, args.config)
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except (FrameError, DivergentSchemeError, SchemeError, SingularSystemError, NumericalFailure,
            np.linalg.LinAlgError) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_NUMERIC)
    except (ValueError, KeyError) as exc:
        return _fail("validation", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
