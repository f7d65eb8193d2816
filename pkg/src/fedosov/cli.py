"""Command line interface.

Subcommands: ``r`` (connection correction terms), ``extend`` (flat
section of a form), ``star`` (product of two forms), ``verify``
(invariant suites and the constant-comparison report), ``print``
(canonicalize an expression).

Output is deterministic: identical inputs produce byte-identical
output in both text and json formats.  Exit status: 0 on success, 1
when an invariant fails, 2 on usage, parse, or validation errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .algebra import INF
from .engine import (
    CentralObstructionError,
    EngineConsistencyError,
    NotClosedError,
    OrderError,
    abelian_connection,
    flat_extension,
    star,
)
from .expressions import ParseError, format_element, format_form_series, parse_form_series
from .geometry import GeometryError, load_geometry
from .verify import run_all

__all__ = ["main"]


def _window_text(w) -> str:
    if w == INF:
        return "all"
    return str(int(w)) if w >= 0 else "none"


def _vo_json(v):
    return None if v == INF else int(v)


def _emit(args, doc: dict, text_lines: list[str]) -> None:
    if args.format == "json":
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


def _load(args):
    if not args.geometry:
        raise GeometryError("this command needs --geometry")
    geom = load_geometry(args.geometry)
    if args.jet is not None and args.jet != geom.J:
        raise GeometryError(
            f"--jet {args.jet} conflicts with the geometry file (J={geom.J})")
    return geom


def _inputs(args, *names) -> dict:
    return {k: getattr(args, k) for k in names if getattr(args, k) is not None}


def _cmd_r(args) -> int:
    geom = _load(args)
    conn = abelian_connection(geom, order=args.order)
    terms = [f"r[{k}] = {format_element(conn.r_parts[k])}"
             for k in sorted(conn.r_parts)]
    report = [{"name": f"base window at degree {d}", "status": "info",
               "detail": _window_text(conn.base_window(d))}
              for d in range(conn.order + 1)]
    lines = [f"abelian connection through filtration order {conn.order}"]
    lines += terms
    lines.append("jet windows: " + " ".join(
        f"{d}:{_window_text(conn.base_window(d))}" for d in range(conn.order + 1)))
    _emit(args, {"command": "r",
                 "inputs": _inputs(args, "geometry", "order"),
                 "validity_order": conn.order,
                 "terms": terms, "report": report}, lines)
    return 0


def _cmd_extend(args) -> int:
    geom = _load(args)
    conn = abelian_connection(geom, order=args.order)
    a = parse_form_series(args.form, geom.n, geom.J)
    A = flat_extension(a, conn)
    degrees = sorted({rec[8] for rec in A._decode()})
    terms = [f"degree {g}: {format_element(A.filt_component(g))}" for g in degrees]
    lines = [f"flat section of {format_form_series(a)}"]
    lines += terms
    vo = A.filt_valid
    lines.append(f"valid through filtration order: {_window_text(vo)}")
    _emit(args, {"command": "extend",
                 "inputs": _inputs(args, "geometry", "order", "form"),
                 "validity_order": _vo_json(vo),
                 "terms": terms, "report": []}, lines)
    return 0


def _cmd_star(args) -> int:
    geom = _load(args)
    conn = abelian_connection(geom, order=args.order)
    p = parse_form_series(args.p, geom.n, geom.J)
    q = parse_form_series(args.q, geom.n, geom.J)
    s = star(p, q, conn)
    n, J = geom.n, geom.J
    from .engine import FormSeries
    terms = [format_form_series(FormSeries.from_terms(n, J, [t])) for t in s.terms]
    hs = sorted({t[0] for t in s.terms})
    report = [{"name": f"hbar^{h} jet window", "status": "info",
               "detail": _window_text(s.base_window(h))} for h in hs]
    lines = [format_form_series(s)]
    lines.append(f"validity order: {_window_text(s.validity_order)}")
    if hs:
        lines.append("jet windows: " + " ".join(
            f"h^{h}:{_window_text(s.base_window(h))}" for h in hs))
    _emit(args, {"command": "star",
                 "inputs": _inputs(args, "geometry", "order", "p", "q"),
                 "validity_order": _vo_json(s.validity_order),
                 "terms": terms, "report": report}, lines)
    return 0


def _cmd_verify(args) -> int:
    geom = _load(args)
    rows = run_all(geom, order=args.order)
    report = [{"name": r.name, "status": r.status, "detail": r.detail} for r in rows]
    lines = [f"[{r.status}] {r.name}" + (f": {r.detail}" if r.detail else "")
             for r in rows]
    failed = [r for r in rows if r.failed]
    lines.append("result: " + ("FAIL " + ", ".join(r.name for r in failed)
                               if failed else "all invariants hold"))
    _emit(args, {"command": "verify",
                 "inputs": _inputs(args, "geometry", "order"),
                 "validity_order": None,
                 "terms": [], "report": report}, lines)
    return 1 if failed else 0


_IDX = re.compile(r"(?:dx|xi|x)(\d+)")


def _cmd_print(args) -> int:
    if args.geometry:
        geom = load_geometry(args.geometry)
        n, J = geom.n, geom.J
    else:
        J = args.jet if args.jet is not None else 4
        n = max((int(m) for m in _IDX.findall(args.form)), default=1)
    s = parse_form_series(args.form, n, J)
    out = format_form_series(s)
    _emit(args, {"command": "print",
                 "inputs": _inputs(args, "geometry", "jet", "form"),
                 "validity_order": _vo_json(s.validity_order),
                 "terms": [out], "report": []}, [out])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--geometry", help="geometry JSON file")
    common.add_argument("--order", type=int, default=4,
                        help="filtration order of the recursion (default 4)")
    common.add_argument("--jet", type=int, default=None,
                        help="jet truncation order (for print without a geometry)")
    common.add_argument("--format", choices=("text", "json"), default="text")

    ap = argparse.ArgumentParser(
        prog="fedosov",
        description="exact deformation quantization engine on a cotangent chart")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("r", parents=[common],
                        help="compute the connection correction terms")
    sp.set_defaults(func=_cmd_r)

    sp = sub.add_parser("extend", parents=[common],
                        help="extend a form to a flat section")
    sp.add_argument("--form", required=True, help="form expression")
    sp.set_defaults(func=_cmd_extend)

    sp = sub.add_parser("star", parents=[common], help="star product of two forms")
    sp.add_argument("--p", required=True, help="left factor expression")
    sp.add_argument("--q", required=True, help="right factor expression")
    sp.set_defaults(func=_cmd_star)

    sp = sub.add_parser("verify", parents=[common],
                        help="run the invariant suites and the comparison report")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("print", parents=[common],
                        help="parse an expression and print its canonical form")
    sp.add_argument("--form", required=True, help="form expression")
    sp.set_defaults(func=_cmd_print)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except (GeometryError, OrderError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except (EngineConsistencyError, NotClosedError, CentralObstructionError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
