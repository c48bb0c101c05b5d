"""Command-line interface: ``amfc <subcommand> --probs FILE ...``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from contextlib import contextmanager

from . import __version__
from .adding_machine import simulate
from .julia import (UnsupportedParameterError, classify_connectedness, conjugacy,
                    green_E_grid, quasicircle_check)
from .probs import ConfigError, ProbabilitySequence
from .render import RenderConfig, default_config, pgm_bytes, render, write_levels_csv
from .spectrum import MEMBERSHIP_LEVELS, RENDER_LEVELS, eigen_residual, eigenvector, iterate_f
from .transition import CapacityError, build_truncated, classify_recurrence


class UsageError(Exception):
    pass


def _g(x: float) -> str:
    return f"{x:.17g}"


@contextmanager
def _sink(path, binary=False):
    if path is None or path == "-":
        yield sys.stdout.buffer if binary else sys.stdout
    else:
        with open(path, "wb" if binary else "w", newline=None if binary else "") as fh:
            yield fh


def _emit_json(obj, path):
    with _sink(path) as fh:
        fh.write(json.dumps(obj, sort_keys=True) + "\n")


def _emit_csv(header, rows, path):
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(args, probs):
    s = simulate(args.start, args.steps, probs, seed=args.seed, hit_levels=args.hit_levels)
    out = s.to_dict()
    out["seed"] = args.seed
    _emit_json(out, args.out)


def cmd_matrix(args, probs):
    op = build_truncated(probs, args.size)
    rows = [(n, m, _g(v)) for n, m, v in op.triples()]
    _emit_csv(["n", "m", "value"], rows, args.out)


def cmd_classify(args, probs):
    conn = classify_connectedness(probs, args.budget)
    report = {
        "recurrence": classify_recurrence(probs).verdict,
        "connectedness": conn.kind,
        "diagnostics": {
            "recurrence": classify_recurrence(probs).to_dict(),
            "connectedness": conn.to_dict(),
        },
        "probs_digest": probs.digest(),
    }
    if conn.count is not None and conn.kind != "Connected":
        report["components"] = conn.count
    try:
        qc = quasicircle_check(probs)
        report["quasicircle"] = qc.verdict
        report["diagnostics"]["quasicircle"] = qc.to_dict()
    except UnsupportedParameterError as exc:
        report["quasicircle"] = "Unsupported"
        report["diagnostics"]["quasicircle"] = {"error": str(exc)}
    _emit_json(report, args.out)


def cmd_spectrum_member(args, probs):
    res = iterate_f(complex(args.re, args.im), probs, args.max_levels, trace=True)
    out = res.to_dict()
    out["level"] = res.level if res.escaped else None
    _emit_json(out, args.out)


def cmd_eigenvector(args, probs):
    lam = complex(args.lambda_re, args.lambda_im)
    sl = eigenvector(lam, probs, args.size)
    resid = eigen_residual(sl, build_truncated(probs, args.size))
    rows = [(n, _g(v.real), _g(v.imag)) for n, v in enumerate(sl.v)]
    _emit_csv(["n", "re", "im"], rows, args.out)
    print(f"residual {_g(resid)} inside {sl.inside} overflow {sl.overflow}", file=sys.stderr)


def _render_config(args, probs) -> RenderConfig:
    try:
        return _window(args, probs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _window(args, probs) -> RenderConfig:
    if args.center_re is None and args.center_im is None and args.width is None:
        base = default_config(probs, args.pixels, args.max_levels, args.coords)
        return RenderConfig(base.center, base.width, base.height, args.pixels,
                            args.pixels_y or args.pixels, args.max_levels, args.coords)
    if args.width is None:
        raise UsageError("--width is required with an explicit window")
    center = complex(args.center_re or 0.0, args.center_im or 0.0)
    return RenderConfig(center, args.width, args.height or args.width, args.pixels,
                        args.pixels_y or args.pixels, args.max_levels, args.coords)


def cmd_render(args, probs):
    raster = render(_render_config(args, probs), probs)
    with _sink(args.out, binary=True) as fh:
        fh.write(pgm_bytes(raster))
    if args.levels_csv:
        write_levels_csv(raster, args.levels_csv)
    meta = dict(raster.metadata, inside_fraction=raster.inside_fraction())
    print(json.dumps(meta, sort_keys=True), file=sys.stderr)


def cmd_green(args, probs):
    cfg = _render_config(args, probs)
    pts = cfg.grid()
    G = green_E_grid(pts, probs, args.n_max)
    rows = [(_g(z.real), _g(z.imag), _g(g)) for z, g in zip(pts.ravel(), G.ravel())]
    _emit_csv(["x", "y", "G"], rows, args.out)


def cmd_fibered(args, probs):
    conj = conjugacy(probs, args.shifts)
    qc = quasicircle_check(probs)
    out = conj.to_dict()
    out["quasicircle"] = qc.verdict
    out["quasicircle_bound"] = max(qc.sup_c, qc.tail_bound)
    out["quasicircle_threshold"] = qc.threshold
    _emit_json(out, args.out)


# -- parser ---------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _window_args(p, max_levels=RENDER_LEVELS, pixels=512):
    p.add_argument("--center-re", type=float)
    p.add_argument("--center-im", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--height", type=float)
    p.add_argument("--pixels", type=int, default=pixels)
    p.add_argument("--pixels-y", type=int)
    p.add_argument("--max-levels", type=int, default=max_levels)
    p.add_argument("--coords", choices=["E", "K"], default="E")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--probs", required=True, help="JSON sequence config")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default stdout)")

    ap = _Parser(prog="amfc", description="Stochastic adding machine: operator, spectrum, fibered Julia sets.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run of the chain")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--hit-levels", type=int, default=8)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("matrix", parents=[common], help="truncated transition matrix as CSV triples")
    p.add_argument("--size", type=int, required=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("classify", parents=[common], help="recurrence, connectedness and quasicircle verdicts")
    p.add_argument("--budget", type=int, default=256)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("spectrum-member", parents=[common], help="escape test for one point")
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, default=0.0)
    p.add_argument("--max-levels", type=int, default=MEMBERSHIP_LEVELS)
    p.set_defaults(func=cmd_spectrum_member)

    p = sub.add_parser("eigenvector", parents=[common], help="eigenvector slice as CSV")
    p.add_argument("--lambda-re", type=float, required=True)
    p.add_argument("--lambda-im", type=float, default=0.0)
    p.add_argument("--size", type=int, required=True)
    p.set_defaults(func=cmd_eigenvector)

    p = sub.add_parser("render", parents=[common], help="PGM raster of E")
    _window_args(p)
    p.add_argument("--levels-csv", help="also dump exact escape levels as CSV")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("green", parents=[common], help="Green function on a grid, CSV")
    _window_args(p, pixels=128)
    p.add_argument("--n-max", type=int, default=512)
    p.set_defaults(func=cmd_green)

    p = sub.add_parser("fibered", parents=[common], help="lambda(p), c-values and quasicircle verdict")
    p.add_argument("--shifts", type=int, default=8)
    p.set_defaults(func=cmd_fibered)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        probs = ProbabilitySequence.load(args.probs)
    except FileNotFoundError as exc:
        print(f"amfc: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        print(f"amfc: error: {exc}", file=sys.stderr)
        return 2
    try:
        args.func(args, probs)
    except (UsageError, ConfigError) as exc:
        print(f"amfc: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, CapacityError, UnsupportedParameterError, OSError) as exc:
        print(f"amfc: {args.command} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
