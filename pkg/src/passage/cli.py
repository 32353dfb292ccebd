"""``passage`` command line: compute, verify, experiment, render, info.

Exit codes: 0 success, 2 verification mismatch, 3 overflow abort,
4 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__, analysis, kernels, oracle
from .engine import (MemoryRun, NoVariants, PassWinnerVariants, PerColumnNormal, RunConfig,
                     iterate, load_run, read_variant_file, run)
from .errors import ConfigError, DominatedLevel, PassageError, SheetOverflow
from .rules import Game

EXIT_OK, EXIT_MISMATCH, EXIT_OVERFLOW, EXIT_CONFIG = 0, 2, 3, 4
MAX_LISTED = 50

log = logging.getLogger("passage")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PASSAGE_THREADS", "1")))
    except ValueError:
        raise ConfigError("PASSAGE_THREADS must be an integer") from None


def _variant_source(args):
    has_file = getattr(args, "variant_file", None) is not None
    has_sigma = getattr(args, "per_column_sigma", None) is not None
    if has_file and has_sigma:
        raise ConfigError("--variant-file and --per-column-sigma are exclusive")
    if has_file:
        return read_variant_file(args.variant_file)
    if has_sigma:
        sigma = args.per_column_sigma
        if sigma == "auto":
            width = args.width or 4 * args.levels + 64
            sigma = width / 64
        try:
            sigma = float(sigma)
        except ValueError:
            raise ConfigError("--per-column-sigma takes a number or 'auto'") from None
        return PerColumnNormal(sigma, args.seed if args.seed is not None else 0)
    if getattr(args, "seed", None) is not None:
        raise ConfigError("--seed only applies with --per-column-sigma")
    return NoVariants()


def _add_geometry(p):
    p.add_argument("--width", type=int, help="sheet width (default 4*levels+64)")
    p.add_argument("--height", type=int, help="target rows (default min(2*levels+32, width))")


def _add_variants(p):
    p.add_argument("--variant-file", help="CSV of x,y,z variant positions")
    p.add_argument("--per-column-sigma", nargs="?", const="auto",
                   help="one normal variant per row; bare flag means width/64")
    p.add_argument("--seed", type=int, help="RNG seed for --per-column-sigma")


# --- compute ------------------------------------------------------------------

def cmd_compute(args) -> int:
    variants = _variant_source(args)
    if args.mode != "generic" and not isinstance(variants, NoVariants):
        raise ConfigError("variant flags require --mode generic")
    if isinstance(variants, PerColumnNormal) and args.seed is None:
        raise ConfigError("--per-column-sigma needs --seed")
    emit = tuple(args.emit.split(",")) if args.emit else None
    config = RunConfig(args.game, args.mode, args.levels, args.height, args.width,
                       variants, emit, args.out)
    manifest = run(config, args.out)
    print(f"levels completed: {manifest.levels_completed}/{config.levels}")
    last = manifest.levels_completed - 1
    if last >= 0:
        loaded = load_run(args.out)
        for kind in config.emit:
            s = loaded.sheet(kind, last)
            frac = s.count() / (s.height * s.width)
            print(f"{kind}_{last}: fill {frac:.6f}")
    if manifest.status == "overflow":
        print(f"overflow at level {manifest.failed_level}, row {manifest.failed_row}",
              file=sys.stderr)
        return EXIT_OVERFLOW
    if manifest.status == "dominated":
        print(manifest.error, file=sys.stderr)
        return EXIT_OVERFLOW
    return EXIT_OK


# --- verify -------------------------------------------------------------------

def _report(mismatches) -> int:
    print(f"{len(mismatches)} mismatches")
    for m in mismatches[:MAX_LISTED]:
        print(f"  {m}")
    if len(mismatches) > MAX_LISTED:
        print(f"  ... {len(mismatches) - MAX_LISTED} more")
    return EXIT_OK if not mismatches else EXIT_MISMATCH


def _run_variants(loaded, bound):
    """Every variant cell of a generic run that lies inside an oracle bound."""
    pts = []
    for x in range(min(loaded.levels_completed, bound + 1)):
        v = loaded.sheet("V", x)
        if v is None:
            raise ConfigError("brute-force check of a generic run needs its V sheets")
        pts.extend((x, y, z) for y, z in v.cells())
    return pts


def verify_equivalence(game, levels, height=None, width=None) -> list:
    """Pass run vs generic run fed the pure pass-winners; returns differing (kind, level)."""
    a = iterate(RunConfig(game, "pass", levels, height, width))
    b = iterate(RunConfig(game, "generic", levels, height, width,
                          variants=PassWinnerVariants()))
    bad = []
    for sa, sb in zip(a, b):
        x = sa["_state"].level - 1
        if sa["What"] != sb["Wtilde"]:
            bad.append(("W", x))
        if sa["Lhat"] != sb["Ltilde"]:
            bad.append(("L", x))
    return bad


def cmd_verify(args) -> int:
    if args.equivalence:
        if args.game is None or args.levels is None:
            raise ConfigError("--equivalence needs --game and --levels")
        bad = verify_equivalence(args.game, args.levels, args.height, args.width)
        print(f"{len(bad)} mismatches")
        for kind, x in bad[:MAX_LISTED]:
            print(f"  {kind} level {x}")
        return EXIT_OK if not bad else EXIT_MISMATCH
    if args.run is None or args.oracle is None:
        raise ConfigError("verify needs --run and --oracle (or --equivalence)")
    loaded = load_run(args.run)
    if args.oracle == "bouton":
        return _report(oracle.diff_bouton(loaded))
    if args.oracle == "closed-form":
        return _report(oracle.diff_closed_form(loaded))
    game = Game.parse(loaded.game)
    bound = args.bound or (48 if game is Game.NIM3 else 60)
    variants = _run_variants(loaded, bound) if loaded.mode == "generic" else ()
    table = oracle.brute_force(game, loaded.mode == "pass", bound, variants)
    return _report(oracle.diff(loaded, table))


# --- experiment ---------------------------------------------------------------

def _summary(curve, windows):
    for lo, hi in windows:
        try:
            print(f"mean[{lo},{hi}] = {curve.mean(lo, hi):.6f}")
        except ConfigError:
            pass


def cmd_experiment(args) -> int:
    kind = args.analysis
    if kind == "overlap":
        if args.run:
            curve = analysis.overlap_curve(load_run(args.run))
        else:
            if args.levels is None:
                raise ConfigError("overlap needs --run or --levels")
            curve = analysis.overlap_curve_config(
                RunConfig(args.game, "pass", args.levels, args.height, args.width))
        _summary(curve, [(1, 50), (150, 200)])
        try:
            delta = curve.mean(150, 200) - curve.mean(1, 50)
            print(f"trend (late - early) = {delta:.6f} [{'PASS' if delta >= 0.05 else 'FAIL'} >= 0.05]")
        except ConfigError:
            pass
    elif kind == "sensitivity":
        if args.perturb_level is None or args.levels is None:
            raise ConfigError("sensitivity needs --perturb-level and --levels")
        base = RunConfig(args.game, "generic", args.levels, args.height, args.width,
                         _variant_source(args), ("Ltilde",))
        curve = analysis.sensitivity_curve(base, args.perturb_level, args.perturb_row)
        x0 = args.perturb_level
        early = max(curve.values[:x0], default=0.0)
        window = [v for x, v in zip(curve.xs, curve.values) if x0 <= x <= x0 + 25]
        print(f"perturbation at {curve.meta['perturbation']}")
        print(f"max below level {x0} = {early:.6f}")
        print(f"max within 25 levels = {max(window, default=0.0):.6f}")
    elif kind == "scale":
        if args.level is None:
            raise ConfigError("scale needs --level")
        x2 = args.level2 or 2 * args.level
        if args.run:
            src = load_run(args.run)
        else:
            side = int(args.c * x2)
            src = MemoryRun(RunConfig(args.game, args.mode, x2 + 1, args.height or side,
                                      args.width or max(side, 4 * (x2 + 1) + 64)),
                            keep=(analysis.WINNER_KIND[args.mode],))
        value = analysis.scale_similarity(src, args.level, x2, args.kind, args.k, args.c)
        print(f"correlation W_{args.level} vs W_{x2} = {value:.6f}")
        curve = analysis.CurveSeries([args.level], [value], "scale") if value == value else None
    elif kind == "geometry":
        if args.level is None:
            raise ConfigError("geometry needs --level")
        if args.run_a and args.run_b:
            run_a, run_b = load_run(args.run_a), load_run(args.run_b)
            value = analysis.geometry_correlation(run_a, run_b, args.level, k=args.k, c=args.c)
        else:
            value = geometry_pair(args.game, args.level, args.height, args.width, args.k, args.c)
        print(f"geometry correlation at level {args.level} = {value:.6f}")
        curve = analysis.CurveSeries([args.level], [value], "geometry") if value == value else None
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(kind)
    if args.csv and curve is not None:
        curve.write_csv(args.csv)
        print(f"wrote {args.csv}")
    return EXIT_OK


def geometry_pair(game, level, height=None, width=None, k=32, c=2.0):
    """Pass-vs-pure winner-sheet correlation, computing pure and pass runs concurrently."""
    side = int(c * level)
    cfg = dict(levels=level + 1, height=height or side, width=width)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        fa = pool.submit(MemoryRun, RunConfig(game, "pass", **cfg), ("What",))
        fb = pool.submit(MemoryRun, RunConfig(game, "pure", **cfg), ("W",))
        a, b = fa.result(), fb.result()
    return analysis.geometry_correlation(a, b, level, "What", "W", k, c)


# --- render / info ------------------------------------------------------------

def cmd_render(args) -> int:
    loaded = load_run(args.run)
    parts = set(args.compose.split(",")) if args.compose else {"winners"}
    unknown = parts - {"winners", "losers"}
    if unknown:
        raise ConfigError(f"unknown compose parts {sorted(unknown)}")
    winners = losers = None
    if "winners" in parts:
        winners = loaded.sheet(args.winner_kind or analysis.WINNER_KIND[loaded.mode], args.level)
        if winners is None:
            raise ConfigError(f"run has no winner sheet at level {args.level}")
    if "losers" in parts:
        losers = loaded.sheet(args.loser_kind or analysis.LOSER_KIND[loaded.mode], args.level)
        if losers is None:
            raise ConfigError(f"run has no loser sheet at level {args.level}")
    analysis.render(args.out, winners, losers)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_info(args) -> int:
    print(f"passage {__version__}, kernel backend: {kernels.BACKEND} "
          f"(available: {', '.join(sorted(kernels.BACKENDS))})")
    if args.run:
        loaded = load_run(args.run)
        m = loaded.manifest
        print(f"game={m.game} mode={m.mode} levels={m.levels_completed}/{m.levels} "
              f"height={m.height} width={m.width} status={m.status}")
        loaded.verify()
        print(f"{len(m.files)} files, checksums ok")
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="passage", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="iterate a sheet recursion and persist it")
    p.add_argument("--game", required=True, choices=["nim", "chomp"])
    p.add_argument("--mode", required=True, choices=["pure", "pass", "generic"])
    p.add_argument("--levels", required=True, type=int)
    _add_geometry(p)
    _add_variants(p)
    p.add_argument("--emit", help="comma-separated sheet kinds to write")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("verify", help="check a run against an oracle")
    p.add_argument("--run")
    p.add_argument("--oracle", choices=["bouton", "closed-form", "brute"])
    p.add_argument("--bound", type=int)
    p.add_argument("--equivalence", choices=["pass-generic"])
    p.add_argument("--game", choices=["nim", "chomp"])
    p.add_argument("--levels", type=int)
    _add_geometry(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="overlap / sensitivity / scale / geometry")
    p.add_argument("analysis", choices=["overlap", "sensitivity", "scale", "geometry"])
    p.add_argument("--run")
    p.add_argument("--run-a")
    p.add_argument("--run-b")
    p.add_argument("--game", default="nim", choices=["nim", "chomp"])
    p.add_argument("--mode", default="pure", choices=["pure", "pass", "generic"])
    p.add_argument("--levels", type=int)
    p.add_argument("--level", type=int)
    p.add_argument("--level2", type=int)
    p.add_argument("--kind")
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--perturb-level", type=int)
    p.add_argument("--perturb-row", type=int)
    _add_geometry(p)
    _add_variants(p)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("render", help="write a sheet as a PGM image")
    p.add_argument("--run", required=True)
    p.add_argument("--level", required=True, type=int)
    p.add_argument("--compose", help="winners,losers")
    p.add_argument("--winner-kind")
    p.add_argument("--loser-kind")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("info", help="backend and run summary")
    p.add_argument("--run")
    p.set_defaults(func=cmd_info)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SheetOverflow, DominatedLevel) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (PassageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
