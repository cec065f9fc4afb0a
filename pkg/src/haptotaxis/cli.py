"""Command line entry point: ``haptotaxis {simulate,picard,verify-all,plot}``.

The exit status is 0 when every enabled check passed (and, with
``--strict``, no warning was raised), 1 when a check failed, 2 on a usage
or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from haptotaxis.config import ConfigError, load_config

log = logging.getLogger("haptotaxis")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="haptotaxis", description="Simulate and verify the degenerate haptotaxis system.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, config_required: bool) -> None:
        sp.add_argument("--config", required=config_required, help="scenario file (YAML)")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for the implicit solve")
        sp.add_argument("--strict", action="store_true", help="treat warnings as failures")
        sp.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("simulate", help="integrate a scenario and check its invariants"), True)
    common(sub.add_parser("picard", help="run the fixed-point construction"), True)
    sp = sub.add_parser("verify-all", help="run every reference scenario and acceptance criterion")
    common(sp, False)
    sp.add_argument("--no-refine", action="store_true", help="skip the dt-halving Lyapunov reruns")
    sp = sub.add_parser("plot", help="render decay curves from a diagnostics CSV")
    common(sp, True)
    sp.add_argument("--csv", help="diagnostics CSV (default <out>/<name>_diagnostics.csv)")
    return p


def _report(summary, strict: bool) -> int:
    for c in summary.checks:
        tag = "PASS" if c.passed else "FAIL"
        print(f"[{tag}] {summary.name}.{c.name}: measured={c.measured} threshold={c.threshold} {c.detail}".rstrip())
    for w in summary.warnings:
        print(f"[WARN] {summary.name}: {w}")
    return 0 if summary.ok(strict) else 1


def _run_mode(args, mode: str) -> int:
    from haptotaxis.runner import run_scenario

    cfg = load_config(args.config)
    if cfg.mode != mode:
        print(f"error: config mode is {cfg.mode!r} but subcommand is {mode!r}", file=sys.stderr)
        return 2
    summary, _ = run_scenario(cfg, args.out, args.threads, args.strict)
    return _report(summary, args.strict)


def _verify_all(args) -> int:
    from haptotaxis.acceptance import verify_all

    out = args.out
    if out is None and args.config:
        out = load_config(args.config).output.dir
    criteria, summaries = verify_all(out or "out", args.threads, refine=not args.no_refine)
    code = 0
    for s in summaries:
        code = max(code, _report(s, args.strict))
    for c in criteria:
        print(c.report())
        if not c.passed:
            code = 1
    return code


def _plot(args) -> int:
    from haptotaxis.plotting import plot_run

    cfg = load_config(args.config)
    out = Path(args.out or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else out / f"{cfg.output.name}_diagnostics.csv"
    if not csv_path.exists():
        print(f"error: {csv_path} not found (run simulate first)", file=sys.stderr)
        return 2
    print(plot_run(csv_path, cfg, out))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.command in ("simulate", "picard"):
            return _run_mode(args, args.command)
        if args.command == "verify-all":
            return _verify_all(args)
        return _plot(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
