"""Command line entry point: ``lrcontact {inflate,indent,slide,compare}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .output import write_csv
from .scenarios import (
    CompareError,
    ConfigError,
    RunReport,
    compare_runs,
    load_config,
    resolve_config,
    run,
)

log = logging.getLogger("lrcontact")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _depth(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("depth must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrcontact", description=__doc__)
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("inflate", "volume-controlled inflation of a hemispherical balloon"),
                       ("indent", "rigid sphere pressed into a pre-stretched square sheet"),
                       ("slide", "rigid sphere pressed into a cushion and slid along it")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="JSON scenario file; missing keys take defaults")
        p.add_argument("--out", type=Path, help="output directory (default: ./run_<scenario>)")
        p.add_argument("--uniform-depth", type=_depth, help="uniform refinement depth; disables adaptivity")
        p.add_argument("--seed", type=_u64, help="recorded in the run config")
    p = sub.add_parser("compare", help="per-step force errors and dof ratios of two runs")
    p.add_argument("run", type=Path, help="run directory (or report.json) to assess")
    p.add_argument("reference", type=Path, help="reference run directory (or report.json)")
    p.add_argument("--out", type=Path, help="directory for compare.csv and compare.json")
    return ap


def _report(path: Path) -> RunReport:
    path = path / "report.json" if path.is_dir() else path
    if not path.exists():
        raise CompareError(f"{path}: no report.json found")
    return RunReport.load(path)


def _simulate(args) -> int:
    over = {"uniform_depth": args.uniform_depth, "seed": args.seed}
    if args.config is not None:
        cfg = load_config(args.config, **over)
        if cfg.scenario != args.command:
            raise ConfigError(f"config scenario {cfg.scenario!r} does not match command {args.command!r}")
    else:
        cfg = resolve_config({"scenario": args.command}, **over)
    out = args.out or cfg["out"] or Path(f"run_{args.command}")
    rep = run(cfg, out)
    print(f"{rep.scenario}: {rep.status}, {len(rep.rows)} steps, {len(rep.events)} events, "
          f"final dofs {rep.final_dofs} -> {out}")
    if rep.status != "ok":
        print(rep.message, file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _compare(args) -> int:
    res = compare_runs(_report(args.run), _report(args.reference))
    out = args.out or (args.run if args.run.is_dir() else args.run.parent)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["step", "load", "f_n", "f_n_ref", "e_n", "e_t", "dof_ratio"]
    write_csv(out / "compare.csv", cols, [[r[c] for c in cols] for r in res["rows"]])
    (out / "compare.json").write_text(json.dumps(res, indent=2))
    print(f"max e_n {res['max_e_n']:.3e}  max e_t {res['max_e_t']:.3e}  "
          f"max dof ratio {res['max_dof_ratio']:.3f} -> {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            return _compare(args)
        return _simulate(args)
    except (ConfigError, CompareError, OSError) as exc:
        print(f"lrcontact: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
