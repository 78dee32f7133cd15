"""Command-line front end for the sweep harness.

Configuration comes from an optional JSON file (--config) whose keys mirror
the experiment description, overridden by individual flags.  Exit status is
0 when every cell converged and 2 when any cell was flagged.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .experiments import ExperimentSpec, run_experiment
from .model import ARCHITECTURES, SystemConfig

_CONFIG_KEYS = frozenset({
    "r", "k", "n_b", "n_e", "power", "noise", "seed",
    "architectures", "scenarios", "epsilon_grid", "mc_trials", "out",
})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdris",
        description="Optimize reflecting-surface responses for channel "
                    "estimation and sweep the eavesdropper information cap.",
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file; flags override its keys")
    parser.add_argument("--r", type=int, help="number of surface elements")
    parser.add_argument("--k", type=int, help="number of transmit antennas")
    parser.add_argument("--power", type=float,
                        help="total transmit power (default 30)")
    parser.add_argument("--noise", type=float,
                        help="receiver noise variance (default 1e-5)")
    parser.add_argument("--seed", type=int, help="channel seed (default 0)")
    parser.add_argument("--arch", action="append", choices=ARCHITECTURES,
                        help="architecture to run (repeatable; default all)")
    parser.add_argument("--scenario", action="append",
                        choices=("no-eve", "eve"),
                        help="scenario to run (repeatable; default both)")
    parser.add_argument("--eps-grid", type=str, default=None,
                        help="comma-separated cap values (default: 20 "
                             "log-spaced points scaled to the instance)")
    parser.add_argument("--trials", type=int,
                        help="Monte-Carlo trials per cell (default 0 = skip)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise SystemExit(f"config {path} must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise SystemExit(f"config {path}: unknown keys {sorted(unknown)}")
    return data


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise SystemExit(f"--eps-grid: {exc}") from exc


def make_spec(args: argparse.Namespace) -> ExperimentSpec:
    conf = _load_config(args.config)

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return conf.get(key, default)

    k = int(pick(args.k, "k", 10))
    r = int(pick(args.r, "r", 36))
    n_b = int(conf.get("n_b", 2 * k))
    n_e = int(conf.get("n_e", 2 * k))
    cfg = SystemConfig(
        k=k, r=r, n_b=n_b, n_e=n_e,
        total_power=float(pick(args.power, "power", 30.0)),
        noise_variance=float(pick(args.noise, "noise", 1e-5)),
        seed=int(pick(args.seed, "seed", 0)),
    )
    grid = args.eps_grid
    if grid is not None:
        grid = _parse_grid(grid)
    else:
        grid = conf.get("epsilon_grid")
    return ExperimentSpec(
        cfg=cfg,
        epsilon_grid=np.asarray(grid, dtype=float) if grid is not None else None,
        architectures=tuple(pick(args.arch, "architectures", ARCHITECTURES)),
        scenarios=tuple(pick(args.scenario, "scenarios", ("no-eve", "eve"))),
        mc_trials=int(pick(args.trials, "mc_trials", 0)),
        output_path=Path(pick(args.out, "out", "out")),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        spec = make_spec(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = run_experiment(spec)
    bad = [row for row in rows if not row["converged"]]
    if bad:
        print(f"{len(bad)} of {len(rows)} cells did not converge "
              f"(see {spec.output_path / 'results.csv'})", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
