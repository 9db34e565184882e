"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 engine error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .chart import emit_chart
from .errors import ConfigError, InputError, SimulationError
from .oracle import grover_noiseless_success, predict_branch_visibility, predict_ghz_visibility
from .runner import (
    KEYS, format_csv, law_label, merge_pairs, noise_probability, parse_pairs, plan_from_pairs, run_sweep,
    write_csv,
)

log = logging.getLogger("masscollapse")

# the three default sweeps; reproduce overrides shots/seed/backend from flags
REPRODUCE = (
    ("ghz", "fig2_ghz", {"experiment": "ghz", "sizes": "2..8"}),
    ("branch", "fig3_branch", {"experiment": "branch", "sizes": "0..12"}),
    ("grover", "fig4_grover", {"experiment": "grover", "sizes": "3,4,5", "iterations": "1..7"}),
)


def _add_config_flags(p: argparse.ArgumentParser, skip: tuple[str, ...] = ()) -> None:
    for key in KEYS:
        if key == "experiment" or key in skip:
            continue
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, metavar=key.upper())
    p.add_argument("--config", type=Path, help="flat key=value config file; flags win over it")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, help="parallel sweep points (default: $MASSCOLLAPSE_WORKERS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masscollapse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ghz", "branch", "grover"):
        p = sub.add_parser(name, help=f"run the {name} sweep")
        _add_config_flags(p)
        _add_run_flags(p)
        p.add_argument("--out", type=Path, help="CSV destination (default: stdout)")
        p.add_argument("--chart", type=Path, help="SVG chart destination")
    p = sub.add_parser("reproduce", help="run all three sweeps and write CSVs and fig2-fig4 charts")
    p.add_argument("--seed", default="42")
    p.add_argument("--shots")
    p.add_argument("--backend")
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    _add_run_flags(p)
    p = sub.add_parser("predict", help="print closed-form predictions")
    p.add_argument("experiment", choices=("ghz", "branch", "grover"))
    _add_config_flags(p, skip=("shots", "phase_points", "seed", "backend"))
    return parser


def _pairs_from_args(args: argparse.Namespace, experiment: str) -> dict[str, str]:
    layers = [{"experiment": experiment}]
    if getattr(args, "config", None):
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        file_pairs = parse_pairs(text)
        if file_pairs.get("experiment", experiment) != experiment:
            raise ConfigError("experiment", f"config file is for {file_pairs['experiment']!r}")
        layers.append(file_pairs)
    layers.append({k: getattr(args, k, None) for k in KEYS if k != "experiment"})
    return merge_pairs(*layers)


def _run(args: argparse.Namespace) -> None:
    plan = plan_from_pairs(_pairs_from_args(args, args.command))
    rows = run_sweep(plan, args.workers)
    if args.out:
        write_csv(rows, args.out)
    else:
        sys.stdout.write(format_csv(rows))
    if args.chart:
        emit_chart(rows, args.chart)


def _reproduce(args: argparse.Namespace) -> None:
    overrides = {"seed": args.seed, "shots": args.shots, "backend": args.backend}
    plans = [(name, fig, plan_from_pairs(merge_pairs(pairs, overrides))) for name, fig, pairs in REPRODUCE]
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, fig, plan in plans:
        rows = run_sweep(plan, args.workers)
        csv_path = write_csv(rows, args.out_dir / f"{name}.csv")
        svg_path = emit_chart(rows, args.out_dir / f"{fig}.svg")
        print(f"{name}: {len(rows)} rows -> {csv_path}, {svg_path}")


def _predict(args: argparse.Namespace) -> None:
    plan = plan_from_pairs(_pairs_from_args(args, args.experiment))
    print("experiment,law,size,iterations,p_effective,prediction")
    for spec, size, t in plan.points():
        label = law_label(spec)
        p = noise_probability(spec, size)
        if plan.experiment == "ghz":
            value = predict_ghz_visibility(spec, size)
        elif plan.experiment == "branch":
            value = predict_branch_visibility(spec, size)
        elif label == "none":
            value = grover_noiseless_success(size, t)
        else:
            continue  # noisy Grover has no closed form
        print(f"{plan.experiment},{label},{size},{'' if t is None else t},{p:.9g},{value:.9g}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "reproduce":
            _reproduce(args)
        elif args.command == "predict":
            _predict(args)
        else:
            _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SimulationError, OSError) as exc:
        if isinstance(exc, InputError):
            print(f"input error: {exc}", file=sys.stderr)
        else:
            print(f"engine error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
