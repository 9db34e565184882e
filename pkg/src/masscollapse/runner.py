"""
Sweep configuration, deterministic execution and CSV persistence.

Config text is a flat list of ``key=value`` tokens separated by whitespace
or newlines; ``#`` starts a comment. Ranges are written ``2..8`` and lists
``3,4,5`` (both may be mixed: ``2..4,7``).
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .engine import Placement, Scope
from .errors import ConfigError, InputError, SimulationError, SweepError
from .noise import Constant, ExpSaturating, NoiseSpec, PowerLaw, noise_probability
from .protocols import (
    Backend, BranchMass, ExperimentConfig, GhzParity, Grover, branch_curve, ghz_curve, run_grover,
    visibility_from_curve, visibility_stderr,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "MASSCOLLAPSE_WORKERS"
CSV_HEADER = ("experiment", "law", "size", "iterations", "p_effective", "metric", "stderr", "shots", "seed", "backend")

KEYS = ("experiment", "law", "k", "alpha", "p0", "sizes", "iterations", "shots", "phase_points", "seed", "backend")
DEFAULTS = {
    "law": "power,constant",
    "k": "0.02",
    "alpha": "2.0",
    "p0": "0.08",
    "shots": "2000",
    "phase_points": "64",
    "seed": "0",
    "backend": "trajectory",
}
DEFAULT_SIZES = {"ghz": "2..8", "branch": "0..12", "grover": "3,4,5"}
DEFAULT_ITERATIONS = "1..7"
SIZE_LIMITS = {"ghz": (2, 12), "branch": (0, 12), "grover": (3, 5)}
LAW_NAMES = ("power", "exp", "constant", "none")


@dataclass(frozen=True)
class SweepPlan:
    experiment: str
    sizes: tuple[int, ...]
    laws: tuple[NoiseSpec, ...]
    iterations: tuple[int, ...] = ()
    shots: int = 2000
    phase_points: int = 64
    seed: int = 0
    backend: Backend = Backend.TRAJECTORY

    def points(self) -> list[tuple[NoiseSpec, int, int | None]]:
        its: Sequence[int | None] = self.iterations if self.experiment == "grover" else (None,)
        return [(spec, size, t) for spec in self.laws for size in self.sizes for t in its]


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    law: str
    size: int
    iterations: int | None
    p_effective: float
    metric: float
    stderr: float
    shots: int
    seed: int
    backend: str

    def __post_init__(self):
        if not -0.01 <= self.metric <= 1.01:
            raise InputError(f"metric {self.metric} outside [-0.01, 1.01]")
        if self.stderr < 0:
            raise InputError(f"negative stderr {self.stderr}")

    @property
    def sort_key(self):
        return (self.law, self.size, -1 if self.iterations is None else self.iterations)


def law_label(spec: NoiseSpec) -> str:
    if isinstance(spec.law, Constant) and spec.law.p0 == 0:
        return "none"
    return spec.law.label


# ----------------------------------------------------------------------------
# Config parsing
# ----------------------------------------------------------------------------

def parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for line in text.splitlines():
        for token in line.split("#", 1)[0].split():
            key, sep, value = token.partition("=")
            if not sep or not key:
                raise ConfigError(token, "expected key=value")
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            pairs[key] = value
    return pairs


def _int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(key, f"not an integer: {value!r}") from None


def _float(key: str, value: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(key, f"not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(key, f"not finite: {value!r}")
    return x


def parse_range(key: str, text: str) -> tuple[int, ...]:
    values: list[int] = []
    for part in text.split(","):
        lo, sep, hi = part.partition("..")
        if sep:
            a, b = _int(key, lo), _int(key, hi)
            if b < a:
                raise ConfigError(key, f"empty range {part!r}")
            values.extend(range(a, b + 1))
        else:
            values.append(_int(key, part))
    if not values:
        raise ConfigError(key, "empty list")
    return tuple(sorted(set(values)))


def _build_law(name: str, k: float, alpha: float, p0: float):
    if name == "power":
        return PowerLaw(k, alpha)
    if name == "exp":
        return ExpSaturating(k, alpha)
    if name == "constant":
        return Constant(p0)
    return Constant(0.0)


def plan_from_pairs(pairs: Mapping[str, str]) -> SweepPlan:
    for key in pairs:
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
    if "experiment" not in pairs:
        raise ConfigError("experiment", "missing (one of ghz, branch, grover)")
    experiment = pairs["experiment"]
    if experiment not in SIZE_LIMITS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    raw = {**DEFAULTS, "sizes": DEFAULT_SIZES[experiment], **pairs}

    k = _float("k", raw["k"])
    alpha = _float("alpha", raw["alpha"])
    p0 = _float("p0", raw["p0"])
    if k < 0:
        raise ConfigError("k", "must be >= 0")
    if alpha < 0:
        raise ConfigError("alpha", "must be >= 0")
    if not 0 <= p0 <= 0.5:
        raise ConfigError("p0", "must be in [0, 0.5]")

    names = [s for s in raw["law"].split(",") if s]
    if not names:
        raise ConfigError("law", "empty list")
    for name in names:
        if name not in LAW_NAMES:
            raise ConfigError("law", f"unknown law {name!r} (one of {', '.join(LAW_NAMES)})")
    if len(set(names)) != len(names):
        raise ConfigError("law", "duplicate law")
    placement = Placement.PER_ITERATION if experiment == "grover" else Placement.AFTER_PREP
    laws = []
    for name in names:
        # the branch mass laws act on the ancillas only; constant noise hits every qubit
        ancillas = experiment == "branch" and name in ("power", "exp")
        scope = Scope.BRANCH_ANCILLAS_ONLY if ancillas else Scope.ALL_QUBITS
        laws.append(NoiseSpec(_build_law(name, k, alpha, p0), placement, scope))
    if len({law_label(s) for s in laws}) != len(laws):
        raise ConfigError("law", "constant with p0=0 duplicates none")

    sizes = parse_range("sizes", raw["sizes"])
    lo, hi = SIZE_LIMITS[experiment]
    if sizes[0] < lo or sizes[-1] > hi:
        raise ConfigError("sizes", f"{experiment} sizes must lie in {lo}..{hi}")

    iterations: tuple[int, ...] = ()
    if experiment == "grover":
        iterations = parse_range("iterations", raw.get("iterations", DEFAULT_ITERATIONS))
        if iterations[0] < 1 or iterations[-1] > 7:
            raise ConfigError("iterations", "must lie in 1..7")
    elif "iterations" in pairs:
        raise ConfigError("iterations", f"not used by {experiment}")

    shots = _int("shots", raw["shots"])
    if shots < 1:
        raise ConfigError("shots", "must be >= 1")
    phase_points = _int("phase_points", raw["phase_points"])
    needed = 2 * max(sizes) if experiment == "ghz" else 2
    if experiment != "grover" and phase_points <= needed:
        raise ConfigError("phase_points", f"must exceed {needed}")
    seed = _int("seed", raw["seed"])
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    try:
        backend = Backend(raw["backend"])
    except ValueError:
        raise ConfigError("backend", f"unknown backend {raw['backend']!r} (trajectory or exact)") from None
    if backend is Backend.EXACT:
        qubits = max(sizes) + 1 if experiment == "branch" else max(sizes)
        if qubits > 10:
            raise ConfigError("sizes", "exact backend is limited to 10 qubits")

    return SweepPlan(experiment, sizes, tuple(laws), iterations, shots, phase_points, seed, backend)


def parse_config(text: str) -> SweepPlan:
    return plan_from_pairs(parse_pairs(text))


# ----------------------------------------------------------------------------
# Execution
# ----------------------------------------------------------------------------

def point_seed(master: int, experiment: str, law: str, size: int, iterations: int | None) -> int:
    """Stable 64-bit stream seed for one sweep point."""
    key = f"{master}|{experiment}|{law}|{size}|{'' if iterations is None else iterations}"
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


def evaluate_point(plan: SweepPlan, spec: NoiseSpec, size: int, iterations: int | None) -> ResultRow:
    label = law_label(spec)
    seed = point_seed(plan.seed, plan.experiment, label, size, iterations)
    exact = plan.backend is Backend.EXACT
    if plan.experiment == "grover":
        config = ExperimentConfig(Grover(size, iterations), spec, plan.phase_points, plan.shots, seed, plan.backend)
        metric = run_grover(config)
        stderr = 0.0 if exact else math.sqrt(metric * (1 - metric) / plan.shots)
    else:
        if plan.experiment == "ghz":
            kind, harmonic, curve_fn = GhzParity(size), size, ghz_curve
        else:
            kind, harmonic, curve_fn = BranchMass(size), 1, branch_curve
        config = ExperimentConfig(kind, spec, plan.phase_points, plan.shots, seed, plan.backend)
        curve = curve_fn(config)
        # shot noise can push the Fourier estimate past the physical bound at low shot counts
        metric = min(visibility_from_curve(curve, harmonic), 1.0)
        stderr = visibility_stderr(curve, harmonic)
    return ResultRow(
        experiment=plan.experiment,
        law=label,
        size=size,
        iterations=iterations,
        p_effective=noise_probability(spec, size),
        metric=metric,
        stderr=stderr,
        shots=plan.shots,
        seed=seed,
        backend=plan.backend.value,
    )


def _evaluate_checked(args) -> ResultRow:
    plan, spec, size, iterations = args
    try:
        return evaluate_point(plan, spec, size, iterations)
    except SimulationError as exc:
        where = f"{plan.experiment} law={law_label(spec)} size={size}"
        if iterations is not None:
            where += f" iterations={iterations}"
        raise SweepError(where, exc) from exc


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"not an integer: {value!r}") from None


def run_sweep(plan: SweepPlan, workers: int | None = None) -> list[ResultRow]:
    """Evaluate every point of ``plan``; rows come back sorted by (law, size, iterations)."""
    workers = default_workers() if workers is None else max(1, workers)
    tasks = [(plan, spec, size, t) for spec, size, t in plan.points()]
    log.info("running %d %s points with %d worker(s)", len(tasks), plan.experiment, workers)
    if workers == 1 or len(tasks) == 1:
        rows = [_evaluate_checked(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_checked, tasks))
    return sorted(rows, key=lambda r: r.sort_key)


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".9g")


def format_csv(rows: Sequence[ResultRow]) -> str:
    if not rows:
        raise InputError("no rows to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.experiment, r.law, r.size, "" if r.iterations is None else r.iterations,
            _fmt(r.p_effective), _fmt(r.metric), _fmt(r.stderr), r.shots, r.seed, r.backend,
        ])
    return buf.getvalue()


def write_csv(rows: Sequence[ResultRow], destination: str | os.PathLike) -> Path:
    text = format_csv(rows)
    path = Path(destination)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise InputError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        rows.append(ResultRow(
            experiment=rec[0], law=rec[1], size=int(rec[2]),
            iterations=int(rec[3]) if rec[3] else None,
            p_effective=float(rec[4]), metric=float(rec[5]), stderr=float(rec[6]),
            shots=int(rec[7]), seed=int(rec[8]), backend=rec[9],
        ))
    return rows


def read_csv(source: str | os.PathLike) -> list[ResultRow]:
    return parse_csv(Path(source).read_text())


def as_printed(row: ResultRow) -> ResultRow:
    """``row`` with its floats rounded the way the CSV prints them."""
    return ResultRow(**{
        **row.__dict__,
        "p_effective": float(_fmt(row.p_effective)),
        "metric": float(_fmt(row.metric)),
        "stderr": float(_fmt(row.stderr)),
    })


def merge_pairs(*layers: Mapping[str, str]) -> dict[str, str]:
    merged: dict[str, str] = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    return merged

