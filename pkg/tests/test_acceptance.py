"""Acceptance suite: one PASS/FAIL line per criterion (run with ``-s`` or read the captured output)."""
import math
import subprocess
import sys
import time
from pathlib import Path

import pytest

from masscollapse import cli
from masscollapse.engine import Scope
from masscollapse.noise import NOISELESS, Constant, NoiseSpec, PowerLaw
from masscollapse.oracle import grover_noiseless_success, predict_branch_visibility, predict_ghz_visibility
from masscollapse.protocols import (
    Backend, BranchMass, ExperimentConfig, GhzParity, Grover, branch_curve, build_grover, exact_distributions,
    ghz_curve, run_branch, run_ghz_parity, run_grover, visibility_from_curve, visibility_stderr,
)
from masscollapse.runner import parse_config, read_csv, run_sweep

pytestmark = pytest.mark.slow

MASS = PowerLaw(0.02, 2.0)
CONST = Constant(0.08)
TESTS = Path(__file__).parent


def report(capsys, name: str, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


def binomial_sigma(p: float, shots: int) -> float:
    return math.sqrt(p * (1 - p) / shots)


def test_c1_oracle_matches_exact_backend(capsys):
    start = time.perf_counter()
    worst = 0.0
    for n in range(2, 9):
        for law in (MASS, CONST):
            spec = NoiseSpec(law)
            _, vis = run_ghz_parity(ExperimentConfig(GhzParity(n), spec, backend=Backend.EXACT))
            worst = max(worst, abs(vis - predict_ghz_visibility(spec, n)))
    for m in range(10):
        for spec in (NoiseSpec(MASS, scope=Scope.BRANCH_ANCILLAS_ONLY), NoiseSpec(CONST)):
            vis = run_branch(ExperimentConfig(BranchMass(m), spec, backend=Backend.EXACT))
            worst = max(worst, abs(vis - predict_branch_visibility(spec, m)))
    for n in range(3, 6):
        for t in range(8):
            if t == 0:
                success = float(exact_distributions([build_grover(n, 0)], 0.0)[0][-1])
            else:
                success = run_grover(ExperimentConfig(Grover(n, t), NOISELESS, backend=Backend.EXACT))
            worst = max(worst, abs(success - grover_noiseless_success(n, t)))
    elapsed = time.perf_counter() - start
    report(capsys, "criterion 1 oracle equivalence", worst <= 1e-9 and elapsed < 30,
           f"max |oracle - exact| = {worst:.2e} (tol 1e-9), runtime {elapsed:.1f} s (limit 30 s)")


def test_c2_backend_agreement(capsys):
    start = time.perf_counter()
    shots = 20000
    lines, ok = [], True

    def compare(label, measured, sigma, exact):
        nonlocal ok
        z = abs(measured - exact) / sigma
        ok = ok and z <= 4
        lines.append(f"{label} {measured:.4f} vs {exact:.4f} ({z:.1f} sigma)")

    for law in (MASS, CONST):
        config = ExperimentConfig(GhzParity(4), NoiseSpec(law), shots=shots, seed=11)
        curve = ghz_curve(config)
        exact = run_ghz_parity(ExperimentConfig(GhzParity(4), NoiseSpec(law), backend=Backend.EXACT))[1]
        compare(f"ghz n=4 {law.label}", visibility_from_curve(curve, 4), visibility_stderr(curve, 4), exact)
    spec = NoiseSpec(MASS, scope=Scope.BRANCH_ANCILLAS_ONLY)
    curve = branch_curve(ExperimentConfig(BranchMass(3), spec, shots=shots, seed=12))
    exact = run_branch(ExperimentConfig(BranchMass(3), spec, backend=Backend.EXACT))
    compare("branch m=3 power", visibility_from_curve(curve, 1), visibility_stderr(curve, 1), exact)
    kind, spec = Grover(3, 2), NoiseSpec(CONST)
    exact = run_grover(ExperimentConfig(kind, spec, backend=Backend.EXACT))
    measured = run_grover(ExperimentConfig(kind, spec, shots=shots, seed=13))
    compare("grover n=3 t=2 constant", measured, binomial_sigma(exact, shots), exact)
    elapsed = time.perf_counter() - start
    report(capsys, "criterion 2 backend agreement", ok and elapsed < 60,
           "; ".join(lines) + f"; runtime {elapsed:.1f} s (limit 60 s)")


def test_c3_ghz_trend(capsys):
    rows = run_sweep(parse_config("experiment=ghz sizes=5..8 seed=42"))
    mass = {r.size: r.metric for r in rows if r.law == "power"}
    const8 = next(r.metric for r in rows if r.law == "constant" and r.size == 8)
    ok = all(v <= 0.02 for v in mass.values()) and const8 >= 0.20
    detail = ", ".join(f"n={n}: {v:.4f}" for n, v in sorted(mass.items()))
    report(capsys, "criterion 3 GHZ suppression", ok,
           f"power {detail} (limit 0.02); constant n=8 {const8:.4f} (floor 0.20)")


def test_c4_branch_trend(capsys):
    rows = run_sweep(parse_config("experiment=branch sizes=4..12 seed=42"))
    power = {r.size: r for r in rows if r.law == "power"}
    const4 = next(r for r in rows if r.law == "constant" and r.size == 4)
    z_power = abs(power[4].metric - 0.0168) / power[4].stderr
    z_const = abs(const4.metric - 0.4182) / const4.stderr
    tail = max(power[m].metric for m in range(5, 13))
    ok = z_power <= 4 and z_const <= 4 and tail <= 0.02
    report(capsys, "criterion 4 branch suppression", ok,
           f"power m=4 {power[4].metric:.4f} ({z_power:.1f} sigma from 0.0168); max m>=5 {tail:.4f} (limit 0.02); "
           f"constant m=4 {const4.metric:.4f} ({z_const:.1f} sigma from 0.4182)")


def test_c5a_noiseless_grover(capsys):
    measured = run_grover(ExperimentConfig(Grover(3, 2), NOISELESS, shots=2000, seed=42))
    z = abs(measured - 0.9453) / binomial_sigma(0.9453, 2000)
    report(capsys, "criterion 5a noiseless Grover", z <= 4, f"n=3 t=2 success {measured:.4f} ({z:.1f} sigma from 0.9453)")


@pytest.fixture(scope="module")
def clamped_grover():
    out = []
    for t in range(1, 8):
        kind, spec = Grover(5, t), NoiseSpec(MASS)
        exact = run_grover(ExperimentConfig(kind, spec, backend=Backend.EXACT))
        measured = run_grover(ExperimentConfig(kind, spec, shots=2000, seed=42 + t))
        out.append((t, measured, exact))
    return out


def test_c5b_clamped_grover_tracks_exact(capsys, clamped_grover):
    z = [abs(m - e) / binomial_sigma(e, 2000) for _, m, e in clamped_grover]
    report(capsys, "criterion 5b mass-law Grover vs exact", max(z) <= 4,
           ", ".join(f"t={t}: {m:.4f}/{e:.4f}" for t, m, e in clamped_grover) + f" (max {max(z):.1f} sigma)")


def test_c5c_clamped_grover_below_baseline(capsys, clamped_grover):
    above = [(t, m) for t, m, _ in clamped_grover if not m < 0.2]
    report(capsys, "criterion 5c mass-law Grover below 0.2", not above,
           "all t below 0.2" if not above else
           "at or above 0.2 at " + ", ".join(f"t={t} ({m:.4f})" for t, m in above))


@pytest.fixture(scope="module")
def reproduce_runs(tmp_path_factory):
    runs = []
    for i in range(2):
        out = tmp_path_factory.mktemp(f"reproduce{i}")
        start = time.perf_counter()
        code = cli.main(["reproduce", "--seed", "42", "--out-dir", str(out)])
        runs.append((code, out, time.perf_counter() - start))
    return runs


def test_c6_reproduce_is_deterministic(capsys, reproduce_runs):
    (code_a, a, _), (code_b, b, _) = reproduce_runs
    names = ["ghz.csv", "branch.csv", "grover.csv"]
    same = [(a / f).read_bytes() == (b / f).read_bytes() for f in names]
    rows = sum(len(read_csv(a / f)) for f in names)
    report(capsys, "criterion 6 determinism", code_a == code_b == 0 and all(same),
           f"{sum(same)}/{len(names)} CSVs byte-identical across two runs ({rows} rows)")


def test_c7_property_suites(capsys):
    result = subprocess.run([sys.executable, "-m", "pytest", str(TESTS / "test_properties.py"), "-q", "-p",
                             "no:cacheprovider"], capture_output=True, text=True, cwd=TESTS.parent)
    summary = result.stdout.strip().splitlines()[-1] if result.stdout.strip() else result.stderr.strip()
    report(capsys, "criterion 7 property suites", result.returncode == 0, summary)


def test_c8_reproduce_runtime(capsys, reproduce_runs):
    code, _, elapsed = reproduce_runs[0]
    report(capsys, "criterion 8 reproduce runtime", code == 0 and elapsed < 300,
           f"full reproduce took {elapsed:.1f} s (limit 300 s)")
