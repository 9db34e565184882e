"""
Experiment circuits (GHZ parity scan, branch-mass interferometer, Grover
search) and their headline metrics on either backend.

Trajectory runs draw an independent Z pattern per shot at every NoiseSite,
group shots that share a pattern, evolve each distinct pattern once and
draw that group's shots from the resulting distribution. Grouping only
reorders i.i.d. draws, so the estimates are the plain per-shot unraveling.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import engine
from .engine import (
    CNOT, H, MCZ, RZ, Circuit, EquatorialPulse, NoiseSite, Placement, Scope, X,
)
from .errors import InputError, ParameterError, SamplingError, SizeError
from .noise import NOISELESS, NoiseSpec, noise_probability, phase_flip_kraus, sample_z_actions

DEFAULT_PHASE_POINTS = 64
DEFAULT_SHOTS = 2000
_BATCH_AMPLITUDES = 1 << 20


class Backend(enum.Enum):
    TRAJECTORY = "trajectory"
    EXACT = "exact"


@dataclass(frozen=True)
class GhzParity:
    n: int
    label = "ghz"


@dataclass(frozen=True)
class BranchMass:
    m: int
    label = "branch"


@dataclass(frozen=True)
class Grover:
    n: int
    iterations: int
    label = "grover"


ExperimentKind = Union[GhzParity, BranchMass, Grover]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: ExperimentKind
    noise: NoiseSpec = NOISELESS
    phase_points: int = DEFAULT_PHASE_POINTS
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    backend: Backend = Backend.TRAJECTORY

    def __post_init__(self):
        kind = self.kind
        if isinstance(kind, GhzParity):
            if not 2 <= kind.n <= 12:
                raise SizeError(f"GHZ size must be in 2..12, got {kind.n}")
            if self.phase_points <= 2 * kind.n:
                raise SamplingError(f"need more than {2 * kind.n} phase points for n={kind.n}")
        elif isinstance(kind, BranchMass):
            if not 0 <= kind.m <= 12:
                raise SizeError(f"branch mass must be in 0..12, got {kind.m}")
            if self.phase_points <= 2:
                raise SamplingError("need more than 2 phase points")
        elif isinstance(kind, Grover):
            if not 3 <= kind.n <= 5:
                raise SizeError(f"Grover size must be in 3..5, got {kind.n}")
            if not 1 <= kind.iterations <= 7:
                raise SizeError(f"Grover iterations must be in 1..7, got {kind.iterations}")
        else:
            raise InputError(f"unknown experiment kind {kind!r}")
        if self.shots < 1:
            raise ParameterError(f"shots must be >= 1, got {self.shots}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


# ----------------------------------------------------------------------------
# Parity curves and visibility
# ----------------------------------------------------------------------------

@dataclass
class ParityCurve:
    phases: np.ndarray
    parity: np.ndarray
    stderr: np.ndarray = field(default=None)

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.parity = np.asarray(self.parity, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.parity)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if not (self.phases.shape == self.parity.shape == self.stderr.shape) or self.phases.ndim != 1:
            raise InputError("phases, parity and stderr must be 1-D and of equal length")
        if np.any(np.diff(self.phases) <= 0) or (self.phases.size and (self.phases[0] < 0 or self.phases[-1] >= 2 * math.pi)):
            raise InputError("phases must be strictly increasing within [0, 2*pi)")
        if np.any(np.abs(self.parity) > 1 + 1e-12):
            raise InputError("parity values must lie in [-1, 1]")
        if np.any(self.stderr < 0):
            raise InputError("stderr must be nonnegative")


def phase_grid(points: int) -> np.ndarray:
    return 2 * math.pi * np.arange(points) / points


def visibility_from_curve(curve: ParityCurve, harmonic: int, method: str = "fourier") -> float:
    """Oscillation amplitude of ``curve`` at the given harmonic.

    ``method="fourier"`` (default) takes twice the magnitude of the discrete
    Fourier coefficient; ``method="peak"`` returns (max - min) / 2, which is
    biased upward by shot noise.
    """
    m = curve.parity.size
    if m <= 2 * harmonic:
        raise SamplingError(f"{m} phase points cannot resolve harmonic {harmonic}")
    if method == "peak":
        return float((curve.parity.max() - curve.parity.min()) / 2)
    if method != "fourier":
        raise InputError(f"unknown visibility estimator {method!r}")
    coeff = np.mean(curve.parity * np.exp(-1j * harmonic * curve.phases))
    return float(2 * abs(coeff))


def visibility_stderr(curve: ParityCurve, harmonic: int) -> float:
    """Standard error of the Fourier visibility, treating phase points as independent.

    The variance is projected on the direction of the fitted coefficient;
    at zero amplitude the direction is undefined and the average over
    directions is used.
    """
    m = curve.parity.size
    var = curve.stderr ** 2
    angle = harmonic * curve.phases
    coeff = np.mean(curve.parity * np.exp(-1j * angle))
    if abs(coeff) > 0:
        weights = np.cos(angle + np.angle(coeff)) ** 2
    else:
        weights = np.full(m, 0.5)
    return float(2 * math.sqrt(np.sum(var * weights)) / m)


# ----------------------------------------------------------------------------
# Shared scan machinery
# ----------------------------------------------------------------------------

def _common_prefix(circuits: Sequence[Circuit]) -> int:
    first = circuits[0].ops
    k = 0
    while k < len(first) and all(k < len(c.ops) and c.ops[k] == first[k] for c in circuits[1:]):
        k += 1
    return k


def _site_qubits(site: NoiseSite, n_qubits: int) -> range:
    if site.scope is Scope.BRANCH_ANCILLAS_ONLY:
        return range(1, n_qubits)
    return range(n_qubits)


def _channel_resolver(p: float, n_qubits: int):
    kraus = phase_flip_kraus(p)

    def resolve(site: NoiseSite):
        if p == 0:
            return {}
        return {q: kraus for q in _site_qubits(site, n_qubits)}

    return resolve


def exact_distributions(circuits: Sequence[Circuit], p: float) -> list[np.ndarray]:
    """Outcome distributions of each circuit on the density-operator backend."""
    n = circuits[0].n_qubits
    resolver = _channel_resolver(p, n)
    k = _common_prefix(circuits)
    prefix = Circuit(n, circuits[0].ops[:k])
    rho = engine.dm_apply_circuit(engine.dm_from_pure(engine.zero_state(n)), prefix, resolver)
    out = []
    for c in circuits:
        final = engine.dm_apply_circuit(rho, Circuit(n, c.ops[k:]), resolver)
        out.append(np.clip(final.probabilities(), 0.0, None))
    return out


def _draw_flags(circuit: Circuit, p: float, shots: int, rng: np.random.Generator) -> np.ndarray:
    """(shots, sites * n) Z pattern for one circuit; out-of-scope qubits stay False."""
    n = circuit.n_qubits
    sites = circuit.noise_sites
    flags = np.zeros((shots, len(sites), n), dtype=bool)
    for s, site in enumerate(sites):
        qubits = list(_site_qubits(site, n))
        if qubits and p > 0:
            flags[:, s, qubits] = sample_z_actions(p, (shots, len(qubits)), rng)
    return flags.reshape(shots, len(sites) * n)


def _reduced_dms(states: np.ndarray, n: int, measured: Sequence[int]) -> np.ndarray:
    """(B, 4**k) flattened reduced density operators on ``measured`` (ascending)."""
    k = len(measured)
    t = states.reshape((states.shape[0],) + (2,) * n)
    keep = [1 + n - 1 - q for q in reversed(measured)]
    rest = [ax for ax in range(1, n + 1) if ax not in keep]
    t = t.transpose([0] + rest + keep).reshape(states.shape[0], -1, 1 << k)
    return np.einsum("bia,bic->bac", t, t.conj()).reshape(states.shape[0], -1)


def _remap(op, position: dict):
    if isinstance(op, CNOT):
        return CNOT(position[op.control], position[op.target])
    if isinstance(op, MCZ):
        return MCZ(position[q] for q in op.targets)
    return dataclasses.replace(op, q=position[op.q])


def trajectory_histograms(circuits: Sequence[Circuit], p: float, shots: int,
                          rngs: Sequence[np.random.Generator],
                          measured: Sequence[int] | None = None) -> list[np.ndarray]:
    """Outcome counts over the ``measured`` qubits (default all), one stream per circuit.

    Histogram index bit i refers to the i-th measured qubit in ascending order.
    """
    n = circuits[0].n_qubits
    measured = sorted(range(n) if measured is None else set(measured))
    k = _common_prefix(circuits)
    prefix_ops = circuits[0].ops[:k]
    prefix_sites = sum(isinstance(op, NoiseSite) for op in prefix_ops)
    n_sites = len(circuits[0].noise_sites)
    if any(len(c.noise_sites) != n_sites for c in circuits):
        raise InputError("scanned circuits must share their noise sites")
    # a noiseless tail confined to the measured qubits only needs their reduced state
    position = {q: i for i, q in enumerate(measured)}
    reduced = len(measured) < n and prefix_sites == n_sites and all(
        set(op.qubits) <= position.keys() for c in circuits for op in c.ops[k:])

    flags = [_draw_flags(c, p, shots, rng) for c, rng in zip(circuits, rngs)]
    patterns, inverse = np.unique(np.concatenate(flags), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    group_counts = [np.bincount(inverse[j * shots:(j + 1) * shots], minlength=len(patterns))
                    for j in range(len(circuits))]
    site_flags = patterns.reshape(len(patterns), n_sites, n)
    tails = [[_remap(op, position) for op in c.ops[k:]] for c in circuits] if reduced else None

    dim = 1 << n
    hists = [np.zeros(1 << len(measured), dtype=np.int64) for _ in circuits]
    chunk = max(1, _BATCH_AMPLITUDES // dim)
    for start in range(0, len(patterns), chunk):
        stop = min(start + chunk, len(patterns))
        batch = np.zeros((stop - start, dim), dtype=np.complex128)
        batch[:, 0] = 1.0
        pre_flags = [site_flags[start:stop, s] for s in range(prefix_sites)]
        engine.apply_circuit_batch(batch, n, prefix_ops, pre_flags)
        rhos = _reduced_dms(batch, n, measured) if reduced else None
        for j, c in enumerate(circuits):
            counts = group_counts[j][start:stop]
            rows = np.flatnonzero(counts)
            if rows.size == 0:
                continue
            if reduced:
                probs = engine.dm_batch_probabilities(rhos[rows], len(measured), tails[j])
            else:
                states = batch[rows]
                tail_flags = [site_flags[start:stop, s][rows] for s in range(prefix_sites, n_sites)]
                engine.apply_circuit_batch(states, n, c.ops[k:], tail_flags)
                probs = np.abs(states) ** 2
                if len(measured) < n:
                    probs = _reduced_dms(states, n, measured)
                    probs = np.real(probs[:, ::(1 << len(measured)) + 1])
            probs = np.clip(probs, 0.0, None)
            probs /= probs.sum(axis=1, keepdims=True)
            draws = rngs[j].multinomial(counts[rows], probs)
            hists[j] += draws.sum(axis=0)
    return hists


def _histogram_to_counts(hist: np.ndarray, n_qubits: int) -> dict[str, int]:
    return {engine.bitstring(int(i), n_qubits): int(hist[i]) for i in np.flatnonzero(hist)}


def _phase_streams(seed: int, points: int) -> list[np.random.Generator]:
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,))) for j in range(points)]


def _scan(circuits: list[Circuit], phases: np.ndarray, p: float, config: ExperimentConfig,
          measured: Sequence[int]) -> ParityCurve:
    n = circuits[0].n_qubits
    if config.backend is Backend.EXACT:
        signs = engine.parity_signs(n)
        if len(measured) != n:
            signs = np.ones(1 << n)
            for q in measured:
                signs *= 1 - 2 * ((np.arange(1 << n) >> q) & 1)
        parity = np.array([float(np.dot(d, signs)) for d in exact_distributions(circuits, p)])
        parity = np.clip(parity, -1.0, 1.0)
        return ParityCurve(phases, parity, np.zeros_like(parity))

    hists = trajectory_histograms(circuits, p, config.shots, _phase_streams(config.seed, len(circuits)),
                                  measured)
    parity = np.array([engine.parity_expectation(_histogram_to_counts(h, len(measured))) for h in hists])
    stderr = np.sqrt((1 - parity ** 2) / config.shots)
    return ParityCurve(phases, parity, stderr)


# ----------------------------------------------------------------------------
# GHZ parity
# ----------------------------------------------------------------------------

def build_ghz(n: int) -> Circuit:
    if n < 2:
        raise SizeError(f"GHZ needs at least 2 qubits, got {n}")
    ops = [H(0)] + [CNOT(q, q + 1) for q in range(n - 1)]
    ops.append(NoiseSite(Scope.ALL_QUBITS, Placement.AFTER_PREP))
    return Circuit(n, ops)


def ghz_curve(config: ExperimentConfig) -> ParityCurve:
    n = config.kind.n
    phases = phase_grid(config.phase_points)
    base = build_ghz(n)
    circuits = [Circuit(n, base.ops + [EquatorialPulse(q, phi) for q in range(n)]) for phi in phases]
    return _scan(circuits, phases, noise_probability(config.noise, n), config, range(n))


def run_ghz_parity(config: ExperimentConfig) -> tuple[ParityCurve, float]:
    if not isinstance(config.kind, GhzParity):
        raise InputError("run_ghz_parity needs a GhzParity config")
    curve = ghz_curve(config)
    return curve, visibility_from_curve(curve, config.kind.n)


# ----------------------------------------------------------------------------
# Branch-mass interferometer
# ----------------------------------------------------------------------------

def build_branch(m: int, phase: float = 0.0, scope: Scope = Scope.BRANCH_ANCILLAS_ONLY) -> Circuit:
    """Control qubit 0 fans out to ancillas 1..m, which are uncomputed after the noise."""
    if m < 0:
        raise SizeError(f"branch mass must be >= 0, got {m}")
    fan = [CNOT(0, a) for a in range(1, m + 1)]
    ops = [H(0), *fan, NoiseSite(scope, Placement.AFTER_PREP), *reversed(fan), RZ(0, phase), H(0)]
    return Circuit(m + 1, ops)


def branch_probability(config: ExperimentConfig) -> float:
    m = config.kind.m
    return noise_probability(config.noise, m)


def branch_curve(config: ExperimentConfig) -> ParityCurve:
    """<Z> of the control qubit versus interferometer phase."""
    if not isinstance(config.kind, BranchMass):
        raise InputError("branch protocol needs a BranchMass config")
    m = config.kind.m
    phases = phase_grid(config.phase_points)
    circuits = [build_branch(m, phi, config.noise.scope) for phi in phases]
    return _scan(circuits, phases, branch_probability(config), config, [0])


def run_branch(config: ExperimentConfig) -> float:
    return visibility_from_curve(branch_curve(config), 1)


# ----------------------------------------------------------------------------
# Grover search
# ----------------------------------------------------------------------------

def build_grover(n: int, t: int) -> Circuit:
    """Grover search for |1...1>, with a per-iteration NoiseSite after each round."""
    if n < 2:
        raise SizeError(f"Grover needs at least 2 qubits, got {n}")
    if t < 0:
        raise SizeError(f"iteration count must be >= 0, got {t}")
    every = range(n)
    ops = [H(q) for q in every]
    for _ in range(t):
        ops.append(MCZ(every))
        ops += [H(q) for q in every]
        ops += [X(q) for q in every]
        ops.append(MCZ(every))
        ops += [X(q) for q in every]
        ops += [H(q) for q in every]
        ops.append(NoiseSite(Scope.ALL_QUBITS, Placement.PER_ITERATION))
    return Circuit(n, ops)


def run_grover(config: ExperimentConfig) -> float:
    if not isinstance(config.kind, Grover):
        raise InputError("run_grover needs a Grover config")
    n, t = config.kind.n, config.kind.iterations
    circuit = build_grover(n, t)
    p = noise_probability(config.noise, n)
    marked = (1 << n) - 1
    if config.backend is Backend.EXACT:
        return float(exact_distributions([circuit], p)[0][marked])
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    hist = trajectory_histograms([circuit], p, config.shots, [rng])[0]
    return float(hist[marked] / config.shots)
