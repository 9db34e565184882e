"""Dephasing channels and the size-dependent laws that set their strength."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .engine import Placement, Scope
from .errors import ParameterError

P_MAX = 0.5


def _clamp(p: float) -> float:
    return min(max(p, 0.0), P_MAX)


@dataclass(frozen=True)
class Constant:
    p0: float = 0.08
    label = "constant"

    def __post_init__(self):
        if not 0 <= self.p0 <= P_MAX:
            raise ParameterError(f"p0 must be in [0, {P_MAX}], got {self.p0}")

    def probability(self, size: int) -> float:
        return float(self.p0)


@dataclass(frozen=True)
class PowerLaw:
    """p = k * size**alpha, clamped to [0, 0.5]."""

    k: float = 0.02
    alpha: float = 2.0
    label = "power"

    def __post_init__(self):
        _check_strength(self.k, self.alpha)

    def probability(self, size: int) -> float:
        if size == 0:
            return 0.0
        try:
            raw = self.k * float(size) ** self.alpha
        except OverflowError:
            raw = math.inf
        return _clamp(raw)


@dataclass(frozen=True)
class ExpSaturating:
    """p = 1 - exp(-k * size**alpha), clamped to [0, 0.5]."""

    k: float = 0.02
    alpha: float = 2.0
    label = "exp"

    def __post_init__(self):
        _check_strength(self.k, self.alpha)

    def probability(self, size: int) -> float:
        if size == 0:
            return 0.0
        try:
            raw = self.k * float(size) ** self.alpha
        except OverflowError:
            raw = math.inf
        return _clamp(-math.expm1(-raw))


def _check_strength(k: float, alpha: float) -> None:
    if not k >= 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if not alpha >= 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")


NoiseLaw = Union[Constant, PowerLaw, ExpSaturating]


@dataclass(frozen=True)
class NoiseSpec:
    law: NoiseLaw = field(default_factory=PowerLaw)
    placement: Placement = Placement.AFTER_PREP
    scope: Scope = Scope.ALL_QUBITS


NOISELESS = NoiseSpec(Constant(0.0))


def noise_probability(spec: NoiseSpec | NoiseLaw, size: int) -> float:
    if size < 0:
        raise ParameterError(f"size must be >= 0, got {size}")
    law = spec.law if isinstance(spec, NoiseSpec) else spec
    return law.probability(size)


def _check_p(p: float) -> None:
    if not 0 <= p <= P_MAX:
        raise ParameterError(f"dephasing probability must be in [0, {P_MAX}], got {p}")


@dataclass(frozen=True)
class DephasingChannel:
    p: float

    def __post_init__(self):
        _check_p(self.p)

    @property
    def attenuation(self) -> float:
        return 1 - 2 * self.p

    def kraus(self) -> list[np.ndarray]:
        return phase_flip_kraus(self.p)


def phase_flip_kraus(p: float) -> list[np.ndarray]:
    _check_p(p)
    return [
        math.sqrt(1 - p) * np.eye(2, dtype=complex),
        math.sqrt(p) * np.diag([1, -1]).astype(complex),
    ]


def phase_damping_lambda(p: float) -> float:
    _check_p(p)
    return 1 - (1 - 2 * p) ** 2


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    if not 0 <= lam <= 1:
        raise ParameterError(f"damping parameter must be in [0, 1], got {lam}")
    return [
        np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex),
        np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex),
    ]


def sample_z_action(p: float, rng: np.random.Generator) -> bool:
    _check_p(p)
    return bool(rng.random() < p)


def sample_z_actions(p: float, shape, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`sample_z_action`; same stream usage per draw."""
    _check_p(p)
    return rng.random(shape) < p
