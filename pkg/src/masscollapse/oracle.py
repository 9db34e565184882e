"""Closed-form predictions used as ground truth for the simulators.

Noisy Grover search has no closed form here: dephasing breaks the
two-dimensional invariant subspace, so the exact backend is its reference.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .engine import Scope
from .errors import SizeError
from .noise import Constant, NoiseSpec, noise_probability


class Derivation(enum.Enum):
    GHZ_CLOSED_FORM = "ghz"
    BRANCH_CLOSED_FORM = "branch"
    GROVER_NOISELESS = "grover"


@dataclass(frozen=True)
class Prediction:
    metric: float
    derivation: Derivation

    def __post_init__(self):
        if not 0 <= self.metric <= 1:
            raise ValueError(f"prediction {self.metric} outside [0, 1]")


def predict_ghz_visibility(spec: NoiseSpec, n: int) -> float:
    # every qubit attenuates the |0..0><1..1| coherence by 1 - 2p
    if n < 2:
        raise SizeError(f"GHZ needs at least 2 qubits, got {n}")
    return (1 - 2 * noise_probability(spec, n)) ** n


def predict_branch_visibility(spec: NoiseSpec, m: int) -> float:
    """Fringe visibility of the control qubit after ``m`` ancillas join its |1> branch.

    Ancilla-only dephasing gives (1 - 2 p(m))**m; dephasing every qubit
    (control included) gives (1 - 2 p)**(m + 1).
    """
    if m < 0:
        raise SizeError(f"branch mass must be >= 0, got {m}")
    p = noise_probability(spec, m)
    if spec.scope is Scope.BRANCH_ANCILLAS_ONLY:
        return (1 - 2 * p) ** m
    return (1 - 2 * p) ** (m + 1)


def grover_noiseless_success(n: int, t: int) -> float:
    if n < 2 or t < 0:
        raise SizeError(f"need n >= 2 and t >= 0, got n={n}, t={t}")
    theta = math.asin(2 ** (-n / 2))
    return math.sin((2 * t + 1) * theta) ** 2


def predict(kind: str, spec: NoiseSpec, size: int, iterations: int = 0) -> Prediction:
    if kind == "ghz":
        return Prediction(predict_ghz_visibility(spec, size), Derivation.GHZ_CLOSED_FORM)
    if kind == "branch":
        return Prediction(predict_branch_visibility(spec, size), Derivation.BRANCH_CLOSED_FORM)
    if kind == "grover":
        if not (isinstance(spec.law, Constant) and spec.law.p0 == 0):
            raise ValueError("Grover has a closed form only without noise")
        return Prediction(grover_noiseless_success(size, iterations), Derivation.GROVER_NOISELESS)
    raise ValueError(f"unknown experiment {kind!r}")
