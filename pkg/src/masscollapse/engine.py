"""
Dense statevector and density-operator engine.

Basis convention: qubit 0 is the least-significant bit of the basis index,
so bitstrings print qubit 0 rightmost.

Gate kernels work in place on reshaped views of the amplitude array and
accept any number of leading batch axes, which is how the trajectory
backend evolves many noise realizations at once. A density operator is
handled as a 2n-qubit vector: row index bits are qubits n..2n-1 and column
index bits are qubits 0..n-1, so U rho U^dagger is U on the row copy of a
qubit and conj(U) on its column copy.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import ChannelError, InputError, QubitIndexError, ShapeError, SizeError

MAX_PURE_QUBITS = 16
MAX_MIXED_QUBITS = 10

_INV_SQRT2 = 1 / sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# ----------------------------------------------------------------------------
# Gates and circuits
# ----------------------------------------------------------------------------

class Scope(enum.Enum):
    ALL_QUBITS = "all"
    BRANCH_ANCILLAS_ONLY = "branch"


class Placement(enum.Enum):
    AFTER_PREP = "after_prep"
    PER_ITERATION = "per_iteration"


@dataclass(frozen=True)
class H:
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> np.ndarray:
        return _H


@dataclass(frozen=True)
class X:
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> np.ndarray:
        return _X


@dataclass(frozen=True)
class Z:
    q: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> np.ndarray:
        return _Z


@dataclass(frozen=True)
class RZ:
    """diag(e^{-i phi/2}, e^{i phi/2})."""

    q: int
    phi: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> np.ndarray:
        return np.array([[np.exp(-0.5j * self.phi), 0], [0, np.exp(0.5j * self.phi)]])


@dataclass(frozen=True)
class EquatorialPulse:
    """pi/2 rotation about the equatorial axis at azimuth ``phi``."""

    q: int
    phi: float

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,)

    def matrix(self) -> np.ndarray:
        off = -1j * np.exp(-1j * self.phi)
        return _INV_SQRT2 * np.array([[1, off], [-1j * np.exp(1j * self.phi), 1]])


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


@dataclass(frozen=True)
class MCZ:
    """Phase flip on the basis states where every listed qubit is 1."""

    targets: tuple[int, ...]

    def __init__(self, targets: Iterable[int]):
        object.__setattr__(self, "targets", tuple(targets))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets


GateOp = Union[H, X, Z, RZ, EquatorialPulse, CNOT, MCZ]


@dataclass(frozen=True)
class NoiseSite:
    """Marker for where a noise sweep injects dephasing."""

    scope: Scope = Scope.ALL_QUBITS
    placement: Placement = Placement.AFTER_PREP


def validate_op(op, n_qubits: int) -> None:
    if isinstance(op, NoiseSite):
        return
    qubits = op.qubits
    if isinstance(op, MCZ) and not qubits:
        raise QubitIndexError("MCZ needs a nonempty qubit set")
    if isinstance(op, CNOT) and op.control == op.target:
        raise QubitIndexError(f"CNOT control equals target ({op.control})")
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"repeated qubit in {op}")
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise QubitIndexError(f"qubit {q} out of range for {n_qubits} qubits in {op}")


@dataclass
class Circuit:
    n_qubits: int
    ops: list = field(default_factory=list)

    def __post_init__(self):
        self.ops = list(self.ops)
        for op in self.ops:
            validate_op(op, self.n_qubits)

    def append(self, op) -> "Circuit":
        validate_op(op, self.n_qubits)
        self.ops.append(op)
        return self

    def extend(self, ops: Iterable) -> "Circuit":
        for op in ops:
            self.append(op)
        return self

    @property
    def noise_sites(self) -> list[NoiseSite]:
        return [op for op in self.ops if isinstance(op, NoiseSite)]


# ----------------------------------------------------------------------------
# States
# ----------------------------------------------------------------------------

@dataclass
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_PURE_QUBITS:
            raise SizeError(f"pure state supports 1..{MAX_PURE_QUBITS} qubits, got {self.n_qubits}")
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ShapeError(f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class MixedState:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_MIXED_QUBITS:
            raise SizeError(f"mixed state supports 1..{MAX_MIXED_QUBITS} qubits, got {self.n_qubits}")
        dim = 1 << self.n_qubits
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (dim, dim):
            raise ShapeError(f"expected {dim}x{dim} matrix, got {self.matrix.shape}")

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def zero_state(n: int) -> PureState:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_PURE_QUBITS:
        raise SizeError(f"qubit count must be in 1..{MAX_PURE_QUBITS}, got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return PureState(n, amps)


# ----------------------------------------------------------------------------
# In-place kernels over the trailing axis of shape (..., 2**n)
# ----------------------------------------------------------------------------

def _pair_view(a: np.ndarray, n: int, q: int) -> np.ndarray:
    return a.reshape(a.shape[:-1] + (1 << (n - q - 1), 2, 1 << q))


def _kernel_1q(a: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    v = _pair_view(a, n, q)
    lo = v[..., 0, :]
    hi = v[..., 1, :]
    if m[0, 1] == 0 and m[1, 0] == 0:
        if m[0, 0] != 1:
            lo *= m[0, 0]
        if m[1, 1] != 1:
            hi *= m[1, 1]
        return
    if m[0, 0] == 0 and m[1, 1] == 0 and m[0, 1] == 1 and m[1, 0] == 1:
        tmp = lo.copy()
        lo[...] = hi
        hi[...] = tmp
        return
    a0 = lo.copy()
    lo *= m[0, 0]
    lo += m[0, 1] * hi
    hi *= m[1, 1]
    hi += m[1, 0] * a0


def _tensor_index(n: int, fixed: Mapping[int, int]) -> tuple:
    idx = [slice(None)] * n
    for q, bit in fixed.items():
        idx[n - 1 - q] = bit
    return (Ellipsis,) + tuple(idx)


def _tensor_view(a: np.ndarray, n: int) -> np.ndarray:
    return a.reshape(a.shape[:-1] + (2,) * n)


def _kernel_cnot(a: np.ndarray, n: int, control: int, target: int) -> None:
    t = _tensor_view(a, n)
    i0 = _tensor_index(n, {control: 1, target: 0})
    i1 = _tensor_index(n, {control: 1, target: 1})
    tmp = t[i0].copy()
    t[i0] = t[i1]
    t[i1] = tmp


def _kernel_mcz(a: np.ndarray, n: int, qubits: Sequence[int]) -> None:
    t = _tensor_view(a, n)
    t[_tensor_index(n, {q: 1 for q in qubits})] *= -1


def _apply_op(a: np.ndarray, n: int, op) -> None:
    if isinstance(op, CNOT):
        _kernel_cnot(a, n, op.control, op.target)
    elif isinstance(op, MCZ):
        _kernel_mcz(a, n, op.targets)
    else:
        _kernel_1q(a, n, op.q, op.matrix())


def _apply_z_flags(a: np.ndarray, n: int, flags: np.ndarray) -> None:
    """Apply Z on qubit q of batch row b wherever ``flags[b, q]`` is set."""
    for q in range(flags.shape[-1]):
        rows = flags[:, q]
        if not rows.any():
            continue
        v = _pair_view(a, n, q)
        v[rows, :, 1, :] *= -1


def _apply_dm_op(flat: np.ndarray, n: int, op) -> None:
    if isinstance(op, CNOT):
        _kernel_cnot(flat, 2 * n, op.control + n, op.target + n)
        _kernel_cnot(flat, 2 * n, op.control, op.target)
    elif isinstance(op, MCZ):
        _kernel_mcz(flat, 2 * n, [q + n for q in op.targets])
        _kernel_mcz(flat, 2 * n, op.targets)
    else:
        m = op.matrix()
        _kernel_1q(flat, 2 * n, op.q + n, m)
        _kernel_1q(flat, 2 * n, op.q, m.conj())


# ----------------------------------------------------------------------------
# Pure-state operations
# ----------------------------------------------------------------------------

def apply_gate(state: PureState, gate: GateOp) -> PureState:
    validate_op(gate, state.n_qubits)
    amps = state.amplitudes.copy()
    _apply_op(amps, state.n_qubits, gate)
    return PureState(state.n_qubits, amps)


NoiseResolver = Callable[[NoiseSite], Iterable[int]]


def apply_circuit(state: PureState, circuit: Circuit, noise_resolver: NoiseResolver | None = None) -> PureState:
    """Run ``circuit`` on ``state``.

    At every NoiseSite the resolver returns the qubits that receive a Z in
    this realization; without a resolver NoiseSites are no-ops.
    """
    if circuit.n_qubits != state.n_qubits:
        raise ShapeError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    n = state.n_qubits
    amps = state.amplitudes.copy()
    for op in circuit.ops:
        if isinstance(op, NoiseSite):
            if noise_resolver is None:
                continue
            for q in noise_resolver(op):
                validate_op(Z(q), n)
                _kernel_1q(amps, n, q, _Z)
        else:
            _apply_op(amps, n, op)
    return PureState(n, amps)


def apply_circuit_batch(batch: np.ndarray, n_qubits: int, ops: Sequence, z_flags: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Evolve a (B, 2**n) batch of amplitude vectors in place.

    ``z_flags[k]`` is a (B, n) boolean array giving the Z pattern of each
    row at the k-th NoiseSite in ``ops``.
    """
    if batch.ndim != 2 or batch.shape[1] != 1 << n_qubits:
        raise ShapeError(f"batch shape {batch.shape} does not match {n_qubits} qubits")
    site = 0
    for op in ops:
        if isinstance(op, NoiseSite):
            if site < len(z_flags):
                flags = np.asarray(z_flags[site], dtype=bool)
                if flags.shape != (batch.shape[0], n_qubits):
                    raise ShapeError(f"noise flags shape {flags.shape} at site {site}")
                _apply_z_flags(batch, n_qubits, flags)
            site += 1
        else:
            validate_op(op, n_qubits)
            _apply_op(batch, n_qubits, op)
    return batch


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def sample_counts(state: PureState, shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Histogram of ``shots`` independent computational-basis measurements."""
    if shots < 1:
        raise InputError(f"shots must be >= 1, got {shots}")
    probs = state.probabilities()
    draws = rng.multinomial(shots, probs / probs.sum())
    return {bitstring(int(i), state.n_qubits): int(draws[i]) for i in np.flatnonzero(draws)}


def marginal_counts(counts: Mapping[str, int], qubits: Sequence[int]) -> dict[str, int]:
    """Restrict a histogram to ``qubits`` (printed highest index leftmost)."""
    out: dict[str, int] = {}
    for bits, c in counts.items():
        n = len(bits)
        key = "".join(bits[n - 1 - q] for q in sorted(qubits, reverse=True))
        out[key] = out.get(key, 0) + c
    return out


def parity_expectation(counts: Mapping[str, int]) -> float:
    total = sum(counts.values())
    if not counts or total <= 0:
        raise InputError("parity of an empty histogram")
    signed = sum(c if bits.count("1") % 2 == 0 else -c for bits, c in counts.items())
    return signed / total


def parity_signs(n_qubits: int) -> np.ndarray:
    """(-1)**popcount(i) for every basis index i."""
    signs = np.ones(1 << n_qubits)
    for q in range(n_qubits):
        _pair_view(signs, n_qubits, q)[..., 1, :] *= -1
    return signs


# ----------------------------------------------------------------------------
# Density-operator operations
# ----------------------------------------------------------------------------

def dm_from_pure(state: PureState) -> MixedState:
    a = state.amplitudes
    return MixedState(state.n_qubits, np.outer(a, a.conj()))


def dm_apply_gate(state: MixedState, gate: GateOp) -> MixedState:
    n = state.n_qubits
    validate_op(gate, n)
    flat = state.matrix.reshape(-1).copy()
    _apply_dm_op(flat, n, gate)
    return MixedState(n, flat.reshape(state.matrix.shape))


def check_kraus(kraus: Sequence[np.ndarray], atol: float = 1e-12) -> list[np.ndarray]:
    ks = [np.asarray(k, dtype=np.complex128) for k in kraus]
    if not ks or any(k.shape != (2, 2) for k in ks):
        raise ChannelError("Kraus set must be a nonempty list of 2x2 matrices")
    total = sum(k.conj().T @ k for k in ks)
    if not np.allclose(total, np.eye(2), rtol=0, atol=atol):
        raise ChannelError(f"Kraus set is not complete: sum K^dag K = {total.tolist()}")
    return ks


def _dm_channel_flat(flat: np.ndarray, n: int, kraus: Sequence[np.ndarray], q: int) -> np.ndarray:
    out = np.zeros_like(flat)
    for k in kraus:
        term = flat.copy()
        _kernel_1q(term, 2 * n, q + n, k)
        _kernel_1q(term, 2 * n, q, k.conj())
        out += term
    return out


def dm_apply_channel(state: MixedState, kraus: Sequence[np.ndarray], target: int) -> MixedState:
    n = state.n_qubits
    validate_op(Z(target), n)
    ks = check_kraus(kraus)
    flat = _dm_channel_flat(state.matrix.reshape(-1), n, ks, target)
    return MixedState(n, flat.reshape(state.matrix.shape))


def dm_batch_probabilities(flat: np.ndarray, n_qubits: int, ops: Sequence) -> np.ndarray:
    """Evolve a (B, 4**n) batch of flattened density operators; return (B, 2**n) diagonals."""
    flat = flat.copy()
    for op in ops:
        validate_op(op, n_qubits)
        _apply_dm_op(flat, n_qubits, op)
    dim = 1 << n_qubits
    return np.real(flat[:, ::dim + 1])


ChannelResolver = Callable[[NoiseSite], Mapping[int, Sequence[np.ndarray]]]


def dm_apply_circuit(state: MixedState, circuit: Circuit, channel_resolver: ChannelResolver | None = None) -> MixedState:
    """Exact evolution; at each NoiseSite the resolver maps qubit -> Kraus set."""
    if circuit.n_qubits != state.n_qubits:
        raise ShapeError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    n = state.n_qubits
    flat = state.matrix.reshape(-1).copy()
    for op in circuit.ops:
        if isinstance(op, NoiseSite):
            if channel_resolver is None:
                continue
            for q, kraus in channel_resolver(op).items():
                validate_op(Z(q), n)
                flat = _dm_channel_flat(flat, n, check_kraus(kraus), q)
        else:
            _apply_dm_op(flat, n, op)
    return MixedState(n, flat.reshape(state.matrix.shape))
