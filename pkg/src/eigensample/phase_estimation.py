"""Phase estimation and spectral sampling of unitary circuits.

The estimator is textbook: t ancillas put into uniform superposition by
Hadamards, controlled powers U^(2^j), an exact inverse Fourier transform,
then measurement of the ancilla register most-significant-qubit-first.
Feeding an arbitrary basis state |b> instead of an eigenvector makes the
measured phase a sample from the spectral law sum_j |<b|eta_j>|^2 at the
eigenphases of the circuit.

The pre-measurement state is deterministic, so preparation and sampling are
split: a PreparedPhaseEstimation holds the ancilla Born distribution and
hands out cheap i.i.d. draws.  Preparation applies the circuit gate by gate;
prepare_phase_estimation_dense is the equivalent dense-matrix fast path used
when the base step is itself a long gate product (Trotterized evolutions).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import (
    BasisLabel,
    Circuit,
    Gate,
    StateVector,
    apply_gate,
    apply_gate_controlled,
    circuit_unitary,
    named_gate,
)
from .errors import DimensionMismatch, NotEigenvector
from .linalg import nearest_unitary

EIGENVECTOR_TOL = 1e-8


def ceil_log2(x: float) -> int:
    """Smallest integer t with 2**t >= x, evaluated without float log noise."""
    if x <= 0:
        raise ValueError("argument must be positive")
    t = 0
    while 2**t < x:
        t += 1
    return t


@dataclass(frozen=True)
class SamplingRequest:
    """Accuracy epsilon, failure budget delta, and the basis state to probe."""

    epsilon: float
    delta: float
    b: BasisLabel

    def __post_init__(self):
        # epsilon is an absolute precision: for eigenvalue requests it scales
        # with the spectral radius and may legitimately exceed 1.
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class EstimatorConfig:
    """Ancilla budget t and the ascending controlled powers 2^0 .. 2^(t-1)."""

    t: int
    powers: tuple[int, ...]

    @classmethod
    def from_request(cls, epsilon: float, delta: float) -> "EstimatorConfig":
        t = ceil_log2(1.0 / epsilon) + ceil_log2(2.0 + 1.0 / (2.0 * delta))
        return cls(t, tuple(2**j for j in range(t)))


@dataclass(frozen=True)
class PhaseSample:
    """One measured phase: raw ancilla integer and phi = raw / 2^t."""

    phi: float
    raw: int


def qft_apply(state: StateVector, register, inverse: bool = False) -> StateVector:
    """Exact Fourier transform on the listed qubits, matrix-free via FFT.

    register[0] is the most significant bit of the transformed index.
    """
    register = tuple(int(q) for q in register)
    if len(set(register)) != len(register):
        raise ValueError("register qubits must be distinct")
    if any(q < 0 or q >= state.qubit_count for q in register):
        raise DimensionMismatch("register qubit beyond state")
    t = len(register)
    tensor = state.tensor_view()
    moved = np.moveaxis(tensor, register, tuple(range(t)))
    shape = moved.shape
    arr = moved.reshape(2**t, -1)
    if inverse:
        out = np.fft.fft(arr, axis=0, norm="ortho")
    else:
        out = np.fft.ifft(arr, axis=0, norm="ortho")
    out = np.moveaxis(out.reshape(shape), tuple(range(t)), register)
    return StateVector(state.qubit_count, state.clock_dim, out.reshape(-1))


def controlled_power_apply(
    circuit: Circuit, control: int, power: int, state: StateVector
) -> StateVector:
    """Apply `circuit` `power` times, gate by gate, conditioned on `control`.

    The circuit targets the LAST circuit.qubit_count qubits of the state;
    the control must lie outside that window.
    """
    if power < 1:
        raise ValueError("power must be a positive integer")
    offset = state.qubit_count - circuit.qubit_count
    if offset < 0:
        raise DimensionMismatch("state smaller than circuit register")
    if not (0 <= control < state.qubit_count) or control >= offset:
        raise ValueError("control qubit must sit outside the circuit's register")
    shifted = [
        Gate(g.name, tuple(q + offset for q in g.support), g.matrix)
        for g in circuit.gates
    ]
    for _ in range(power):
        for gate in shifted:
            state = apply_gate_controlled(state, gate, control)
    return state


@dataclass
class PreparedPhaseEstimation:
    """Frozen pre-measurement state of one phase-estimation run.

    All randomness is in the final ancilla measurement, so draws from the
    same preparation are i.i.d. samples of the estimator's output law.
    """

    t: int
    final_state: StateVector
    raw_probabilities: np.ndarray

    def sample(self, rng: np.random.Generator) -> PhaseSample:
        cum = np.cumsum(self.raw_probabilities)
        raw = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        raw = min(raw, len(self.raw_probabilities) - 1)
        return PhaseSample(raw / 2**self.t, raw)

    def sample_raw_batch(self, count: int, rng: np.random.Generator) -> np.ndarray:
        cum = np.cumsum(self.raw_probabilities)
        raws = np.searchsorted(cum, rng.random(count) * cum[-1], side="right")
        return np.minimum(raws, len(self.raw_probabilities) - 1)

    def conditional_system_state(self, raw: int) -> StateVector:
        """Post-measurement system state given ancilla outcome `raw`."""
        rows = self.final_state.amplitudes.reshape(2**self.t, -1)
        block = rows[raw]
        norm = np.linalg.norm(block)
        if norm == 0:
            raise ValueError(f"outcome {raw} has zero probability")
        n_sys = self.final_state.qubit_count - self.t
        return StateVector(n_sys, self.final_state.clock_dim, block / norm)


def _attach_ancillas(system_state: StateVector, t: int) -> StateVector:
    """|0...0> on t new most-significant qubits, tensored with the system."""
    dim_rest = system_state.amplitudes.size
    amps = np.zeros((2**t) * dim_rest, dtype=complex)
    amps[:dim_rest] = system_state.amplitudes
    return StateVector(t + system_state.qubit_count, system_state.clock_dim, amps)


def _finish_preparation(state: StateVector, t: int) -> PreparedPhaseEstimation:
    state = qft_apply(state, range(t), inverse=True)
    probs = np.sum(
        np.abs(state.amplitudes.reshape(2**t, -1)) ** 2, axis=1
    )
    return PreparedPhaseEstimation(t, state, probs)


def prepare_phase_estimation(
    circuit: Circuit, system_state: StateVector, t: int
) -> PreparedPhaseEstimation:
    """Run the estimator circuit up to (not including) the measurement."""
    if circuit.qubit_count != system_state.qubit_count:
        raise DimensionMismatch("system state does not match circuit register")
    state = _attach_ancillas(system_state, t)
    for q in range(t):
        state = apply_gate(state, named_gate("h", q))
    # ancilla j (most significant first) controls the power 2^(t-1-j)
    for j in range(t):
        state = controlled_power_apply(circuit, j, 2 ** (t - 1 - j), state)
    return _finish_preparation(state, t)


def prepare_phase_estimation_dense(
    unitary: np.ndarray, system_state: StateVector, t: int
) -> PreparedPhaseEstimation:
    """Same output law as prepare_phase_estimation, with controlled powers
    taken by repeated squaring of the dense step matrix."""
    n = system_state.qubit_count
    if np.asarray(unitary).shape != (2**n, 2**n):
        raise DimensionMismatch("unitary does not match system register")
    state = _attach_ancillas(system_state, t)
    for q in range(t):
        state = apply_gate(state, named_gate("h", q))
    w = np.asarray(unitary, dtype=complex)
    targets = tuple(range(t, t + n))
    for j in range(t):
        gate = Gate("dense", targets, w)
        state = apply_gate_controlled(state, gate, t - 1 - j)
        if j + 1 < t:
            # drift doubles per squaring; project back to the unitary group
            w = nearest_unitary(w @ w)
    return _finish_preparation(state, t)


def phase_estimate(
    circuit: Circuit,
    eigenvector: StateVector,
    n_bits: int,
    delta: float,
    rng: np.random.Generator,
) -> PhaseSample:
    """Estimate the eigenphase of `eigenvector` to n_bits of precision.

    The returned phi is circularly within 2^-n_bits of the true phase with
    probability at least 1 - delta.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be at least 1")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if eigenvector.clock_dim != 1:
        raise DimensionMismatch("eigenvector must not carry a clock register")
    u = circuit_unitary(circuit)
    v = eigenvector.amplitudes
    lam = complex(v.conj() @ (u @ v))
    residual = float(np.linalg.norm(u @ v - lam * v))
    if residual > EIGENVECTOR_TOL:
        raise NotEigenvector(f"residual {residual:.3e} exceeds {EIGENVECTOR_TOL}")
    t = n_bits + ceil_log2(2.0 + 1.0 / (2.0 * delta))
    prep = prepare_phase_estimation(circuit, eigenvector, t)
    return prep.sample(rng)


def prepare_pes(circuit: Circuit, req: SamplingRequest) -> PreparedPhaseEstimation:
    """Preparation for spectral sampling of a circuit from basis state b."""
    if len(req.b.bits) != circuit.qubit_count:
        raise DimensionMismatch(
            f"b has {len(req.b.bits)} bits, circuit acts on {circuit.qubit_count}"
        )
    cfg = EstimatorConfig.from_request(req.epsilon, req.delta)
    return prepare_phase_estimation(circuit, StateVector.from_label(req.b), cfg.t)


def pes_sample(
    circuit: Circuit, req: SamplingRequest, rng: np.random.Generator
) -> PhaseSample:
    """One draw from the eigenphase distribution of `circuit` seen from |b>."""
    return prepare_pes(circuit, req).sample(rng)
