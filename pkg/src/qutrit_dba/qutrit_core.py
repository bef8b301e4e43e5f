"""Exact simulation of a single three-level quantum system (qutrit).

Everything the distribution protocol does to the qutrit is diagonal in the
computational basis {|0>, |1>, |2>}: the state starts in the uniform
superposition and each party multiplies in a phase operator
diag(1, e^{i*phi1}, e^{i*phi2}).  Operators are therefore stored as a pair
of phase angles instead of matrices.  Eavesdropping and noise are modelled
as general Kraus channels acting on density matrices.

The final measurement is a three-outcome projective measurement in the
Fourier basis |psi_k> = (1/sqrt(3)) (1, w^k, w^2k) with w = e^{i*2*pi/3}.
Outcome 0 means the uniform superposition was recovered intact; the
protocol treats that outcome as the detector click worth keeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "TAU",
    "OMEGA",
    "RandomSource",
    "BasisChoice",
    "PureState",
    "MixedState",
    "PhaseOperator",
    "IDENTITY_OPERATOR",
    "MeasurementOutcome",
    "AttackChannel",
    "prepare_initial",
    "basis_operator",
    "encode_operator",
    "compose",
    "apply_operator",
    "apply_operator_mixed",
    "apply_channel",
    "fourier_basis",
    "outcome_probabilities",
    "sample_outcome",
    "detection_probability",
    "identity_channel",
    "dephasing_channel",
    "phase_shift_channel",
    "depolarizing_channel",
]

TAU = 2.0 * math.pi

# Primitive third root of unity.  w**3 == 1 and 1 + w + w**2 == 0.
OMEGA = complex(math.cos(TAU / 3.0), math.sin(TAU / 3.0))

# All randomness is drawn from an injected numpy Generator so that every
# simulation is reproducible from a seed and independent streams can be
# spawned for independent actors.
RandomSource = np.random.Generator

_ATOL = 1e-12


class BasisChoice(Enum):
    """Private basis flag each party draws before acting on the qutrit.

    Basis I applies no extra phase; basis II applies the fixed phase pair
    (2*pi/3, 2*pi/3).  Three basis-II applications compose to the identity,
    which is what makes the matched-basis statistics deterministic.
    """

    I = "I"
    II = "II"


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PureState:
    """Normalised qutrit state vector in the computational basis.

    Args:
        amplitudes: complex array of shape (3,); squared magnitudes must
            sum to 1 within 1e-12.
    """

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (3,):
            raise ValueError(f"qutrit amplitudes must have shape (3,), got {amps.shape}")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > _ATOL:
            raise ValueError(f"amplitudes are not normalised: |psi|^2 = {norm_sq!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def density(self) -> np.ndarray:
        """Rank-one density matrix |psi><psi| as a plain array."""
        return np.outer(self.amplitudes, np.conj(self.amplitudes))

    def overlap(self, other: "PureState") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class MixedState:
    """Qutrit density matrix: Hermitian, unit trace, positive semidefinite.

    Validation tolerances are 1e-12 on Hermiticity and trace and allows
    eigenvalues down to -1e-12 to absorb floating-point noise.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.shape != (3, 3):
            raise ValueError(f"density matrix must have shape (3, 3), got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=_ATOL, rtol=0.0):
            raise ValueError("density matrix is not Hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > _ATOL:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        eigenvalues = np.linalg.eigvalsh(rho)
        if float(eigenvalues.min()) < -_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {eigenvalues.min()!r}")
        rho.flags.writeable = False
        object.__setattr__(self, "matrix", rho)

    def purity(self) -> float:
        """tr(rho^2); 1 for pure states, 1/3 for the maximally mixed state."""
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def prepare_initial() -> PureState:
    """Uniform superposition (|0> + |1> + |2>) / sqrt(3) that every run starts from."""
    return PureState(np.full(3, 1.0 / math.sqrt(3.0), dtype=complex))


# ---------------------------------------------------------------------------
# diagonal phase operators
# ---------------------------------------------------------------------------


def _canonical_angle(phi: float) -> float:
    # map to (-pi, pi]; remainder returns the representative nearest zero
    r = math.remainder(phi, TAU)
    return r if r != -math.pi else math.pi


@dataclass(frozen=True)
class PhaseOperator:
    """Diagonal unitary diag(1, e^{i*phi1}, e^{i*phi2}).

    Angles are stored canonically in (-pi, pi], so operators that differ by
    whole turns compare equal.  Composition is commutative and adds angles
    modulo 2*pi; see :func:`compose`.
    """

    phi1: float
    phi2: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi1", _canonical_angle(float(self.phi1)))
        object.__setattr__(self, "phi2", _canonical_angle(float(self.phi2)))

    def phase_vector(self) -> np.ndarray:
        """Diagonal of the operator as a length-3 complex array."""
        return np.array([1.0, np.exp(1j * self.phi1), np.exp(1j * self.phi2)], dtype=complex)

    def matrix(self) -> np.ndarray:
        return np.diag(self.phase_vector())

    def is_identity(self, tol: float = _ATOL) -> bool:
        return abs(self.phi1) <= tol and abs(self.phi2) <= tol

    def approx_equal(self, other: "PhaseOperator", tol: float = _ATOL) -> bool:
        """Equality up to 2*pi wrapping within an absolute angle tolerance."""
        return (
            abs(_canonical_angle(self.phi1 - other.phi1)) <= tol
            and abs(_canonical_angle(self.phi2 - other.phi2)) <= tol
        )


IDENTITY_OPERATOR = PhaseOperator(0.0, 0.0)


def basis_operator(basis: BasisChoice) -> PhaseOperator:
    """Phase operator for a basis flag: identity for I, diag(1, w, w) for II."""
    if basis is BasisChoice.I:
        return IDENTITY_OPERATOR
    return PhaseOperator(TAU / 3.0, TAU / 3.0)


def encode_operator(number: int) -> PhaseOperator:
    """Phase operator diag(1, w^n, w^-n) encoding a trit value n.

    Args:
        number: trit in {0, 1, 2}.

    The three encodings compose to the identity exactly when the encoded
    numbers sum to 0 mod 3, which is the correlation the protocol checks.
    """
    if number not in (0, 1, 2):
        raise ValueError(f"encoded number must be 0, 1 or 2, got {number!r}")
    return PhaseOperator(TAU * number / 3.0, -TAU * number / 3.0)


def compose(*operators: PhaseOperator) -> PhaseOperator:
    """Product of diagonal phase operators (order irrelevant)."""
    phi1 = 0.0
    phi2 = 0.0
    for op in operators:
        phi1 += op.phi1
        phi2 += op.phi2
    return PhaseOperator(phi1, phi2)


def apply_operator(op: PhaseOperator, state: PureState) -> PureState:
    """Apply a diagonal phase unitary to a pure state."""
    # unit-modulus phases preserve the norm exactly, so skip re-validation
    amps = state.amplitudes * op.phase_vector()
    amps.flags.writeable = False
    out = object.__new__(PureState)
    object.__setattr__(out, "amplitudes", amps)
    return out


def _trusted_mixed(matrix: np.ndarray) -> MixedState:
    # constructor bypass for maps that provably preserve the density
    # invariants (unitary conjugation, validated Kraus channels); skips the
    # eigenvalue check that dominates the per-run cost of channel attacks
    matrix.flags.writeable = False
    state = object.__new__(MixedState)
    object.__setattr__(state, "matrix", matrix)
    return state


def apply_operator_mixed(op: PhaseOperator, state: MixedState) -> MixedState:
    """Conjugate a density matrix by a diagonal phase unitary: U rho U^dag."""
    v = op.phase_vector()
    return _trusted_mixed(state.matrix * np.outer(v, np.conj(v)))


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttackChannel:
    """Completely positive trace-preserving map given by Kraus operators.

    Args:
        kraus_operators: tuple of 3x3 complex arrays K_i satisfying the
            completeness relation sum_i K_i^dag K_i = identity (checked to
            1e-10; violation raises ValueError).
        name: short label used in reports.
    """

    kraus_operators: tuple
    name: str = "channel"

    def __post_init__(self) -> None:
        ops = []
        total = np.zeros((3, 3), dtype=complex)
        for k in self.kraus_operators:
            k = np.asarray(k, dtype=complex)
            if k.shape != (3, 3):
                raise ValueError(f"Kraus operator must be 3x3, got shape {k.shape}")
            k.flags.writeable = False
            ops.append(k)
            total += k.conj().T @ k
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        if not np.allclose(total, np.eye(3), atol=1e-10, rtol=0.0):
            raise ValueError("Kraus operators violate the completeness relation")
        object.__setattr__(self, "kraus_operators", tuple(ops))


def apply_channel(channel: AttackChannel, state: MixedState) -> MixedState:
    """Apply a Kraus channel: rho -> sum_i K_i rho K_i^dag."""
    rho = state.matrix
    out = np.zeros((3, 3), dtype=complex)
    for k in channel.kraus_operators:
        out += k @ rho @ k.conj().T
    return _trusted_mixed(out)


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------


def fourier_basis() -> tuple:
    """The three orthonormal states |psi_k> = (1, w^k, w^2k) / sqrt(3)."""
    states = []
    for k in range(3):
        amps = np.array([1.0, OMEGA**k, OMEGA ** (2 * k)], dtype=complex) / math.sqrt(3.0)
        states.append(PureState(amps))
    return tuple(states)


# rows are the bras <psi_k|, used to project onto the measurement basis
_FOURIER_BRAS = np.array([s.amplitudes for s in fourier_basis()]).conj()


@dataclass(frozen=True)
class MeasurementOutcome:
    """Result of the three-outcome Fourier measurement.

    index 0 is the detector the protocol keeps (uniform superposition
    recovered); 1 and 2 are the orthogonal complements.
    """

    index: int

    def __post_init__(self) -> None:
        if self.index not in (0, 1, 2):
            raise ValueError(f"outcome index must be 0, 1 or 2, got {self.index!r}")

    @property
    def detected(self) -> bool:
        return self.index == 0


def outcome_probabilities(state) -> np.ndarray:
    """Born-rule probabilities of the three Fourier outcomes.

    Args:
        state: PureState or MixedState.

    Returns:
        float array (p0, p1, p2); entries are clipped at 0 to absorb
        floating-point dust and sum to 1 within 1e-10.
    """
    if isinstance(state, PureState):
        probs = np.abs(_FOURIER_BRAS @ state.amplitudes) ** 2
    elif isinstance(state, MixedState):
        probs = np.einsum(
            "ki,ij,kj->k", _FOURIER_BRAS, state.matrix, _FOURIER_BRAS.conj()
        ).real
    else:
        raise TypeError(f"expected PureState or MixedState, got {type(state).__name__}")
    probs = np.clip(probs, 0.0, None)
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"outcome probabilities sum to {total!r}")
    return probs


def sample_outcome(probs: np.ndarray, rng: RandomSource) -> MeasurementOutcome:
    """Draw one measurement outcome; deterministic given the generator state."""
    u = rng.random()
    acc = 0.0
    for k in range(2):
        acc += float(probs[k])
        if u < acc:
            return MeasurementOutcome(k)
    return MeasurementOutcome(2)


def detection_probability(state) -> float:
    """Probability of outcome 0, i.e. of recovering the uniform superposition."""
    return float(outcome_probabilities(state)[0])


# ---------------------------------------------------------------------------
# stock channels
# ---------------------------------------------------------------------------


def identity_channel() -> AttackChannel:
    """Channel that leaves the state untouched."""
    return AttackChannel((np.eye(3, dtype=complex),), name="identity")


def dephasing_channel(basis: str = "computational") -> AttackChannel:
    """Full dephasing: project onto one basis and discard coherences.

    Args:
        basis: "computational" kills the off-diagonal terms that carry the
            phase encoding (detection probability becomes exactly 1/3 for
            every honest input); "fourier" dephases in the measurement basis
            instead, which leaves the measurement statistics alone.
    """
    if basis == "computational":
        kets = np.eye(3, dtype=complex)
    elif basis == "fourier":
        kets = np.array([s.amplitudes for s in fourier_basis()])
    else:
        raise ValueError(f"unknown dephasing basis {basis!r}")
    kraus = tuple(np.outer(k, np.conj(k)) for k in kets)
    return AttackChannel(kraus, name=f"dephasing[{basis}]")


def phase_shift_channel(number: int = 1) -> AttackChannel:
    """Unitary channel applying one extra trit encoding diag(1, w^n, w^-n).

    Leaves every run deterministic but shifts the revealed-number sum by n,
    so all of the shifted runs flag as inconsistent when cross-checked.
    """
    op = encode_operator(number)
    return AttackChannel((op.matrix(),), name=f"phase_shift[{number}]")


def depolarizing_channel(strength: float = 1.0) -> AttackChannel:
    """Mix the state towards maximally mixed: rho -> (1-p) rho + p I/3.

    Args:
        strength: mixing probability p in [0, 1].
    """
    p = float(strength)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength must be in [0, 1], got {p!r}")
    shift = np.roll(np.eye(3, dtype=complex), 1, axis=0)  # |k+1><k|
    clock = np.diag([OMEGA**k for k in range(3)])
    kraus = [math.sqrt(1.0 - 8.0 * p / 9.0) * np.eye(3, dtype=complex)]
    for a in range(3):
        for b in range(3):
            if a == 0 and b == 0:
                continue
            kraus.append(
                math.sqrt(p / 9.0)
                * (np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
            )
    return AttackChannel(tuple(kraus), name=f"depolarizing[{p}]")
