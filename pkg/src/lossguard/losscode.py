"""Two-to-four qubit erasure code: encoding, decoding, heralded-loss recovery.

Two logical qubits are spread over four rails so that losing any single
photon, at a known position, can be undone.  Loss recovery substitutes a
fresh |0> for the missing photon, entangles all four rails with an ancilla
pair (CNOTs from the first ancilla, CZs from the second), reads the
ancillae out in the X basis, and applies a conditional Pauli correction on
the substituted rail.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lossguard.simcore import (
    DensityMatrix,
    Gate,
    MeasurementRecord,
    PureState,
    apply_gate,
    apply_gate_dm,
    branch_probabilities,
    embed,
    fidelity,
    partial_trace,
    project,
    pure_from_density,
    tensor,
)

DATA_QUBITS = 4
ANCILLA_QUBITS = (4, 5)
OUTCOMES = ("00", "01", "10", "11")
PAULI_WORDS = ("I", "X", "Z", "XZ")

CODE_SPACE_TOL = 1e-10
RECOVERY_TOL = 1e-10

# Truth table of the code: logical bits -> the pair of basis kets whose
# equal-weight superposition is the codeword.
CODEWORD_KETS = {
    "00": ("0000", "1111"),
    "01": ("0110", "1001"),
    "10": ("1010", "0101"),
    "11": ("1100", "0011"),
}

# Logical wires enter on qubits 0 and 1; qubits 2 and 3 start in |0>.
ENCODING_GATES = (
    Gate("H", (3,)),
    Gate("CNOT", (3, 2)),
    Gate("CNOT", (3, 1)),
    Gate("CNOT", (3, 0)),
    Gate("CNOT", (0, 2)),
    Gate("CNOT", (1, 2)),
)

# Recovery circuit on the six-qubit register (data 0..3, ancillae 4 and 5).
# The coupling pattern is the same for every loss position; only the final
# conditional correction targets the substituted rail.
RECOVERY_GATES = (
    (Gate("H", (4,)), Gate("H", (5,)))
    + tuple(Gate("CNOT", (4, j)) for j in range(DATA_QUBITS))
    + tuple(Gate("CZ", (5, j)) for j in range(DATA_QUBITS))
    + (Gate("H", (4,)), Gate("H", (5,)))
)

_KET0 = PureState.basis("0")


class CodeSpaceError(ValueError):
    """Input state is not in the code space."""


class RecoveryError(RuntimeError):
    """Loss recovery did not return the expected encoded state."""


class TableDerivationError(RuntimeError):
    """No unique Pauli word restores every codeword for some outcome."""


@dataclass(frozen=True, eq=False)
class Codeword:
    logical_bits: str
    state: PureState


@dataclass(frozen=True)
class CorrectionTable:
    """Measurement outcome -> Pauli word on the substituted rail."""

    loss_position: int
    entries: dict[str, str]

    def __post_init__(self) -> None:
        if set(self.entries) != set(OUTCOMES):
            raise ValueError(f"table must cover outcomes {OUTCOMES}")
        bad = set(self.entries.values()) - set(PAULI_WORDS)
        if bad:
            raise ValueError(f"unknown Pauli words {bad}")

    def to_records(self) -> list[dict]:
        return [
            {
                "loss_position": self.loss_position,
                "outcome_bits": outcome,
                "pauli_word": self.entries[outcome],
            }
            for outcome in OUTCOMES
        ]


@dataclass(frozen=True, eq=False)
class RecoveryOutcome:
    measurement: MeasurementRecord
    corrected_state: PureState
    applied_correction: str


def _check_position(loss_position: int) -> int:
    loss_position = int(loss_position)
    if not 0 <= loss_position < DATA_QUBITS:
        raise ValueError(f"loss position must be 0..3, got {loss_position}")
    return loss_position


def encode(logical: PureState) -> PureState:
    """Encode a two-qubit state onto the four rails."""
    if logical.num_qubits != 2:
        raise ValueError("encode expects a two-qubit logical state")
    state = tensor(logical, PureState.basis("00"))
    for gate in ENCODING_GATES:
        state = apply_gate(state, gate)
    return state


def decode(encoded: PureState) -> PureState:
    """Invert the encoding; reject states outside the code space."""
    if encoded.num_qubits != DATA_QUBITS:
        raise ValueError("decode expects a four-qubit state")
    state = encoded
    for gate in reversed(ENCODING_GATES):
        state = apply_gate(state, gate)
    grid = state.amplitudes.reshape(4, 4)
    leak = float(np.sum(np.abs(grid[:, 1:]) ** 2))
    if leak > CODE_SPACE_TOL:
        raise CodeSpaceError(f"ancilla wires not |00>: leaked weight {leak!r}")
    logical = grid[:, 0]
    return PureState(2, logical / np.linalg.norm(logical))


def in_code_space(state: PureState, tol: float = CODE_SPACE_TOL) -> bool:
    if state.num_qubits != DATA_QUBITS:
        return False
    try:
        decode(state)
    except CodeSpaceError:
        return False
    return True


@lru_cache(maxsize=1)
def codewords() -> tuple[Codeword, ...]:
    """The four encoded logical basis states."""
    return tuple(
        Codeword(bits, encode(PureState.basis(bits))) for bits in CODEWORD_KETS
    )


def apply_pauli_word(state: PureState, word: str, qubit: int) -> PureState:
    """Apply a product of Paulis, rightmost letter first, to one qubit."""
    if word not in PAULI_WORDS:
        raise ValueError(f"unknown Pauli word {word!r}")
    for letter in reversed(word):
        if letter != "I":
            state = apply_gate(state, Gate(letter, (qubit,)))
    return state


def _premeasurement_state(damaged: DensityMatrix, loss_position: int) -> DensityMatrix:
    """Substitute |0> at the lost rail, adjoin the ancilla pair, run the circuit."""
    if damaged.num_qubits != DATA_QUBITS - 1:
        raise ValueError("damaged state must have three qubits")
    rho = embed(damaged, _KET0, loss_position)
    rho = embed(rho, _KET0, 4)
    rho = embed(rho, _KET0, 5)
    for gate in RECOVERY_GATES:
        rho = apply_gate_dm(rho, gate)
    return rho


def _strip_ancillas(rho: DensityMatrix) -> DensityMatrix:
    return partial_trace(partial_trace(rho, 5), 4)


def _projected_branch(rho: DensityMatrix, outcome: str) -> tuple[MeasurementRecord, PureState]:
    """One forced ancilla readout; the surviving four-rail state is always pure."""
    record, post = project(rho, ANCILLA_QUBITS, outcome)
    reduced = _strip_ancillas(post)
    try:
        state = pure_from_density(reduced, tol=RECOVERY_TOL)
    except ValueError as exc:
        raise RecoveryError(f"post-measurement state not pure: {exc}") from exc
    return record, state


def recovery_branches(
    damaged: DensityMatrix, loss_position: int
) -> tuple[RecoveryOutcome, ...]:
    """All four corrected measurement branches for a heralded loss."""
    loss_position = _check_position(loss_position)
    table = derive_correction_table(loss_position)
    rho = _premeasurement_state(damaged, loss_position)
    branches = []
    for outcome in OUTCOMES:
        record, state = _projected_branch(rho, outcome)
        word = table.entries[outcome]
        corrected = apply_pauli_word(state, word, loss_position)
        branches.append(RecoveryOutcome(record, corrected, word))
    return tuple(branches)


def _pick_branch(
    branches: tuple[RecoveryOutcome, ...], expected: PureState | None
) -> None:
    if expected is not None:
        for branch in branches:
            fid = fidelity(branch.corrected_state, expected)
            if fid < 1.0 - RECOVERY_TOL:
                raise RecoveryError(
                    f"outcome {branch.measurement.outcome_bits} recovered with "
                    f"fidelity {fid!r}"
                )


def recover(
    damaged: DensityMatrix,
    loss_position: int,
    rng: np.random.Generator,
    expected: PureState | None = None,
) -> RecoveryOutcome:
    """Run loss recovery, sampling the ancilla readout.

    When `expected` is given, every branch is checked against it and a
    RecoveryError is raised if any falls below fidelity 1 - 1e-10.
    """
    branches = recovery_branches(damaged, loss_position)
    _pick_branch(branches, expected)
    probs = np.array([b.measurement.outcome_probability for b in branches])
    choice = int(rng.choice(len(branches), p=probs / probs.sum()))
    return branches[choice]


def recover_forced(
    damaged: DensityMatrix,
    loss_position: int,
    outcome: str,
    expected: PureState | None = None,
) -> RecoveryOutcome:
    """Loss recovery with the ancilla readout pinned to one outcome."""
    loss_position = _check_position(loss_position)
    if outcome not in OUTCOMES:
        raise ValueError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
    table = derive_correction_table(loss_position)
    rho = _premeasurement_state(damaged, loss_position)
    record, state = _projected_branch(rho, outcome)
    word = table.entries[outcome]
    branch = RecoveryOutcome(record, apply_pauli_word(state, word, loss_position), word)
    _pick_branch((branch,), expected)
    return branch


def _restores_codewords(
    word: str,
    loss_position: int,
    projected: list[PureState],
) -> bool:
    # Per-codeword check only; each codeword may come back with its own
    # phase because eigenvector extraction fixes phases arbitrarily.
    for codeword, state in zip(codewords(), projected):
        corrected = apply_pauli_word(state, word, loss_position)
        if abs(fidelity(corrected, codeword.state) - 1.0) > RECOVERY_TOL:
            return False
    return True


def _restores_superpositions(
    word: str,
    loss_position: int,
    outcome: str,
    rng: np.random.Generator,
    samples: int = 3,
) -> bool:
    # Superpositions travel through the mixed damaged state, which keeps all
    # relative phases, so this rules out corrections that only fix the basis
    # codewords up to inconsistent signs.
    from lossguard.simcore import random_state

    for _ in range(samples):
        encoded = encode(random_state(2, rng))
        damaged = partial_trace(encoded.to_density_matrix(), loss_position)
        rho = _premeasurement_state(damaged, loss_position)
        _, state = _projected_branch(rho, outcome)
        corrected = apply_pauli_word(state, word, loss_position)
        if abs(fidelity(corrected, encoded) - 1.0) > RECOVERY_TOL:
            return False
    return True


@lru_cache(maxsize=DATA_QUBITS)
def derive_correction_table(loss_position: int) -> CorrectionTable:
    """Brute-force the outcome -> Pauli word table for one loss position.

    For each ancilla outcome, search {I, X, Z, XZ} on the substituted rail
    for the word that restores all four codewords and random superpositions.
    """
    loss_position = _check_position(loss_position)
    projected: dict[str, list[PureState]] = {outcome: [] for outcome in OUTCOMES}
    for codeword in codewords():
        damaged = partial_trace(codeword.state.to_density_matrix(), loss_position)
        rho = _premeasurement_state(damaged, loss_position)
        for outcome in OUTCOMES:
            _, state = _projected_branch(rho, outcome)
            projected[outcome].append(state)

    rng = np.random.default_rng(20240 + loss_position)
    entries: dict[str, str] = {}
    for outcome in OUTCOMES:
        candidates = [
            word
            for word in PAULI_WORDS
            if _restores_codewords(word, loss_position, projected[outcome])
            and _restores_superpositions(word, loss_position, outcome, rng)
        ]
        if len(candidates) != 1:
            raise TableDerivationError(
                f"position {loss_position}, outcome {outcome}: "
                f"{len(candidates)} candidate corrections {candidates}"
            )
        entries[outcome] = candidates[0]
    return CorrectionTable(loss_position, entries)


def all_correction_tables() -> list[CorrectionTable]:
    return [derive_correction_table(pos) for pos in range(DATA_QUBITS)]


def outcome_probabilities(damaged: DensityMatrix, loss_position: int) -> np.ndarray:
    """Ancilla readout distribution; uniform 1/4 for any code-space input."""
    loss_position = _check_position(loss_position)
    rho = _premeasurement_state(damaged, loss_position)
    return branch_probabilities(rho, ANCILLA_QUBITS)
