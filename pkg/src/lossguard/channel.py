"""Physical layer: per-rail photon survival and one transponder stage.

A stage is one fiber segment followed by a transponder.  The four rails
lose photons independently; the QND readout heralds which rail, if any,
went dark.  Zero losses pass the block through, one loss runs the recovery
circuit, two or more are unrecoverable.  The transponder circuit is in
line every stage, so its gates must fire whether or not a loss occurred.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lossguard import analytics, losscode
from lossguard.analytics import TransponderParams, gate_success, p_t_full
from lossguard.simcore import PureState, partial_trace

MODE_AGGREGATE = "aggregate_pt"
MODE_PER_GATE = "per_gate"
MODES = (MODE_AGGREGATE, MODE_PER_GATE)

STATUS_INTACT = "intact"
STATUS_CORRECTED = "corrected"
STATUS_FAILED_MULTI = "failed_multi_loss"
STATUS_FAILED_GATES = "failed_gates"
STATUSES = (STATUS_INTACT, STATUS_CORRECTED, STATUS_FAILED_MULTI, STATUS_FAILED_GATES)
SUCCESS_STATUSES = (STATUS_INTACT, STATUS_CORRECTED)

RAILS = 4


@dataclass(frozen=True)
class SegmentModel:
    """One fiber segment: attenuation rate alpha over length d."""

    alpha: float
    d: float

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.d < 0:
            raise ValueError("alpha and d must be nonnegative")

    @property
    def survival(self) -> float:
        return float(np.exp(-self.alpha * self.d))


@dataclass(frozen=True)
class LossEvent:
    """Which of the four rails kept their photon."""

    survival_mask: tuple[bool, bool, bool, bool]

    def __post_init__(self) -> None:
        mask = tuple(bool(b) for b in self.survival_mask)
        if len(mask) != RAILS:
            raise ValueError(f"survival mask must cover {RAILS} rails")
        object.__setattr__(self, "survival_mask", mask)

    @property
    def num_lost(self) -> int:
        return RAILS - sum(self.survival_mask)

    def lost_position(self) -> int:
        if self.num_lost != 1:
            raise ValueError("lost_position is defined only for single losses")
        return self.survival_mask.index(False)


@dataclass(frozen=True, eq=False)
class StageResult:
    status: str
    state: PureState | None
    event: LossEvent

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status in SUCCESS_STATUSES and self.state is None:
            raise ValueError(f"status {self.status} requires a state")
        if self.status not in SUCCESS_STATUSES and self.state is not None:
            raise ValueError(f"status {self.status} must not carry a state")
        if self.status == STATUS_CORRECTED and self.event.num_lost != 1:
            raise ValueError("corrected requires exactly one loss")
        if self.status == STATUS_FAILED_MULTI and self.event.num_lost < 2:
            raise ValueError("failed_multi_loss requires at least two losses")


def transmit_segment(model: SegmentModel, rng: np.random.Generator) -> LossEvent:
    """Independent Bernoulli survival of the four rail photons."""
    draws = rng.random(RAILS)
    return LossEvent(tuple(bool(u < model.survival) for u in draws))


@lru_cache(maxsize=64)
def _aggregate_pt(params: TransponderParams) -> float:
    return p_t_full(params)


def gates_succeed(
    params: TransponderParams,
    rng: np.random.Generator,
    mode: str = MODE_AGGREGATE,
    p_t_override: float | None = None,
) -> bool:
    """Did every transponder device fire this stage?

    aggregate_pt draws one coin at the full product probability; per_gate
    draws a coin per device so the exponent bookkeeping can be
    cross-checked.  `p_t_override` replaces the aggregate probability,
    which is the only way to express ideal gates (the product is < 1 for
    every finite n).
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if p_t_override is not None:
        if mode != MODE_AGGREGATE:
            raise ValueError("p_t_override only applies to aggregate_pt")
        if not 0.0 <= p_t_override <= 1.0:
            raise ValueError("p_t_override must lie in [0, 1]")
        return bool(rng.random() < p_t_override)
    if mode == MODE_AGGREGATE:
        return bool(rng.random() < _aggregate_pt(params))
    ancilla_events = 10 + 32 * params.n
    ok = bool(np.all(rng.random(analytics.ONE_QUBIT_GATE_COUNT) < params.p_one))
    ok &= bool(np.all(rng.random(analytics.TWO_QUBIT_GATE_COUNT) < gate_success(params.n)))
    ok &= bool(np.all(rng.random(ancilla_events) < params.p_spg))
    ok &= bool(np.all(rng.random(ancilla_events) < params.eta))
    return ok


def _canonical_key(state: PureState) -> bytes:
    # Global phase and last-ulp rounding must not fragment the cache: fix the
    # phase of the largest amplitude and round before hashing.
    amps = state.amplitudes
    k = int(np.argmax(np.abs(amps)))
    phase = amps[k] / abs(amps[k])
    return np.round(amps / phase, 12).tobytes()


def _recovery_branches(
    encoded: PureState, position: int, cache: dict | None
) -> tuple[np.ndarray, list[PureState]]:
    key = (_canonical_key(encoded), position)
    if cache is not None and key in cache:
        return cache[key]
    damaged = partial_trace(encoded.to_density_matrix(), position)
    branches = losscode.recovery_branches(damaged, position)
    probs = np.array([b.measurement.outcome_probability for b in branches])
    cumulative = np.cumsum(probs / probs.sum())
    cumulative[-1] = 1.0
    value = (cumulative, [b.corrected_state for b in branches])
    if cache is not None:
        cache[key] = value
    return value


def stage(
    encoded: PureState,
    model: SegmentModel,
    gate_model: TransponderParams,
    rng: np.random.Generator,
    *,
    mode: str = MODE_AGGREGATE,
    p_t_override: float | None = None,
    force_event: LossEvent | None = None,
    recovery_cache: dict | None = None,
    check_code_space: bool = True,
) -> StageResult:
    """Send a code block through one segment and its transponder.

    `force_event` pins the loss pattern (test hook); `recovery_cache` may be
    shared across calls to memoize recovery branches, which are a pure
    function of the encoded state and loss position.
    """
    if check_code_space and not losscode.in_code_space(encoded):
        raise ValueError("stage input is not in the code space")
    event = force_event if force_event is not None else transmit_segment(model, rng)
    if event.num_lost >= 2:
        return StageResult(STATUS_FAILED_MULTI, None, event)
    gates_ok = gates_succeed(gate_model, rng, mode, p_t_override)
    if event.num_lost == 0:
        if not gates_ok:
            return StageResult(STATUS_FAILED_GATES, None, event)
        return StageResult(STATUS_INTACT, encoded, event)
    if not gates_ok:
        return StageResult(STATUS_FAILED_GATES, None, event)
    cumulative, states = _recovery_branches(encoded, event.lost_position(), recovery_cache)
    choice = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return StageResult(STATUS_CORRECTED, states[choice], event)
