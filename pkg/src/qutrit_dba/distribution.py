"""Quantum list-distribution phase: runs, sifting, cross-check, lists.

One run sends a single qutrit A -> B -> C.  Every party secretly applies a
basis operator (I or II, a coin flip) followed by a number encoding (A a
trit, B and C a bit), and C measures in the Fourier basis.  C announces
whether outcome 0 fired; if so the bases are revealed in reverse order
(C, B, A) and the run is valid when all three match.  Valid runs are
deterministic: outcome 0 fires exactly when the encoded numbers sum to
0 mod 3, so each surviving run hands the three parties one correlated
list position without revealing it to anyone else.

A random fraction of valid runs is sacrificed in a cross-check where the
numbers are spoken aloud in random order; any sum-rule violation exposes
tampering.  The survivors become the CorrelatedLists consumed by the
agreement phase.

Honest runs never build a state vector: because every honest operator is
diag(1, w^m1, w^m2) with integer exponents, a run reduces to two sums
mod 3 and a 9-entry probability table (computed at import from the actual
operators, not hard-coded).  Attack hooks switch the run to explicit
state objects from the hook's location onward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .adversaries import BasisAnnouncer, ProtocolHooks, RevealHook, hooks_for_strategy
from .qutrit_core import (
    TAU,
    BasisChoice,
    MeasurementOutcome,
    PhaseOperator,
    PureState,
    RandomSource,
    apply_operator,
    apply_operator_mixed,
    outcome_probabilities,
    prepare_initial,
    sample_outcome,
)
from .strategies import AdversaryStrategy, GeneralId, honest

__all__ = [
    "PartyChoices",
    "RunRecord",
    "CorrelatedLists",
    "CheckVerdict",
    "CrossCheckReport",
    "DistributionConfig",
    "AttemptBudgetExceeded",
    "execute_run",
    "reveal_and_sift",
    "run_attempts",
    "run_batch",
    "cross_check",
    "assemble_lists",
    "sample_correlated_lists",
    "theoretical_statistics",
    "TheoreticalStatistics",
    "run_records_to_jsonl",
    "lists_to_jsonl",
]


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartyChoices:
    """One party's secret draw for a single run: a basis and a number."""

    basis: BasisChoice
    number: int

    def __post_init__(self) -> None:
        if not isinstance(self.basis, BasisChoice):
            raise ValueError(f"basis must be a BasisChoice, got {self.basis!r}")
        if self.number not in (0, 1, 2):
            raise ValueError(f"encoded number must be 0, 1 or 2, got {self.number!r}")


@dataclass
class RunRecord:
    """Everything observable about one protocol run.

    ``bases_announced`` is filled by sifting, ordered as announced:
    C first, then B, then A.  ``valid`` implies the detection was claimed
    and all announcements matched; ``consumed_by_check`` marks valid runs
    sacrificed to the cross-check.
    """

    run_id: int
    choices_a: PartyChoices
    choices_b: PartyChoices
    choices_c: PartyChoices
    outcome: Optional[MeasurementOutcome]
    attack_trace: Optional[str] = None
    detection_claimed: bool = False
    bases_announced: Optional[Tuple[BasisChoice, BasisChoice, BasisChoice]] = None
    valid: bool = False
    consumed_by_check: bool = False

    def number_sum(self) -> int:
        return (self.choices_a.number + self.choices_b.number + self.choices_c.number) % 3

    def combo(self) -> str:
        return f"{self.choices_a.number}{self.choices_b.number}{self.choices_c.number}"


@dataclass(frozen=True)
class CorrelatedLists:
    """The three same-length secret lists produced by a distribution batch.

    Structural constraints (equal lengths, A trits, B/C bits) are enforced
    here; the cross-list sum rule is a joint property no single party can
    see, so it is exposed as :meth:`verify_correlation` instead of a
    constructor assertion — adversarial executions can hand the agreement
    phase lists that violate it, and the protocol must cope.
    """

    list_a: Tuple[int, ...]
    list_b: Tuple[int, ...]
    list_c: Tuple[int, ...]

    def __post_init__(self) -> None:
        a = tuple(int(v) for v in self.list_a)
        b = tuple(int(v) for v in self.list_b)
        c = tuple(int(v) for v in self.list_c)
        if not (len(a) == len(b) == len(c)):
            raise ValueError("the three lists must have equal length")
        if any(v not in (0, 1, 2) for v in a):
            raise ValueError("l_a entries must be trits")
        if any(v not in (0, 1) for v in b) or any(v not in (0, 1) for v in c):
            raise ValueError("l_b and l_c entries must be bits")
        object.__setattr__(self, "list_a", a)
        object.__setattr__(self, "list_b", b)
        object.__setattr__(self, "list_c", c)

    @property
    def length(self) -> int:
        return len(self.list_a)

    def verify_correlation(self) -> bool:
        """True iff (l_a + l_b + l_c) mod 3 = 0 at every position."""
        return all(
            (x + y + z) % 3 == 0
            for x, y, z in zip(self.list_a, self.list_b, self.list_c)
        )

    def truncated(self, length: int) -> "CorrelatedLists":
        if length > self.length:
            raise ValueError(f"cannot truncate length {self.length} to {length}")
        return CorrelatedLists(
            self.list_a[:length], self.list_b[:length], self.list_c[:length]
        )


class CheckVerdict(Enum):
    CLEAN = "clean"
    TAMPERING_DETECTED = "tampering_detected"


@dataclass(frozen=True)
class CrossCheckReport:
    """Outcome of sacrificing a random subset of valid runs.

    ``checked_positions`` etc. hold run ids.  The per-position breakdowns
    (which checked runs were inconsistent, on which the traitor happened to
    reveal last) feed the reveal-order asymmetry detector.
    """

    checked_positions: frozenset
    reveal_orders: Dict[int, Tuple[GeneralId, GeneralId, GeneralId]]
    inconsistencies: int
    inconsistent_positions: frozenset
    traitor_last_count: int
    traitor_last_positions: frozenset
    verdict: CheckVerdict

    def __post_init__(self) -> None:
        if self.inconsistencies > len(self.checked_positions):
            raise ValueError("more inconsistencies than checked positions")
        if self.inconsistencies != len(self.inconsistent_positions):
            raise ValueError("inconsistency count does not match the position set")

    @property
    def checked(self) -> int:
        return len(self.checked_positions)

    def inconsistency_rate(self) -> float:
        return self.inconsistencies / self.checked if self.checked else 0.0


@dataclass(frozen=True)
class DistributionConfig:
    """Batch parameters.

    target_length: list positions wanted after the cross-check.
    check_fraction: probability each valid run is sacrificed to the check.
    detector_efficiency: per-run click probability (no dark counts).
    inconsistency_threshold: maximum tolerated inconsistency rate before
        declaring tampering; honest runs are exactly consistent, so the
        default 0 aborts on any violation.
    rng_seed: seed used when no generator is supplied.
    """

    target_length: int
    check_fraction: float = 0.2
    detector_efficiency: float = 1.0
    inconsistency_threshold: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.target_length < 1:
            raise ValueError(f"target_length must be >= 1, got {self.target_length!r}")
        if not 0.0 < self.check_fraction < 1.0:
            raise ValueError(
                f"check_fraction must be in (0, 1), got {self.check_fraction!r}"
            )
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError(
                f"detector_efficiency must be in (0, 1], got {self.detector_efficiency!r}"
            )
        if not 0.0 <= self.inconsistency_threshold < 1.0:
            raise ValueError(
                f"inconsistency_threshold must be in [0, 1), got {self.inconsistency_threshold!r}"
            )


class AttemptBudgetExceeded(RuntimeError):
    """Raised when an adversary suppresses valid runs past the attempt budget."""


# ---------------------------------------------------------------------------
# fast-path tables
# ---------------------------------------------------------------------------

# Honest operators are diag(1, w^m1, w^m2); a whole run is two exponent
# sums mod 3.  The outcome distribution for each exponent pair is computed
# once from the real operators so the fast path cannot drift from the
# linear-algebra path.


def _exponent_tables():
    probs = {}
    states = {}
    initial = prepare_initial()
    for m1, m2 in product(range(3), range(3)):
        op = PhaseOperator(TAU * m1 / 3.0, TAU * m2 / 3.0)
        state = apply_operator(op, initial)
        states[(m1, m2)] = state
        probs[(m1, m2)] = tuple(float(p) for p in outcome_probabilities(state))
    return probs, states


_PROB_TABLE, _STATE_TABLE = _exponent_tables()

# each party's contribution to the exponent pair: basis II adds (1, 1),
# encoding n adds (n, -n)
_BASIS_EXPONENT = {BasisChoice.I: 0, BasisChoice.II: 1}


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


def execute_run(
    choices_a: PartyChoices,
    choices_b: PartyChoices,
    choices_c: PartyChoices,
    attack=None,
    eta: float = 1.0,
    rng: Optional[RandomSource] = None,
    run_id: int = 0,
) -> RunRecord:
    """Send one qutrit through A, B and C and measure it.

    Args:
        choices_a / choices_b / choices_c: secret basis and number draws.
        attack: optional AttackHook acting after A (location 1) or after B
            (location 2).
        eta: detector efficiency; with probability 1 - eta the run records
            no click (outcome None) and can never become valid.
        rng: loyal parties' randomness (required when eta < 1 or for the
            measurement draw).
        run_id: identifier stamped on the record.

    The honest path tracks phase exponents mod 3; an engaged attack hook
    promotes the run to explicit state objects from its hop onward.
    """
    for label, choices in (("B", choices_b), ("C", choices_c)):
        if choices.number not in (0, 1):
            raise ValueError(f"general {label} encodes a bit, got {choices.number!r}")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta!r}")
    if rng is None:
        raise ValueError("execute_run needs a RandomSource")

    e1 = 0
    e2 = 0
    state = None
    trace = None
    for choices, hop in ((choices_a, 1), (choices_b, 2), (choices_c, None)):
        t = _BASIS_EXPONENT[choices.basis]
        n = choices.number
        if state is None:
            e1 = (e1 + t + n) % 3
            e2 = (e2 + t - n) % 3
        else:
            op = PhaseOperator(TAU * (t + n) / 3.0, TAU * (t - n) / 3.0)
            if isinstance(state, PureState):
                state = apply_operator(op, state)
            else:
                state = apply_operator_mixed(op, state)
        if hop is not None and attack is not None and attack.location == hop:
            if attack.engages():
                if state is None:
                    state = _STATE_TABLE[(e1, e2)]
                state = attack(state)
                trace = attack.description

    clicked = eta >= 1.0 or float(rng.random()) < eta
    outcome = None
    if clicked:
        probs = _PROB_TABLE[(e1, e2)] if state is None else outcome_probabilities(state)
        outcome = sample_outcome(probs, rng)
    return RunRecord(
        run_id=run_id,
        choices_a=choices_a,
        choices_b=choices_b,
        choices_c=choices_c,
        outcome=outcome,
        attack_trace=trace,
    )


_ANNOUNCE_ORDER = (GeneralId.C, GeneralId.B, GeneralId.A)


def reveal_and_sift(
    record: RunRecord,
    adversary: Optional[BasisAnnouncer] = None,
    claim_policy=None,
) -> RunRecord:
    """Step after the measurement: C's claim, then basis announcements.

    C announces whether outcome 0 fired (``claim_policy`` lets a dishonest
    C claim otherwise).  Without a claimed detection the run is invalid and
    no bases are revealed.  Otherwise bases are announced in reverse order
    C, B, A — a traitor's announcer speaks at its own turn after hearing
    the earlier ones — and the run is valid iff all three match.
    """
    if claim_policy is not None:
        claimed = bool(claim_policy(record.outcome))
    else:
        claimed = record.outcome is not None and record.outcome.index == 0
    record.detection_claimed = claimed
    if not claimed:
        record.bases_announced = None
        record.valid = False
        return record

    true_bases = {
        GeneralId.A: record.choices_a.basis,
        GeneralId.B: record.choices_b.basis,
        GeneralId.C: record.choices_c.basis,
    }
    heard: Dict[GeneralId, BasisChoice] = {}
    announced = []
    for general in _ANNOUNCE_ORDER:
        if adversary is not None and adversary.traitor is general:
            basis = adversary(dict(heard), record)
        else:
            basis = true_bases[general]
        heard[general] = basis
        announced.append(basis)
    record.bases_announced = tuple(announced)
    record.valid = all(b is announced[0] for b in announced)
    return record


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------


def _draw_choices(rng: RandomSource) -> Tuple[PartyChoices, PartyChoices, PartyChoices]:
    # bases are fair coins; numbers uniform over each party's alphabet
    basis_bits = rng.integers(0, 2, size=3)
    a = PartyChoices(
        basis=BasisChoice.II if basis_bits[0] else BasisChoice.I,
        number=int(rng.integers(0, 3)),
    )
    b = PartyChoices(
        basis=BasisChoice.II if basis_bits[1] else BasisChoice.I,
        number=int(rng.integers(0, 2)),
    )
    c = PartyChoices(
        basis=BasisChoice.II if basis_bits[2] else BasisChoice.I,
        number=int(rng.integers(0, 2)),
    )
    return a, b, c


def _attempt(hooks: ProtocolHooks, eta: float, rng: RandomSource, run_id: int) -> RunRecord:
    a, b, c = _draw_choices(rng)
    record = execute_run(a, b, c, attack=hooks.attack, eta=eta, rng=rng, run_id=run_id)
    return reveal_and_sift(
        record, adversary=hooks.basis_announcer, claim_policy=hooks.claim_policy
    )


def run_attempts(
    n_attempts: int,
    adversary: Optional[AdversaryStrategy] = None,
    eta: float = 1.0,
    rng: Optional[RandomSource] = None,
) -> List[RunRecord]:
    """Execute a fixed number of attempts (for yield and rate studies)."""
    strategy = adversary if adversary is not None else honest()
    if rng is None:
        rng = np.random.default_rng()
    hooks = hooks_for_strategy(strategy, rng)
    return [_attempt(hooks, eta, rng, i) for i in range(n_attempts)]


# attempts allowed per needed valid run, relative to the honest expectation
# of 12 attempts per valid run at unit efficiency
_BUDGET_FACTOR = 100


def _valid_runs_needed(config: DistributionConfig) -> int:
    # enough that after losing a Binomial(n, f) check sample, at least
    # target_length survivors remain except with negligible probability
    base = config.target_length / (1.0 - config.check_fraction)
    margin = 5.0 * math.sqrt(base * config.check_fraction) + 5.0
    return math.ceil(base + margin)


def run_batch(
    config: DistributionConfig,
    adversary: Optional[AdversaryStrategy] = None,
    rng: Optional[RandomSource] = None,
) -> List[RunRecord]:
    """Attempt runs until the batch holds enough valid ones for the target.

    The loop aims for ceil(L / (1 - f)) valid runs plus a safety margin for
    the binomial cross-check consumption.  An attempt budget of
    _BUDGET_FACTOR times the honest expectation (12 attempts per valid run
    at eta = 1) guards against adversaries that suppress valid runs.
    """
    strategy = adversary if adversary is not None else honest()
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    hooks = hooks_for_strategy(strategy, rng)
    eta = config.detector_efficiency
    needed = _valid_runs_needed(config)
    budget = _BUDGET_FACTOR * math.ceil(needed * 12.0 / eta)
    records: List[RunRecord] = []
    n_valid = 0
    run_id = 0
    while n_valid < needed:
        if run_id >= budget:
            raise AttemptBudgetExceeded(
                f"{n_valid} valid runs after {run_id} attempts "
                f"(needed {needed}, budget {budget})"
            )
        record = _attempt(hooks, eta, rng, run_id)
        records.append(record)
        n_valid += record.valid
        run_id += 1
    return records


# ---------------------------------------------------------------------------
# cross-check and list assembly
# ---------------------------------------------------------------------------

_GENERALS = (GeneralId.A, GeneralId.B, GeneralId.C)


def cross_check(
    records: Sequence[RunRecord],
    config: DistributionConfig,
    adversary: Optional[RevealHook] = None,
    rng: Optional[RandomSource] = None,
) -> CrossCheckReport:
    """Sacrifice a random subset of valid runs to test the sum rule.

    Each valid run is checked independently with probability
    ``config.check_fraction``.  For a checked run the three numbers are
    announced one by one in a fresh uniformly random order; a traitor's
    RevealHook answers at the traitor's turn, knowing what was said so
    far.  A checked position is inconsistent when the announced numbers do
    not sum to 0 mod 3.  Checked runs are marked consumed either way.
    """
    if rng is None:
        raise ValueError("cross_check needs a RandomSource")
    checked: List[int] = []
    orders: Dict[int, Tuple[GeneralId, GeneralId, GeneralId]] = {}
    inconsistent = set()
    traitor_last = set()
    for record in records:
        if not record.valid:
            continue
        if float(rng.random()) >= config.check_fraction:
            continue
        record.consumed_by_check = True
        perm = rng.permutation(3)
        order = tuple(_GENERALS[int(i)] for i in perm)
        true_numbers = {
            GeneralId.A: record.choices_a.number,
            GeneralId.B: record.choices_b.number,
            GeneralId.C: record.choices_c.number,
        }
        revealed: Dict[GeneralId, int] = {}
        for general in order:
            if adversary is not None and adversary.traitor is general:
                value = int(adversary(record.run_id, dict(revealed), record))
            else:
                value = true_numbers[general]
            revealed[general] = value
        checked.append(record.run_id)
        orders[record.run_id] = order
        if sum(revealed.values()) % 3 != 0:
            inconsistent.add(record.run_id)
        if adversary is not None and order[-1] is adversary.traitor:
            traitor_last.add(record.run_id)
    rate = len(inconsistent) / len(checked) if checked else 0.0
    verdict = (
        CheckVerdict.TAMPERING_DETECTED
        if rate > config.inconsistency_threshold
        else CheckVerdict.CLEAN
    )
    return CrossCheckReport(
        checked_positions=frozenset(checked),
        reveal_orders=orders,
        inconsistencies=len(inconsistent),
        inconsistent_positions=frozenset(inconsistent),
        traitor_last_count=len(traitor_last),
        traitor_last_positions=frozenset(traitor_last),
        verdict=verdict,
    )


def assemble_lists(records: Sequence[RunRecord]) -> CorrelatedLists:
    """Transcribe surviving valid runs into the three secret lists."""
    survivors = [r for r in records if r.valid and not r.consumed_by_check]
    return CorrelatedLists(
        list_a=tuple(r.choices_a.number for r in survivors),
        list_b=tuple(r.choices_b.number for r in survivors),
        list_c=tuple(r.choices_c.number for r in survivors),
    )


_VALID_COMBOS = ((0, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 0))


def sample_correlated_lists(length: int, rng: RandomSource) -> CorrelatedLists:
    """Draw lists directly from the honest valid-run distribution.

    Equivalent in law to running the full quantum pipeline and assembling
    the survivors (each position is an independent draw over the four
    combinations), at a tiny fraction of the cost.  Intended for studies of
    the agreement phase in isolation.
    """
    picks = rng.integers(0, 4, size=length)
    a, b, c = [], [], []
    for i in picks:
        x, y, z = _VALID_COMBOS[int(i)]
        a.append(x)
        b.append(y)
        c.append(z)
    return CorrelatedLists(tuple(a), tuple(b), tuple(c))


# ---------------------------------------------------------------------------
# closed-form expectations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TheoreticalStatistics:
    """Exact honest-protocol expectations (rationals, eta = 1)."""

    attempt_yield: Fraction
    mixed_basis_detection_rate: Fraction
    combo_distribution: Dict[str, Fraction]
    a_marginal: Dict[int, Fraction]


def _exact_outcome0(e1: int, e2: int) -> Fraction:
    # |1 + w^e1 + w^e2|^2 / 9 takes only the values 1, 0, 1/3
    if e1 == 0 and e2 == 0:
        return Fraction(1)
    if (e1 + e2) % 3 == 0:
        return Fraction(0)
    return Fraction(1, 3)


def theoretical_statistics() -> TheoreticalStatistics:
    """Enumerate all 96 honest configurations with exact weights.

    8 basis combinations x 12 number combinations, each equally likely;
    a run is valid when the bases match and outcome 0 fires.
    """
    total_yield = Fraction(0)
    mixed_weight = Fraction(0)
    mixed_detect = Fraction(0)
    combo_weight: Dict[str, Fraction] = {}
    for bases in product((BasisChoice.I, BasisChoice.II), repeat=3):
        for a, b, c in product(range(3), range(2), range(2)):
            weight = Fraction(1, 8) * Fraction(1, 12)
            t = sum(_BASIS_EXPONENT[x] for x in bases)
            s = a + b + c
            p0 = _exact_outcome0((t + s) % 3, (t - s) % 3)
            matched = bases[0] is bases[1] is bases[2]
            if matched:
                contribution = weight * p0
                total_yield += contribution
                if contribution:
                    key = f"{a}{b}{c}"
                    combo_weight[key] = combo_weight.get(key, Fraction(0)) + contribution
            else:
                mixed_weight += weight
                mixed_detect += weight * p0
    combo_distribution = {k: v / total_yield for k, v in sorted(combo_weight.items())}
    a_marginal: Dict[int, Fraction] = {0: Fraction(0), 1: Fraction(0), 2: Fraction(0)}
    for key, p in combo_distribution.items():
        a_marginal[int(key[0])] += p
    return TheoreticalStatistics(
        attempt_yield=total_yield,
        mixed_basis_detection_rate=mixed_detect / mixed_weight,
        combo_distribution=combo_distribution,
        a_marginal=a_marginal,
    )


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def run_records_to_jsonl(records: Sequence[RunRecord]) -> str:
    """Serialise records as JSON lines, field names matching the dataclass."""

    def choices_json(choices: PartyChoices):
        return {"basis": choices.basis.value, "number": choices.number}

    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "run_id": r.run_id,
                    "choices_a": choices_json(r.choices_a),
                    "choices_b": choices_json(r.choices_b),
                    "choices_c": choices_json(r.choices_c),
                    "outcome": None if r.outcome is None else r.outcome.index,
                    "attack_trace": r.attack_trace,
                    "detection_claimed": r.detection_claimed,
                    "bases_announced": (
                        None
                        if r.bases_announced is None
                        else [b.value for b in r.bases_announced]
                    ),
                    "valid": r.valid,
                    "consumed_by_check": r.consumed_by_check,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines)


def lists_to_jsonl(lists: CorrelatedLists, party) -> str:
    """Serialise one party's view of the lists as JSON lines.

    Only the requested party's own numbers are included, mirroring the
    privacy model (nobody ever sees another party's list).
    """
    if isinstance(party, str):
        party = GeneralId(party.upper())
    own = {
        GeneralId.A: ("l_a", lists.list_a),
        GeneralId.B: ("l_b", lists.list_b),
        GeneralId.C: ("l_c", lists.list_c),
    }[party]
    name, values = own
    return "\n".join(
        json.dumps({"position": j, name: v}, sort_keys=True)
        for j, v in enumerate(values)
    )
