"""Identities and adversary strategy descriptions.

A strategy is a passive description of who the traitor is and what they do;
the machinery that turns a strategy into protocol hooks lives in
:mod:`qutrit_dba.adversaries`.  Keeping the vocabulary here avoids import
cycles between the distribution and agreement layers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .qutrit_core import AttackChannel

__all__ = [
    "GeneralId",
    "AttackBasis",
    "LiarPolicy",
    "AdversaryKind",
    "AdversaryStrategy",
    "honest",
    "intercept_resend",
    "kraus_attack",
    "false_detection_report",
    "reveal_liar",
    "traitor_a_conflicting",
    "traitor_b_forge_forward",
    "traitor_c_forge_forward",
    "strategy_from_name",
]


class GeneralId(Enum):
    """The three generals: A sends the commands, B and C are lieutenants."""

    A = "A"
    B = "B"
    C = "C"


class AttackBasis(Enum):
    """Basis an intercept-resend eavesdropper measures and reprepares in."""

    COMPUTATIONAL = "computational"
    FOURIER = "fourier"


@dataclass(frozen=True)
class LiarPolicy:
    """How a traitor answers cross-check reveals when asked before last.

    always_consistent: whenever the traitor reveals last they complete the
    sum to 0 mod 3, and when forced to guess they pick the most likely
    completion.  The resulting too-good-to-be-true consistency is itself a
    statistical tell.

    calibrated: same, but deliberately misses with the given rate when
    revealing last, to blend in with an expected inconsistency level.
    """

    always_consistent: bool = True
    error_rate: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError(f"error_rate must be in [0, 1], got {self.error_rate!r}")
        if self.always_consistent and self.error_rate != 0.0:
            raise ValueError("always_consistent policy cannot carry an error rate")

    @classmethod
    def calibrated(cls, error_rate: float) -> "LiarPolicy":
        return cls(always_consistent=False, error_rate=error_rate)


class AdversaryKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    KRAUS_ATTACK = "kraus_attack"
    FALSE_DETECTION_REPORT = "false_detection_report"
    REVEAL_LIAR = "reveal_liar"
    TRAITOR_A_CONFLICTING = "traitor_a_conflicting"
    TRAITOR_B_FORGE_FORWARD = "traitor_b_forge_forward"
    TRAITOR_C_FORGE_FORWARD = "traitor_c_forge_forward"


# which channel hops each general can touch: hop 1 is A->B, hop 2 is B->C
_REACHABLE_HOPS = {
    GeneralId.A: (1,),
    GeneralId.B: (1, 2),
    GeneralId.C: (2,),
}

_QUANTUM_KINDS = (AdversaryKind.INTERCEPT_RESEND, AdversaryKind.KRAUS_ATTACK)


@dataclass(frozen=True)
class AdversaryStrategy:
    """One adversary configuration for a whole protocol execution.

    Only the fields relevant to ``kind`` may be set; the constructor
    enforces that and that the traitor can physically reach the attacked
    hop.  ``attack_rate`` scales per-run participation for the quantum
    attacks; at 0.0 a run is statistically identical to an honest one.
    """

    kind: AdversaryKind = AdversaryKind.NONE
    traitor: Optional[GeneralId] = None
    basis: Optional[AttackBasis] = None
    location: Optional[int] = None
    channel: Optional[AttackChannel] = None
    report_rate: Optional[float] = None
    policy: Optional[LiarPolicy] = None
    target_plan: Optional[int] = None
    attack_rate: float = 1.0
    adaptive_basis: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.attack_rate <= 1.0:
            raise ValueError(f"attack_rate must be in [0, 1], got {self.attack_rate!r}")
        kind = self.kind
        if kind is AdversaryKind.NONE:
            self._forbid("traitor", "basis", "location", "channel", "report_rate",
                         "policy", "target_plan")
        elif kind in _QUANTUM_KINDS:
            if self.traitor is None or self.location is None:
                raise ValueError(f"{kind.value} needs a traitor and a hop location")
            if self.location not in (1, 2):
                raise ValueError(f"hop location must be 1 or 2, got {self.location!r}")
            if self.location not in _REACHABLE_HOPS[self.traitor]:
                raise ValueError(
                    f"general {self.traitor.value} cannot touch hop {self.location}"
                )
            if kind is AdversaryKind.INTERCEPT_RESEND:
                if self.basis is None:
                    raise ValueError("intercept_resend needs a measurement basis")
                self._forbid("channel", "report_rate", "policy", "target_plan")
            else:
                if self.channel is None:
                    raise ValueError("kraus_attack needs an AttackChannel")
                self._forbid("basis", "report_rate", "policy", "target_plan")
        elif kind is AdversaryKind.FALSE_DETECTION_REPORT:
            if self.traitor is not GeneralId.C:
                raise ValueError("only C announces detections, traitor must be C")
            if self.report_rate is None or not 0.0 <= self.report_rate <= 1.0:
                raise ValueError(f"report_rate must be in [0, 1], got {self.report_rate!r}")
            self._forbid("basis", "location", "channel", "policy", "target_plan")
        elif kind is AdversaryKind.REVEAL_LIAR:
            if self.traitor is None:
                raise ValueError("reveal_liar needs a traitor")
            if self.policy is None:
                raise ValueError("reveal_liar needs a LiarPolicy")
            # the liar tampers with the qutrit too, otherwise there is
            # nothing to hide: an underlying intercept-resend is implied
            if self.basis is None or self.location is None:
                raise ValueError("reveal_liar needs the underlying attack basis/location")
            if self.location not in _REACHABLE_HOPS[self.traitor]:
                raise ValueError(
                    f"general {self.traitor.value} cannot touch hop {self.location}"
                )
            self._forbid("channel", "report_rate", "target_plan")
        elif kind is AdversaryKind.TRAITOR_A_CONFLICTING:
            if self.traitor is not GeneralId.A:
                raise ValueError("traitor_a_conflicting requires traitor A")
            self._forbid("basis", "location", "channel", "report_rate", "policy",
                         "target_plan")
        elif kind is AdversaryKind.TRAITOR_B_FORGE_FORWARD:
            if self.traitor is not GeneralId.B:
                raise ValueError("traitor_b_forge_forward requires traitor B")
            self._forbid("basis", "location", "channel", "report_rate", "policy")
        elif kind is AdversaryKind.TRAITOR_C_FORGE_FORWARD:
            if self.traitor is not GeneralId.C:
                raise ValueError("traitor_c_forge_forward requires traitor C")
            self._forbid("basis", "location", "channel", "report_rate", "policy")
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown adversary kind {kind!r}")
        if self.target_plan is not None and self.target_plan not in (0, 1):
            raise ValueError(f"target_plan must be 0 or 1, got {self.target_plan!r}")

    def _forbid(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is not None:
                raise ValueError(f"{self.kind.value} does not take field {name!r}")

    @property
    def is_quantum(self) -> bool:
        """True when the strategy tampers with the qutrit in flight."""
        return self.kind in _QUANTUM_KINDS or self.kind is AdversaryKind.REVEAL_LIAR


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------


def honest() -> AdversaryStrategy:
    return AdversaryStrategy()


def intercept_resend(
    basis: AttackBasis = AttackBasis.COMPUTATIONAL,
    location: int = 1,
    traitor: Optional[GeneralId] = None,
    attack_rate: float = 1.0,
) -> AdversaryStrategy:
    """Eavesdropper measures the qutrit on one hop and resends the outcome state."""
    if traitor is None:
        traitor = GeneralId.B if location == 1 else GeneralId.C
    return AdversaryStrategy(
        kind=AdversaryKind.INTERCEPT_RESEND,
        traitor=traitor,
        basis=basis,
        location=location,
        attack_rate=attack_rate,
    )


def kraus_attack(
    channel: AttackChannel,
    location: int = 1,
    traitor: Optional[GeneralId] = None,
    attack_rate: float = 1.0,
) -> AdversaryStrategy:
    """Arbitrary channel applied to the qutrit on one hop."""
    if traitor is None:
        traitor = GeneralId.B if location == 1 else GeneralId.C
    return AdversaryStrategy(
        kind=AdversaryKind.KRAUS_ATTACK,
        traitor=traitor,
        channel=channel,
        location=location,
        attack_rate=attack_rate,
    )


def false_detection_report(rate: float = 1.0) -> AdversaryStrategy:
    """C claims detections that did not happen, inflating the valid-run pool."""
    return AdversaryStrategy(
        kind=AdversaryKind.FALSE_DETECTION_REPORT,
        traitor=GeneralId.C,
        report_rate=rate,
    )


def reveal_liar(
    policy: Optional[LiarPolicy] = None,
    traitor: GeneralId = GeneralId.A,
    basis: AttackBasis = AttackBasis.COMPUTATIONAL,
    location: Optional[int] = None,
) -> AdversaryStrategy:
    """Traitor eavesdrops and then lies at cross-check when revealing last.

    Defaults to traitor A: A's numbers range over all three trits, so A can
    always complete the revealed sum to 0 mod 3 when asked last.
    """
    if policy is None:
        policy = LiarPolicy()
    if location is None:
        location = _REACHABLE_HOPS[traitor][0]
    return AdversaryStrategy(
        kind=AdversaryKind.REVEAL_LIAR,
        traitor=traitor,
        policy=policy,
        basis=basis,
        location=location,
    )


def traitor_a_conflicting() -> AdversaryStrategy:
    """Commander sends plan 0 to one lieutenant and plan 1 to the other."""
    return AdversaryStrategy(
        kind=AdversaryKind.TRAITOR_A_CONFLICTING, traitor=GeneralId.A
    )


def traitor_b_forge_forward(target_plan: Optional[int] = None) -> AdversaryStrategy:
    """B forwards a forged command message to C instead of the real one."""
    return AdversaryStrategy(
        kind=AdversaryKind.TRAITOR_B_FORGE_FORWARD,
        traitor=GeneralId.B,
        target_plan=target_plan,
    )


def traitor_c_forge_forward(target_plan: Optional[int] = None) -> AdversaryStrategy:
    """C forwards a forged command message to B instead of the real one."""
    return AdversaryStrategy(
        kind=AdversaryKind.TRAITOR_C_FORGE_FORWARD,
        traitor=GeneralId.C,
        target_plan=target_plan,
    )


_FACTORIES = {
    "none": honest,
    "intercept_resend": intercept_resend,
    "kraus_attack": kraus_attack,
    "false_detection_report": false_detection_report,
    "reveal_liar": reveal_liar,
    "traitor_a_conflicting": traitor_a_conflicting,
    "traitor_b_forge_forward": traitor_b_forge_forward,
    "traitor_c_forge_forward": traitor_c_forge_forward,
}


def strategy_from_name(name: str, **params) -> AdversaryStrategy:
    """Build a strategy from its kind name and keyword parameters.

    String parameters coming from a command line are coerced: ``basis`` and
    ``traitor`` accept their enum value strings, ``policy`` accepts
    "always_consistent" or "calibrated" (with ``error_rate``).
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        known = ", ".join(sorted(_FACTORIES))
        raise ValueError(f"unknown strategy {name!r}; known: {known}") from None
    kwargs = dict(params)
    if isinstance(kwargs.get("basis"), str):
        kwargs["basis"] = AttackBasis(kwargs["basis"])
    if isinstance(kwargs.get("traitor"), str):
        kwargs["traitor"] = GeneralId(kwargs["traitor"].upper())
    if isinstance(kwargs.get("policy"), str):
        policy_name = kwargs.pop("policy")
        if policy_name == "always_consistent":
            kwargs["policy"] = LiarPolicy()
        elif policy_name == "calibrated":
            kwargs["policy"] = LiarPolicy.calibrated(float(kwargs.pop("error_rate", 0.0)))
        else:
            raise ValueError(f"unknown liar policy {policy_name!r}")
    return factory(**kwargs)
