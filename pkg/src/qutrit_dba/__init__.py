"""Qutrit-based detectable byzantine agreement for three generals.

A single qutrit, passed from the commander through both lieutenants and
measured, distributes number lists with a three-party correlation.  A
classical sifting and cross-checking layer turns those lists into the
primitive that makes one round of detectable agreement possible, and an
adversary suite probes where the guarantees break.
"""

from .qutrit_core import (
    AttackChannel,
    BasisChoice,
    MeasurementOutcome,
    MixedState,
    PhaseOperator,
    PureState,
    apply_channel,
    apply_operator,
    basis_operator,
    compose,
    dephasing_channel,
    depolarizing_channel,
    detection_probability,
    encode_operator,
    fourier_basis,
    identity_channel,
    outcome_probabilities,
    phase_shift_channel,
    prepare_initial,
    sample_outcome,
)
from .strategies import (
    AdversaryKind,
    AdversaryStrategy,
    AttackBasis,
    GeneralId,
    LiarPolicy,
    false_detection_report,
    honest,
    intercept_resend,
    kraus_attack,
    reveal_liar,
    strategy_from_name,
    traitor_a_conflicting,
    traitor_b_forge_forward,
    traitor_c_forge_forward,
)
from .distribution import (
    AttemptBudgetExceeded,
    CheckVerdict,
    CorrelatedLists,
    CrossCheckReport,
    DistributionConfig,
    PartyChoices,
    RunRecord,
    TheoreticalStatistics,
    assemble_lists,
    cross_check,
    execute_run,
    lists_to_jsonl,
    reveal_and_sift,
    run_attempts,
    run_batch,
    run_records_to_jsonl,
    sample_correlated_lists,
    theoretical_statistics,
)
from .agreement import (
    BOT,
    AgreementConfig,
    AgreementTranscript,
    ConsistencyVerdict,
    Decision,
    DecisionKind,
    Plan,
    PositionMessage,
    TableCase,
    VerdictReason,
    build_position_message,
    evaluate_conditions,
    final_decision,
    forward_message,
    run_agreement,
    table_case,
    transcript_to_json,
    verify_against_list,
)
from .adversaries import (
    AttackHook,
    ProtocolHooks,
    RevealHook,
    asymmetry_detected,
    channel_from_name,
    hooks_for_strategy,
    reveal_asymmetry_zscore,
)
from .harness import (
    SCHEMA_VERSION,
    Scenario,
    ScenarioReport,
    SimulationSpec,
    TrialOutcome,
    build_strategy,
    emit_report,
    main,
    merge_reports,
    parse_cli,
    parse_report,
    run_scenario,
    run_trial,
)

__version__ = "0.1.0"
