"""End-to-end acceptance checks for the whole protocol stack.

Each test covers one headline property of the scheme, prints a single
``criterion NN <name>: PASS/FAIL`` line, and enforces a wall-clock
budget.  Statistical checks run on fixed seeds so the suite is
deterministic; tolerances are sized so the frozen draws pass with wide
margins (several binomial sigma).
"""

from __future__ import annotations

import time
from collections import Counter
from itertools import product

import numpy as np

from qutrit_dba.agreement import (
    AgreementConfig,
    DecisionKind,
    Plan,
    TableCase,
    VerdictReason,
    evaluate_conditions,
    run_agreement,
)
from qutrit_dba.distribution import (
    DistributionConfig,
    PartyChoices,
    assemble_lists,
    cross_check,
    execute_run,
    run_attempts,
    run_batch,
    sample_correlated_lists,
)
from qutrit_dba.harness import Scenario, SimulationSpec, run_scenario
from qutrit_dba.qutrit_core import (
    BasisChoice,
    MixedState,
    apply_channel,
    apply_operator,
    apply_operator_mixed,
    basis_operator,
    dephasing_channel,
    detection_probability,
    encode_operator,
    outcome_probabilities,
    prepare_initial,
)
from qutrit_dba.strategies import (
    AttackBasis,
    intercept_resend,
    kraus_attack,
    reveal_liar,
    traitor_a_conflicting,
    traitor_b_forge_forward,
)
from qutrit_dba.adversaries import hooks_for_strategy, reveal_asymmetry_zscore

# number combinations compatible with the sum rule, A trit first
SUM0_COMBOS = ((0, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 0))


def _verdict(num: int, name: str, ok: bool, detail: str, elapsed: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"criterion {num:02d} {name}: {status} ({detail}, {elapsed:.1f}s)")


def _final_pure_state(bases, numbers):
    """Run the three-hop encoding circuit without any adversary."""
    state = prepare_initial()
    for basis, number in zip(bases, numbers):
        state = apply_operator(basis_operator(basis), state)
        state = apply_operator(encode_operator(number), state)
    return state


def test_01_exhaustive_detection_rule():
    # all 8 basis patterns x 12 number draws; detection is exactly 1 on
    # matched bases with sum 0 mod 3, exactly 0 on matched bases with a
    # nonzero sum, and exactly 1/3 whenever the bases disagree
    t0 = time.perf_counter()
    worst = 0.0
    n_configs = 0
    for bases in product((BasisChoice.I, BasisChoice.II), repeat=3):
        for numbers in product((0, 1, 2), (0, 1), (0, 1)):
            n_configs += 1
            p0 = detection_probability(_final_pure_state(bases, numbers))
            if len(set(bases)) == 1:
                expected = 1.0 if sum(numbers) % 3 == 0 else 0.0
            else:
                expected = 1.0 / 3.0
            worst = max(worst, abs(p0 - expected))
    elapsed = time.perf_counter() - t0
    ok = n_configs == 96 and worst <= 1e-12 and elapsed < 1.0
    _verdict(1, "exhaustive detection rule", ok,
             f"96 configs, worst |dp|={worst:.1e}", elapsed)
    assert n_configs == 96
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_02_honest_yield_and_combos():
    t0 = time.perf_counter()
    records = run_attempts(50000, rng=np.random.default_rng(7))
    valid = [r for r in records if r.valid]
    attempt_yield = len(valid) / 50000
    counts = Counter(r.combo() for r in valid)
    freqs = {c: counts[c] / len(valid) for c in ("000", "111", "201", "210")}
    elapsed = time.perf_counter() - t0
    ok = (
        abs(attempt_yield - 1 / 12) < 0.005
        and all(abs(f - 0.25) < 0.02 for f in freqs.values())
        and abs(freqs["201"] - freqs["210"]) < 0.015
        and elapsed < 10.0
    )
    _verdict(2, "honest yield and combos", ok,
             f"yield={attempt_yield:.4f}", elapsed)
    assert abs(attempt_yield - 1 / 12) < 0.005
    for combo, f in freqs.items():
        assert abs(f - 0.25) < 0.02, (combo, f)
    # the anticorrelated pair is symmetric under swapping B and C
    assert abs(freqs["201"] - freqs["210"]) < 0.015
    assert elapsed < 10.0


def test_03_efficiency_scaling():
    t0 = time.perf_counter()
    deviations = {}
    for eta in (0.25, 0.5, 1.0):
        records = run_attempts(50000, eta=eta, rng=np.random.default_rng(0))
        attempt_yield = sum(r.valid for r in records) / 50000
        deviations[eta] = abs(attempt_yield - eta / 12)
    elapsed = time.perf_counter() - t0
    ok = all(d < 0.005 for d in deviations.values()) and elapsed < 30.0
    _verdict(3, "efficiency scaling", ok,
             "max |dy|={:.4f}".format(max(deviations.values())), elapsed)
    for eta, d in deviations.items():
        assert d < 0.005, (eta, d)
    assert elapsed < 30.0


def test_04_list_sum_invariant():
    t0 = time.perf_counter()
    violations = 0
    positions = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        records = run_batch(
            DistributionConfig(target_length=48, check_fraction=0.2), rng=rng)
        lists = assemble_lists(records)
        for a, b, c in zip(lists.list_a, lists.list_b, lists.list_c):
            positions += 1
            violations += (a + b + c) % 3 != 0
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 10.0
    _verdict(4, "list sum invariant", ok,
             f"{positions} positions, {violations} violations", elapsed)
    assert violations == 0
    assert elapsed < 10.0


def test_05_intercept_resend_detection():
    t0 = time.perf_counter()
    # cross-check statistics with the tap on every run
    rng = np.random.default_rng(0)
    records = run_attempts(75000, adversary=intercept_resend(), rng=rng)
    valid = [r for r in records if r.valid]
    cfg = DistributionConfig(target_length=16, check_fraction=0.5)
    report = cross_check(valid, cfg, rng=rng)
    checked = len(report.checked_positions)
    rate = report.inconsistencies / checked

    # full pipeline: the verdict must fire in every single trial
    spec = SimulationSpec(
        scenario=Scenario.INTERCEPT_RESEND,
        trials=100,
        distribution=DistributionConfig(target_length=16, check_fraction=0.5),
        seed=0,
    )
    agg = run_scenario(spec).aggregates
    elapsed = time.perf_counter() - t0
    ok = (
        checked >= 3000
        and abs(rate - 2 / 3) < 0.03
        and agg["tampering_detected_total"] == 100
        and elapsed < 30.0
    )
    _verdict(5, "intercept-resend detection", ok,
             f"checked={checked}, rate={rate:.4f}, "
             f"detected {agg['tampering_detected_total']}/100", elapsed)
    assert checked >= 3000
    assert abs(rate - 2 / 3) < 0.03
    assert agg["tampering_detected_total"] == 100
    assert elapsed < 30.0


def _analytic_disturbed_detection(basis, numbers, channel):
    """Detection probability with the channel inserted after A's hop."""
    state = prepare_initial()
    state = apply_operator(basis_operator(basis), state)
    state = apply_operator(encode_operator(numbers[0]), state)
    rho = apply_channel(channel, MixedState(state.density()))
    for number in numbers[1:]:
        rho = apply_operator_mixed(basis_operator(basis), rho)
        rho = apply_operator_mixed(encode_operator(number), rho)
    return float(outcome_probabilities(rho)[0])


def _empirical_disturbed_worst(strategy_factory, bases, rng, n):
    """Worst |detection - 1/3| across matched sum-0 configs under attack."""
    worst = 0.0
    for basis in bases:
        for combo in SUM0_COMBOS:
            hooks = hooks_for_strategy(strategy_factory(), rng)
            hits = 0
            for i in range(n):
                ca, cb, cc = (PartyChoices(basis=basis, number=k) for k in combo)
                rec = execute_run(ca, cb, cc, attack=hooks.attack, rng=rng, run_id=i)
                hits += rec.outcome.index == 0
            worst = max(worst, abs(hits / n - 1 / 3))
    return worst


def test_06_mixed_state_disturbance():
    # a basis-matched sum-0 run detects with certainty when honest; any of
    # the three taps knocks that down to exactly 1/3 wherever it acts
    # nontrivially.  The reverse-basis tap resends an eigenstate of the
    # travelling state on basis-I runs, so only the basis-II runs are
    # disturbed there; the two computational taps disturb all eight configs.
    t0 = time.perf_counter()
    both = (BasisChoice.I, BasisChoice.II)
    only_ii = (BasisChoice.II,)

    analytic_worst = 0.0
    for basis in both:
        for combo in SUM0_COMBOS:
            p = _analytic_disturbed_detection(
                basis, combo, dephasing_channel("computational"))
            analytic_worst = max(analytic_worst, abs(p - 1 / 3))
    for combo in SUM0_COMBOS:
        p = _analytic_disturbed_detection(
            BasisChoice.II, combo, dephasing_channel("fourier"))
        analytic_worst = max(analytic_worst, abs(p - 1 / 3))

    rng = np.random.default_rng(0)
    n = 9000
    empirical_worst = max(
        _empirical_disturbed_worst(
            lambda: intercept_resend(basis=AttackBasis.COMPUTATIONAL),
            both, rng, n),
        _empirical_disturbed_worst(
            lambda: intercept_resend(basis=AttackBasis.FOURIER),
            only_ii, rng, n),
        _empirical_disturbed_worst(
            lambda: kraus_attack(dephasing_channel("computational")),
            both, rng, n),
    )
    elapsed = time.perf_counter() - t0
    ok = analytic_worst <= 1e-12 and empirical_worst < 0.02 and elapsed < 10.0
    _verdict(6, "mixed-state disturbance", ok,
             f"analytic |dp|={analytic_worst:.1e}, "
             f"empirical |dp|={empirical_worst:.4f}", elapsed)
    assert analytic_worst <= 1e-12
    assert empirical_worst < 0.02
    assert elapsed < 10.0


def test_07_conflicting_commander():
    # a commander sending opposite plans is caught by the cross forward:
    # both lieutenants land in the both-consistent-but-conflicting row and
    # follow the pre-agreed fallback, which satisfies both conditions
    t0 = time.perf_counter()
    cfg = AgreementConfig()
    rng = np.random.default_rng(0)
    good = 0
    for i in range(1000):
        lists = sample_correlated_lists(400, rng)
        plan = Plan.ATTACK if i % 2 == 0 else Plan.RETREAT
        t = run_agreement(lists, plan, adversary=traitor_a_conflicting(), cfg=cfg)
        good += (
            t.lieutenant_b.case is TableCase.IIB
            and t.lieutenant_c.case is TableCase.IIB
            and t.lieutenant_b.decision.kind is DecisionKind.FOLLOW
            and t.lieutenant_b.decision.plan is cfg.fallback_plan
            and t.lieutenant_c.decision.kind is DecisionKind.FOLLOW
            and t.lieutenant_c.decision.plan is cfg.fallback_plan
            and evaluate_conditions(t) == (True, True)
        )
    elapsed = time.perf_counter() - t0
    ok = good == 1000 and elapsed < 30.0
    _verdict(7, "conflicting commander", ok, f"{good}/1000 trials", elapsed)
    assert good == 1000
    assert elapsed < 30.0


def test_08_forged_forward_detection():
    # B forwards a fabricated position message for the opposite plan; with
    # 25 forged positions each surviving with probability 1/2, C's list
    # check fails except with probability 2^-25, far under the 1 - 2^-20
    # bound the 20-position floor guarantees
    t0 = time.perf_counter()
    cfg = AgreementConfig()
    rng = np.random.default_rng(0)
    mismatches = 0
    table_matches = 0
    min_forged = None
    for i in range(10000):
        lists = sample_correlated_lists(100, rng)
        plan = Plan.ATTACK if i % 2 == 0 else Plan.RETREAT
        t = run_agreement(lists, plan, adversary=traitor_b_forge_forward(), cfg=cfg)
        rec = t.lieutenant_c
        verdict = rec.received_verdict
        if verdict is not None and not verdict.consistent \
                and verdict.reason is VerdictReason.VALUE_MISMATCH:
            mismatches += 1
        if rec.case is TableCase.IID \
                and rec.decision.kind is DecisionKind.FOLLOW \
                and rec.decision.plan is plan:
            table_matches += 1
        forged = len(rec.received_message.positions)
        min_forged = forged if min_forged is None else min(min_forged, forged)
    frequency = mismatches / 10000
    elapsed = time.perf_counter() - t0
    ok = (
        min_forged >= 20
        and frequency >= 0.9999
        and table_matches == mismatches
        and elapsed < 30.0
    )
    _verdict(8, "forged forward detection", ok,
             f"freq={frequency:.5f}, forged>={min_forged}", elapsed)
    assert min_forged >= 20
    assert frequency >= 0.9999
    # every caught forgery resolves to own-data-good, peer-garbage
    assert table_matches == mismatches
    assert elapsed < 30.0


def test_09_reveal_order_asymmetry():
    # uniform reveal order puts the traitor last a third of the time; a
    # liar who only cheats when revealing last shows up as a last-vs-rest
    # inconsistency gap many standard errors wide
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    strategy = reveal_liar()
    records = run_attempts(120000, adversary=strategy, rng=rng)
    valid = [r for r in records if r.valid]
    hooks = hooks_for_strategy(strategy, rng)
    cfg = DistributionConfig(target_length=16, check_fraction=0.5)
    report = cross_check(valid, cfg, adversary=hooks.number_reveal, rng=rng)
    checked = len(report.checked_positions)
    last_fraction = report.traitor_last_count / checked
    z = reveal_asymmetry_zscore(report)
    elapsed = time.perf_counter() - t0
    ok = (
        checked >= 3000
        and abs(last_fraction - 1 / 3) < 0.02
        and z > 5.0
        and elapsed < 30.0
    )
    _verdict(9, "reveal-order asymmetry", ok,
             f"checked={checked}, last={last_fraction:.4f}, z={z:.1f}", elapsed)
    assert checked >= 3000
    assert abs(last_fraction - 1 / 3) < 0.02
    assert z > 5.0
    assert elapsed < 30.0


# forging traitors need lists long enough that a quarter-length forgery
# carries at least 20 positions; quantum taps and report liars abort at
# the cross-check, so short lists keep those scenarios cheap
_SCENARIO_SETTINGS = {
    Scenario.HONEST: (24, 0.5),
    Scenario.TRAITOR_A: (24, 0.5),
    Scenario.TRAITOR_B: (80, 0.3),
    Scenario.TRAITOR_C: (80, 0.3),
    Scenario.FALSE_REPORT: (24, 0.5),
    Scenario.INTERCEPT_RESEND: (16, 0.5),
    Scenario.KRAUS_ATTACK: (16, 0.5),
    Scenario.REVEAL_LIAR: (24, 0.5),
}


def test_10_conditions_across_scenarios():
    # every built-in scenario, 200 seeds each: loyal generals always either
    # agree on one plan or all abort, and never disobey a loyal commander
    t0 = time.perf_counter()
    failures = {}
    for scenario, (length, fraction) in _SCENARIO_SETTINGS.items():
        spec = SimulationSpec(
            scenario=scenario,
            trials=200,
            distribution=DistributionConfig(
                target_length=length, check_fraction=fraction),
            seed=0,
        )
        report = run_scenario(spec)
        agg = report.aggregates
        bad_trials = sum(
            1 for t in report.trials
            if t.failure is not None or not (t.broadcast and t.validity))
        if bad_trials or agg["failures"] or agg["dba_success_total"] != 200:
            failures[scenario.value] = (
                bad_trials, agg["failures"], agg["dba_success_total"])
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60.0
    _verdict(10, "conditions across scenarios", ok,
             f"8 scenarios x 200 seeds, failures={failures or 'none'}", elapsed)
    assert not failures, failures
    assert elapsed < 60.0
