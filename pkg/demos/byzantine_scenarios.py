"""Every built-in scenario, end to end.

Each trial distributes correlated lists over the qutrit channel, spends
a fraction of them on the cross-check, then plays the classical
agreement game.  The two success conditions: loyal generals all follow
one plan or all abort, and they never disobey a loyal commander.  Every
adversary either changes nothing, gets absorbed by the fallback, or
trips an abort; the conditions hold throughout.
"""

from qutrit_dba import (
    DistributionConfig,
    Scenario,
    SimulationSpec,
    emit_report,
    run_scenario,
)

SETTINGS = {
    Scenario.HONEST: (24, 0.5),
    Scenario.TRAITOR_A: (24, 0.5),
    Scenario.TRAITOR_B: (80, 0.3),
    Scenario.TRAITOR_C: (80, 0.3),
    Scenario.FALSE_REPORT: (24, 0.5),
    Scenario.INTERCEPT_RESEND: (16, 0.5),
    Scenario.KRAUS_ATTACK: (16, 0.5),
    Scenario.REVEAL_LIAR: (24, 0.5),
}


def main():
    print("50 trials per scenario\n")
    print(f"{'scenario':18s} {'aborted':>8s} {'completed':>10s} "
          f"{'inconsistency':>14s} {'success':>8s}")
    reports = {}
    for scenario, (length, fraction) in SETTINGS.items():
        spec = SimulationSpec(
            scenario=scenario,
            trials=50,
            distribution=DistributionConfig(
                target_length=length, check_fraction=fraction),
            seed=0,
        )
        report = run_scenario(spec)
        reports[scenario] = report
        agg = report.aggregates
        print(f"{scenario.value:18s} {agg['abort_total']:8d} "
              f"{50 - agg['abort_total']:10d} {agg['inconsistency_rate']:14.4f} "
              f"{agg['dba_success_rate']:8.2f}")

    print("\nquantum taps and false reports are caught before agreement even")
    print("starts; the conflicting commander is outvoted into the fallback;")
    print("forging lieutenants get flagged by the position-message check.\n")

    print("full report for the conflicting-commander scenario:")
    print(emit_report(reports[Scenario.TRAITOR_A], format="summary"))


if __name__ == "__main__":
    main()
