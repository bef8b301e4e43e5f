"""Why lying during the cross-check cannot be hidden.

Checked positions are revealed in a random order.  A traitor who waits
to hear the other two numbers can always claim the value that makes the
sum work, but only when asked last; that happens on just a third of the
positions.  Revealing earlier means guessing, so the inconsistencies
pile up exclusively on the traitor's not-last positions.  Splitting the
flagged positions by reveal order exposes the liar many standard errors
past any honest fluctuation.
"""

import numpy as np

from qutrit_dba import (
    DistributionConfig,
    GeneralId,
    cross_check,
    hooks_for_strategy,
    reveal_asymmetry_zscore,
    reveal_liar,
    run_attempts,
)

ATTEMPTS = 60000
CONFIG = DistributionConfig(target_length=16, check_fraction=0.5)


def split_by_order(report):
    last = report.traitor_last_positions
    flagged = report.inconsistent_positions
    checked = set(report.checked_positions)
    n_last = len(last)
    n_rest = len(checked) - n_last
    bad_last = len(flagged & last)
    bad_rest = len(flagged - last)
    return (n_last, bad_last), (n_rest, bad_rest)


def main():
    rng = np.random.default_rng(5)
    strategy = reveal_liar(traitor=GeneralId.A)

    records = run_attempts(ATTEMPTS, adversary=strategy, rng=rng)
    valid = [r for r in records if r.valid]
    hooks = hooks_for_strategy(strategy, rng)
    report = cross_check(valid, CONFIG, adversary=hooks.number_reveal, rng=rng)

    checked = len(report.checked_positions)
    print(f"{ATTEMPTS} attempts, {len(valid)} valid runs, {checked} checked\n")

    print(f"traitor A revealed last on {report.traitor_last_count} positions "
          f"({report.traitor_last_count / checked:.4f} of checks, expect 1/3)")
    print(f"inconsistencies overall: {report.inconsistencies} "
          f"({report.inconsistencies / checked:.4f} of checks, expect 1/3)\n")

    (n_last, bad_last), (n_rest, bad_rest) = split_by_order(report)
    print("reveal order   checked   flagged   rate")
    print(f"  A last        {n_last:6d}    {bad_last:6d}   {bad_last / n_last:.4f}")
    print(f"  A not last    {n_rest:6d}    {bad_rest:6d}   {bad_rest / n_rest:.4f}")
    print()
    print("hearing both numbers first lets A always pass; guessing fails half")
    print("the time, so every flag lands in the not-last row.\n")

    z = reveal_asymmetry_zscore(report)
    print(f"last-vs-rest asymmetry z-score: {z:.1f}  (threshold 5)")
    print(f"verdict: {report.verdict.value}")


if __name__ == "__main__":
    main()
