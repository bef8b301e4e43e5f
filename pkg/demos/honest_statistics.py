"""Honest-run statistics against their closed-form values.

Monte Carlo over tens of thousands of attempts, compared with the exact
numbers: attempt yield 1/12 (times detector efficiency), the four number
combinations each landing a quarter of valid runs, and A's value 2
marking the anticorrelated half.
"""

from collections import Counter

import numpy as np

from qutrit_dba import run_attempts, theoretical_statistics

ATTEMPTS = 50000


def main():
    rng = np.random.default_rng(11)
    exact = theoretical_statistics()

    print(f"exact attempt yield     : {exact.attempt_yield} = {float(exact.attempt_yield):.6f}")
    print(f"exact combo distribution: { {k: str(v) for k, v in exact.combo_distribution.items()} }")
    print(f"exact A marginal        : { {k: str(v) for k, v in exact.a_marginal.items()} }")
    print()

    records = run_attempts(ATTEMPTS, rng=rng)
    valid = [r for r in records if r.valid]
    print(f"{ATTEMPTS} attempts at full efficiency -> {len(valid)} valid runs")
    print(f"observed yield: {len(valid) / ATTEMPTS:.5f}   (exact {float(exact.attempt_yield):.5f})")
    print()

    combos = Counter(r.combo() for r in valid)
    print("combo   count   freq    exact")
    for combo in ("000", "111", "201", "210"):
        freq = combos[combo] / len(valid)
        print(f"  {combo}  {combos[combo]:6d}   {freq:.4f}  {float(exact.combo_distribution[combo]):.4f}")
    print()

    a_counts = Counter(r.choices_a.number for r in valid)
    print("A value  count   freq    exact")
    for value in (0, 1, 2):
        freq = a_counts[value] / len(valid)
        print(f"      {value}  {a_counts[value]:6d}   {freq:.4f}  {float(exact.a_marginal[value]):.4f}")
    print()

    print("detector efficiency sweep (yield should scale linearly):")
    print("  eta    observed   eta/12")
    for eta in (0.25, 0.5, 0.75, 1.0):
        recs = run_attempts(ATTEMPTS, eta=eta, rng=np.random.default_rng(11))
        y = sum(r.valid for r in recs) / ATTEMPTS
        print(f"  {eta:.2f}   {y:.5f}    {eta / 12:.5f}")


if __name__ == "__main__":
    main()
