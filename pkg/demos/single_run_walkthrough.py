"""Walk one qutrit through the three generals, step by step.

A prepares the uniform superposition, everyone stamps their secret basis
and number onto the phases, C measures.  The run survives sifting only
when C saw outcome 0 and the announced bases all match.
"""

import numpy as np

from qutrit_dba import (
    BasisChoice,
    PartyChoices,
    apply_operator,
    basis_operator,
    detection_probability,
    encode_operator,
    execute_run,
    outcome_probabilities,
    prepare_initial,
    reveal_and_sift,
)


def show_state(label, state):
    amps = ", ".join(f"{a.real:+.3f}{a.imag:+.3f}j" for a in state.amplitudes)
    print(f"  {label}: [{amps}]")


def trace_circuit(choices):
    state = prepare_initial()
    show_state("prepared ", state)
    for name, ch in zip("ABC", choices):
        state = apply_operator(basis_operator(ch.basis), state)
        state = apply_operator(encode_operator(ch.number), state)
        show_state(f"after {name}  ", state)
    return state


def run_and_sift(choices, rng):
    a, b, c = choices
    record = execute_run(a, b, c, rng=rng)
    record = reveal_and_sift(record)
    bases = "/".join(ch.basis.value for ch in choices)
    numbers = record.combo()
    print(f"  bases {bases}, numbers {numbers}, outcome {record.outcome.index}"
          f" -> {'VALID' if record.valid else 'discarded'}")
    return record


def main():
    rng = np.random.default_rng(2024)

    print("=" * 60)
    print("Case 1: matched bases, numbers summing to 0 mod 3")
    print("=" * 60)
    choices = (
        PartyChoices(basis=BasisChoice.II, number=2),
        PartyChoices(basis=BasisChoice.II, number=0),
        PartyChoices(basis=BasisChoice.II, number=1),
    )
    state = trace_circuit(choices)
    probs = outcome_probabilities(state)
    print(f"  outcome probabilities: {np.round(probs, 6)}")
    print(f"  detection probability: {detection_probability(state):.6f}")
    print("  the encodings cancel, so C recovers the uniform state for sure")
    run_and_sift(choices, rng)

    print()
    print("=" * 60)
    print("Case 2: matched bases, nonzero sum  (never detected)")
    print("=" * 60)
    choices = (
        PartyChoices(basis=BasisChoice.I, number=1),
        PartyChoices(basis=BasisChoice.I, number=0),
        PartyChoices(basis=BasisChoice.I, number=1),
    )
    state = trace_circuit(choices)
    print(f"  detection probability: {detection_probability(state):.6f}")
    run_and_sift(choices, rng)

    print()
    print("=" * 60)
    print("Case 3: mixed bases  (detected 1/3 of the time, then discarded)")
    print("=" * 60)
    choices = (
        PartyChoices(basis=BasisChoice.I, number=2),
        PartyChoices(basis=BasisChoice.II, number=1),
        PartyChoices(basis=BasisChoice.I, number=0),
    )
    state = trace_circuit(choices)
    print(f"  detection probability: {detection_probability(state):.6f}")
    print("  basis announcements disagree, so sifting drops it regardless:")
    run_and_sift(choices, rng)


if __name__ == "__main__":
    main()
