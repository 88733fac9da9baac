"""Empirical verdict rates per batch, with and without an attack.

Runs independent batches at the default physical layer and tallies the
Bell-test verdicts. Under no attack every Fail is a false alarm; under
intercept-resend every Pass is a miss.
"""

import argparse
from collections import Counter

from quantum_seal.adversary import AttackKind, AttackPlan
from quantum_seal.analytics import central_counts_by_phase, estimate_visibility, bell_threshold_test
from quantum_seal.components import SealSetup
from quantum_seal.errors import InsufficientDataError
from quantum_seal.scenario import match_stream
from quantum_seal.simulator import BLOCK_WINDOWS, simulate


def tally(setup, plans, batches, batch_windows, seed, alpha):
    verdicts = Counter()
    for i in range(batches):
        stream = simulate(setup, seed, i * batch_windows, (i + 1) * batch_windows, plans)
        try:
            est = estimate_visibility(central_counts_by_phase(match_stream(stream, setup)))
            verdicts[bell_threshold_test(est, alpha=alpha).value] += 1
        except InsufficientDataError:
            verdicts["insufficient_data"] += 1
    return verdicts


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batches", type=int, default=200)
    ap.add_argument("--batch-blocks", type=int, default=4,
                    help=f"batch length in units of {BLOCK_WINDOWS} windows")
    ap.add_argument("--alpha", type=float, default=0.001)
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()

    setup = SealSetup()
    n = args.batch_blocks * BLOCK_WINDOWS
    attack = [AttackPlan(AttackKind.INTERCEPT_RESEND, 0, 10**12)]
    for label, plans in (("no attack", []), ("intercept-resend", attack)):
        counts = tally(setup, plans, args.batches, n, args.seed, args.alpha)
        shares = ", ".join(f"{k} {v / args.batches:.3f}" for k, v in sorted(counts.items()))
        print(f"{label:18s} {args.batches} batches of {n} windows: {shares}")


if __name__ == "__main__":
    main()
