#!/usr/bin/env python3
"""Minimal group size of GHZ_n correlations under x/y measurements.

Sweeps n = 3, 4 and the resources NS and S, printing the per-level LP
verdicts and the resulting MGS. The n = 4 unconstrained-resource level 2
has ~2 * 10^5 columns; expect a couple of minutes for that entry.

Usage: python scripts/ghz_mgs_experiment.py [n ...]
"""

import sys
import time

from mgs.membership import mgs
from mgs.quantum import born_correlation, builtin_state, xy_measurements


def run(n: int):
    P = born_correlation(builtin_state("ghz", n=n), xy_measurements(n))
    Px, err = P.to_rational(10 ** 6)
    print(f"GHZ_{n} with x/y settings (rationalization error {err:.1e})")
    for resource in ("NS", "S"):
        t0 = time.time()
        try:
            rep = mgs(Px, resource, k_max=(n + 1) // 2 + (n % 2 == 0))
        except Exception as exc:
            print(f"  {resource}: failed ({exc})")
            continue
        levels = ", ".join(
            f"k={k}: {r if isinstance(r, str) else r.status}"
            for k, r in sorted(rep.levels.items()))
        verdict = f"MGS = {rep.mgs}" if rep.mgs else f"MGS >= {rep.lower_bound}"
        print(f"  {resource}: {levels}  ->  {verdict}  [{time.time() - t0:.1f}s]")


if __name__ == "__main__":
    ns = [int(a) for a in sys.argv[1:]] or [3, 4]
    for n in ns:
        run(n)
