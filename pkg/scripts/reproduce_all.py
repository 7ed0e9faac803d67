#!/usr/bin/env python3
"""Run every bundled benchmark case and print a one-line-per-check table.

Usage: python scripts/reproduce_all.py [--quick]
--quick skips the one long LP (the four-party unconstrained-pair
membership), everything else runs in full.
"""

import sys

from mgs.reproduce import run_case

if __name__ == "__main__":
    quick = "--quick" in sys.argv[1:]
    sys.exit(run_case("all", skip_slow=quick))
