"""Six point sources whose moments differ by an order of magnitude, 10% noise."""

import argparse

from common import TABLE2
from table1 import run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()
    run(TABLE2, "table2", args.delta, args.seed)
