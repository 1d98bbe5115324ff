"""The three-source case at 30% and 50% noise."""

import argparse

from common import TABLE5
from table1 import run

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    for delta in (0.3, 0.5):
        print(f"--- noise {delta:.0%}")
        run(TABLE5, f"table5_noise{int(delta * 100)}", delta, args.seed)
