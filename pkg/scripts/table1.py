"""Three point sources with comparable moments, 10% noise."""

import argparse

from common import TABLE1, Timer, default_grid, point_data, point_sources, report, save

from emsource import ImagingSpec, reconstruct_sources


def run(table, name, delta=0.1, seed=2024, s=4):
    data = point_data(table, delta=delta, seed=seed)
    with Timer() as t:
        rec = reconstruct_sources(data, default_grid(), spec=ImagingSpec(s=s))
    errors = report(rec, point_sources(table))
    print(f"{len(rec.sources)} sources in {t.seconds:.1f} s")
    save(name, {"delta": delta, "seed": seed, "s": s, "seconds": t.seconds, "reconstruction": rec.to_dict(), "errors": errors})
    return rec


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("-s", type=int, default=4, help="imaging exponent")
    args = ap.parse_args()
    run(TABLE1, f"table1_s{args.s}", args.delta, args.seed, args.s)
