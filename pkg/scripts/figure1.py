"""Single source imaged on the plane z = 0.5 with one probe versus three probes."""

import argparse

import numpy as np

from common import CTX, RESULTS, save

from emsource import ImagingSpec, PointSource, SamplingGrid, add_noise, build_sphere_surface, synthesize_point_source_data
from emsource.imaging import BaseEvaluator
from emsource.storage import PlaneField, plane_field, write_plane_csv, write_plane_png

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--png", action="store_true", help="also write heatmaps (needs matplotlib)")
    args = ap.parse_args()
    x = np.array([-0.5, 0.0, 0.5])
    data = add_noise(
        synthesize_point_source_data([PointSource(x, (17, -7, -8))], build_sphere_surface(), CTX), 0.1, 0.1, args.seed
    )
    grid = SamplingGrid((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0), (201, 201, 201))
    three = plane_field(grid, 2, 0.5, ImagingSpec("interior", "modulus", 1), data)
    single_vals = np.abs(BaseEvaluator(data)(three.points()) @ np.ones(3)).reshape(three.values.shape)
    single = PlaneField(2, 0.5, three.u, three.v, single_vals, {"probe": [1, 1, 1]})
    results = {}
    for name, pf in (("three_probe", three), ("single_probe", single)):
        am = pf.argmax_point()
        rel = float(np.linalg.norm(am - x) / np.linalg.norm(x))
        print(f"{name}: argmax {am.round(3).tolist()}, relative location error {rel:.2%}")
        results[name] = {"argmax": am.tolist(), "relative_error": rel}
        write_plane_csv(pf, RESULTS / f"figure1_{name}.csv", normalize=True)
        if args.png:
            write_plane_png(pf, RESULTS / f"figure1_{name}.png", normalize=True)
    save("figure1", results)
