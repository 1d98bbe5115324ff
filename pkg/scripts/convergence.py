"""Surface quadrature error of the interior functional against its closed form."""

import numpy as np

from common import CTX, TABLE1, point_sources, save

from emsource import build_sphere_surface, oracle_base, synthesize_point_source_data
from emsource.imaging import BaseEvaluator

if __name__ == "__main__":
    sources = point_sources(TABLE1)
    z = np.random.default_rng(5).uniform(-1.5, 1.5, (10, 3))
    want = np.stack([oracle_base(z, e, sources, CTX) for e in np.eye(3)], axis=-1)
    rows = []
    for n in (50, 100, 200, 400):
        data = synthesize_point_source_data(sources, build_sphere_surface(radius=5.0, n_phi=n, n_theta=n), CTX)
        got = BaseEvaluator(data)(z)
        worst = float(np.max(np.abs(got - want) / np.abs(want)))
        total = float(np.linalg.norm(got - want) / np.linalg.norm(want))
        print(f"{n:>4} x {n:<4} worst {worst:.2e}   norm-wise {total:.2e}")
        rows.append({"n": n, "worst": worst, "normwise": total})
    save("convergence", rows)
