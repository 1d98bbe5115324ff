"""Reference source configurations and small helpers shared by the scripts."""

import json
import time
from pathlib import Path

import numpy as np

from emsource import (
    BallSource,
    PointSource,
    SamplingGrid,
    WaveContext,
    add_noise,
    build_sphere_surface,
    synthesize_point_source_data,
    synthesize_small_volume_data,
)

RESULTS = Path(__file__).resolve().parent.parent / "results"

TABLE1 = [
    ((-0.9, 0.0, 1.0), (-2.5, 4, -3)),
    ((-1.0, 0.75, -1.0), (-1 + 3j, 5 + 4j, 3)),
    ((1.1, -0.3, -1.0), (4.5j, -5, 3 - 2j)),
]
TABLE2 = [
    ((-1.2, 0.0, -1.0), (80 + 11j, 50 + 16j, -32j)),
    ((0.6, -1.0, -1.0), (12 - 23j, 35, 3 + 60j)),
    ((1.0, 0.5, 0.0), (-6, 7 + 40j, -18 + 5j)),
    ((-0.3, 0.0, 0.0), (-5j, 12, 9 + 14j)),
    ((-1.0, 0.8, 1.0), (7 - 26j, -2, 8)),
    ((0.0, -1.0, 1.0), (25, 10, 6)),
]
# the 50%-noise experiment reuses the three-source configuration
TABLE5 = TABLE1
TABLE6 = [
    ((1.0, 0.0, 1.2), 0.11, 85.170, (0.317 + 0.234j, -0.821, -0.410j)),
    ((-1.0, -0.6, 1.2), 0.12, 57.524, (0.574 - 0.244j, -0.173 + 0.695j, 0.312)),
    ((-1.0, 0.0, -1.0), 0.11, 26.571, (0.565, -0.338, -0.753)),
    ((1.0, 0.3, -1.0), 0.13, 29.547, (0.334j, -0.575j, 0.745j)),
    ((1.1, -0.7, 0.0), 0.10, 25.593, (0.508 + 0.351j, -0.468 + 0.586j, -0.234j)),
    ((0.0, 0.5, 0.0), 0.11, 19.712, (-0.482 + 0.386j, -0.579j, 0.531)),
]
TABLE7 = [
    ((-1.3, -1.3, -1.3), (-1, -1, -1)),
    ((1.4, 1.4, 1.4), (1, 1, 1)),
    ((-1.0, -1.0, 0.0), (-1, -1, -1)),
    ((0.7, 0.5, 0.0), (1, 1, 1)),
]

CTX = WaveContext(20.0)


def point_sources(table):
    return [PointSource(x, p) for x, p in table]


def ball_sources(table):
    return [BallSource(c, r, m * np.asarray(d)) for c, r, m, d in table]


def point_data(table, radius=25.0, delta=0.1, seed=2024):
    surf = build_sphere_surface(radius=radius)
    return add_noise(synthesize_point_source_data(point_sources(table), surf, CTX, allow_exterior=True), delta, delta, seed)


def ball_data(table, delta=0.1, seed=2024):
    surf = build_sphere_surface(radius=25.0)
    return add_noise(synthesize_small_volume_data(ball_sources(table), surf, CTX), delta, delta, seed)


def default_grid():
    return SamplingGrid.cube(1.5, 201)


def fmt_c(z):
    return f"{z.real:+.3f}{z.imag:+.3f}i"


def report(rec, truth, mode="point"):
    """Print recovered sources next to the nearest true source."""
    from emsource.storage import human_table, source_errors

    errors = source_errors(rec, truth, mode)
    print(human_table(rec, truth, errors), end="")
    return errors


def save(name, payload):
    RESULTS.mkdir(exist_ok=True)
    path = RESULTS / f"{name}.json"
    path.write_text(json.dumps(payload, indent=2, default=float))
    print(f"wrote {path}")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0
