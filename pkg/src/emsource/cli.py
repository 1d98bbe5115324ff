"""Command-line entry points.

    emsource simulate CONFIG
    emsource reconstruct CONFIG DATA
    emsource field CONFIG DATA [--plane z=0.5] [--volume] [--normalize] [--png]
    emsource selfcheck

Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 selfcheck failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checks import format_report, run_selfcheck
from .config import ExperimentConfig, parse_config
from .forward import ConfigError, add_noise, synthesize_point_source_data, synthesize_small_volume_data
from .imaging import imaging_field
from .kernels import SingularityError
from .reconstruct import reconstruct_sources
from .storage import (
    ResultDocument,
    human_table,
    parse_plane,
    plane_field,
    read_cauchy_data,
    source_errors,
    write_cauchy_data,
    write_plane_csv,
    write_plane_png,
    write_result,
    write_vtk,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_SELFCHECK = 0, 1, 2, 3

log = logging.getLogger("emsource")


def simulate(cfg: ExperimentConfig):
    """Synthesize (noisy) Cauchy data for the configured sources."""
    surface = cfg.surface.build()
    sources = cfg.source_objects()
    if cfg.mode == "small-volume":
        data = synthesize_small_volume_data(sources, surface, cfg.ctx, cfg.quad_order)
    else:
        data = synthesize_point_source_data(sources, surface, cfg.ctx, allow_exterior=cfg.allow_exterior)
    return add_noise(data, cfg.noise.delta1, cfg.noise.delta2, cfg.noise.seed)


def check_data_matches(cfg: ExperimentConfig, data):
    if not np.isclose(data.k, cfg.k, rtol=1e-12):
        raise ConfigError(f"data wavenumber {data.k} differs from config k={cfg.k}")
    spec = data.surface.spec()
    want = {"center": list(cfg.surface.center), "radius": cfg.surface.radius,
            "n_phi": cfg.surface.n_phi, "n_theta": cfg.surface.n_theta}
    if not (np.allclose(spec["center"], want["center"]) and np.isclose(spec["radius"], want["radius"])
            and spec["n_phi"] == want["n_phi"] and spec["n_theta"] == want["n_theta"]):
        raise ConfigError(f"data surface {spec} does not match config surface {want}")


def run_reconstruction(cfg: ExperimentConfig, data, dense=None):
    """Reconstruct and assemble the result document and human table."""
    check_data_matches(cfg, data)
    grid = cfg.grid.build()
    params = cfg.reconstruction_params(dense)
    t0 = time.perf_counter()
    rec = reconstruct_sources(data, grid, cfg.imaging, params, mode=cfg.mode)
    wall = time.perf_counter() - t0
    truth = cfg.source_objects()
    errors = source_errors(rec, truth, cfg.mode) if truth else []
    doc = ResultDocument(
        reconstruction=rec.to_dict(),
        config=cfg.to_dict(),
        data_fingerprint=data.fingerprint(),
        data_provenance=data.metadata,
        errors=errors,
        stats={"wall_seconds": wall, **rec.diagnostics},
    )
    return rec, doc, human_table(rec, truth, errors)


def _out_stem(cfg: ExperimentConfig):
    return Path(cfg.output.dir) / cfg.output.stem


def cmd_simulate(args, cfg):
    data = simulate(cfg)
    json_path, csv_path = write_cauchy_data(data, _out_stem(cfg))
    print(f"wrote {json_path} and {csv_path}")
    print(f"sha256({csv_path.name}) = {hashlib.sha256(csv_path.read_bytes()).hexdigest()}")
    return EXIT_OK


def cmd_reconstruct(args, cfg):
    data = read_cauchy_data(args.data)
    rec, doc, table = run_reconstruction(cfg, data, dense=True if args.dense else None)
    json_path, txt_path = write_result(doc, table, _out_stem(cfg))
    print(table, end="")
    print(f"{len(rec.sources)} source(s); wrote {json_path} and {txt_path}")
    return EXIT_OK


def cmd_field(args, cfg):
    data = read_cauchy_data(args.data)
    check_data_matches(cfg, data)
    grid = cfg.grid.build()
    stem = _out_stem(cfg)
    written = []
    if args.plane or not args.volume:
        axis, level = parse_plane(args.plane or "z=0.5")
        pf = plane_field(grid, axis, level, cfg.imaging, data)
        tag = args.plane or "z=0.5"
        csv_path = stem.parent / f"{stem.name}.field_{tag.replace('=', '')}.csv"
        written.append(write_plane_csv(pf, csv_path, args.normalize))
        if args.png:
            written.append(write_plane_png(pf, csv_path.with_suffix(".png"), args.normalize))
        print(f"plane {tag}: max at {np.round(pf.argmax_point(), 3).tolist()}")
    if args.volume:
        fld = imaging_field(grid, cfg.imaging, data)
        written.append(write_vtk(fld, stem.parent / f"{stem.name}.field.vtk", args.normalize))
        print(f"volume: max at {np.round(fld.argmax_point(), 3).tolist()}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_selfcheck(args, cfg=None):
    results = run_selfcheck()
    print(format_report(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_SELFCHECK if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="emsource", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--threads", type=int, help="worker threads for the quadrature loops")
    parser.add_argument("--dense", action="store_true", help="evaluate the full fine grid (slow)")
    parser.add_argument("--seed", type=int, help="override the noise seed in the config")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="synthesize Cauchy data")
    p.add_argument("config")
    p = sub.add_parser("reconstruct", help="recover sources from Cauchy data")
    p.add_argument("config")
    p.add_argument("data")
    p = sub.add_parser("field", help="export an imaging field")
    p.add_argument("config")
    p.add_argument("data")
    p.add_argument("--plane", help="axis-aligned plane such as z=0.5")
    p.add_argument("--volume", action="store_true", help="write the whole grid as legacy VTK")
    p.add_argument("--normalize", action="store_true", help="scale the exported field to max 1")
    p.add_argument("--png", action="store_true", help="also write a PNG heatmap of the plane")
    sub.add_parser("selfcheck", help="run the kernel identity suite")
    return parser


COMMANDS = {"simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "field": cmd_field, "selfcheck": cmd_selfcheck}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads is not None:
            import numba

            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        cfg = None
        if args.command != "selfcheck":
            cfg = parse_config(args.config)
            if args.seed is not None:
                cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed))
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, SingularityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # surfaced as a runtime failure with context
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
