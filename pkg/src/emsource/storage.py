"""Persistence: Cauchy data (JSON + CSV), result documents and field exports."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forward import CauchyData, ConfigError, MeasurementSurface
from .imaging import BaseEvaluator, ImagingSpec, SamplingGrid, ScalarField, imaging_values

CSV_HEADER = (
    "idx,phi,theta,x,y,z,nux,nuy,nuz,w,"
    "ReE1,ImE1,ReE2,ImE2,ReE3,ImE3,ReC1,ImC1,ReC2,ImC2,ReC3,ImC3"
)
AXES = "xyz"


def _fmt(v):
    return format(float(v), ".17g")


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_cauchy_data(data: CauchyData, stem) -> tuple[Path, Path]:
    """Write ``<stem>.json`` (metadata) and ``<stem>.csv`` (one row per surface point)."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    s = data.surface
    cols = [s.phi, s.theta, *s.points.T, *s.normals.T, s.weights]
    for arr in (data.E, data.curlE_cross_nu):
        for c in range(3):
            cols += [arr[:, c].real, arr[:, c].imag]
    table = np.column_stack(cols)
    with open(csv_path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for i, row in enumerate(table):
            fh.write(str(i) + "," + ",".join(map(_fmt, row)) + "\n")
    meta = {
        "format": "emsource-cauchy-1",
        "k": float(data.k),
        "surface": s.spec(),
        "n_points": s.size,
        "csv": csv_path.name,
        "csv_sha256": _sha256(csv_path),
        "provenance": data.metadata,
    }
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return json_path, csv_path


def read_cauchy_data(path) -> CauchyData:
    """Read data written by :func:`write_cauchy_data`; ``path`` may name the JSON or the CSV."""
    path = Path(path)
    json_path = path.with_suffix(".json")
    try:
        meta = json.loads(json_path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read data metadata {json_path}: {exc.strerror}") from None
    csv_path = json_path.parent / meta["csv"]
    try:
        with open(csv_path, newline="") as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ConfigError(f"{csv_path}: unexpected CSV header")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read data table {csv_path}: {exc.strerror}") from None
    if table.shape != (meta["n_points"], 22):
        raise ConfigError(f"{csv_path}: expected {meta['n_points']} rows of 22 columns")
    spec = meta["surface"]
    surface = MeasurementSurface(
        center=np.array(spec["center"], dtype=float),
        radius=float(spec["radius"]),
        n_phi=int(spec["n_phi"]),
        n_theta=int(spec["n_theta"]),
        points=table[:, 3:6].copy(),
        normals=table[:, 6:9].copy(),
        weights=table[:, 9].copy(),
        phi=table[:, 1].copy(),
        theta=table[:, 2].copy(),
    )
    E = table[:, 10:16:2] + 1j * table[:, 11:16:2]
    C = table[:, 16:22:2] + 1j * table[:, 17:22:2]
    return CauchyData(surface, float(meta["k"]), E, C, meta.get("provenance", {}))


# result documents -------------------------------------------------------


def source_errors(rec, truth, mode="point"):
    """Per recovered source: nearest true source, location and moment (or direction) errors."""
    rows = []
    for s in rec.sources:
        if not truth:
            rows.append({"true_index": None})
            continue
        locs = np.array([t.location if hasattr(t, "location") else t.center for t in truth])
        j = int(np.argmin(np.linalg.norm(locs - s.location, axis=1)))
        t = truth[j]
        if mode == "small-volume":
            p = t.vector / np.linalg.norm(t.vector)
            est = s.direction
        else:
            p = t.moment
            est = s.moment
        rows.append(
            {
                "true_index": j,
                "location_error_max": float(np.max(np.abs(s.location - locs[j]))),
                "location_error": float(np.linalg.norm(s.location - locs[j])),
                "moment_relative_error": float(np.linalg.norm(est - p) / np.linalg.norm(p)),
            }
        )
    return rows


def _cfmt(z):
    z = complex(z)
    re, im = round(z.real, 3) + 0.0, round(z.imag, 3) + 0.0
    if im == 0:
        return f"{re:.3f}"
    if re == 0:
        return f"{im:.3f}i"
    sign = "+" if im >= 0 else "-"
    return f"{re:.3f}{sign}{abs(im):.3f}i"


def _vfmt(v, complex_=False):
    return "(" + ", ".join(_cfmt(c) if complex_ else f"{round(float(c), 3) + 0.0:.3f}" for c in v) + ")"


def human_table(rec, truth=None, errors=None):
    """Plain-text table with entries rounded to three decimals."""
    small = rec.mode == "small-volume"
    head = ["#", "computed location", "computed direction" if small else "computed moment"]
    if small:
        head.append("magnitude")
    if truth:
        head += ["true location", "true direction" if small else "true moment", "rel. error"]
    lines = [" | ".join(head)]
    for n, s in enumerate(rec.sources, 1):
        vec = s.direction if small else s.moment
        row = [str(n), _vfmt(s.location), _vfmt(vec, True)]
        if small:
            row.append(f"{s.magnitude:.3f}")
        if truth and errors and errors[n - 1].get("true_index") is not None:
            t = truth[errors[n - 1]["true_index"]]
            if small:
                row += [_vfmt(t.center), _vfmt(t.vector / np.linalg.norm(t.vector), True)]
            else:
                row += [_vfmt(t.location), _vfmt(t.moment, True)]
            row.append(f"{100 * errors[n - 1]['moment_relative_error']:.3f}%")
        lines.append(" | ".join(row))
    return "\n".join(lines) + "\n"


@dataclass
class ResultDocument:
    reconstruction: dict
    config: dict
    data_fingerprint: str
    data_provenance: dict
    errors: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "format": "emsource-result-1",
            "reconstruction": self.reconstruction,
            "errors": self.errors,
            "stats": self.stats,
            "config": self.config,
            "data_fingerprint": self.data_fingerprint,
            "data_provenance": self.data_provenance,
        }


def write_result(doc: ResultDocument, table: str, stem) -> tuple[Path, Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    json_path = stem.parent / (stem.name + ".result.json")
    txt_path = stem.parent / (stem.name + ".result.txt")
    json_path.write_text(json.dumps(doc.to_dict(), indent=2) + "\n")
    txt_path.write_text(table)
    return json_path, txt_path


# field export -----------------------------------------------------------


@dataclass
class PlaneField:
    """Imaging values on an axis-aligned plane; ``values[i, j]`` sits at ``(u[i], v[j])``."""

    axis: int
    level: float
    u: np.ndarray
    v: np.ndarray
    values: np.ndarray
    label: dict = field(default_factory=dict)

    @property
    def in_plane_axes(self):
        return [a for a in range(3) if a != self.axis]

    def points(self):
        uu, vv = np.meshgrid(self.u, self.v, indexing="ij")
        pts = np.empty(uu.shape + (3,))
        a, b = self.in_plane_axes
        pts[..., a], pts[..., b], pts[..., self.axis] = uu, vv, self.level
        return pts.reshape(-1, 3)

    def argmax_point(self):
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        p = np.empty(3)
        a, b = self.in_plane_axes
        p[a], p[b], p[self.axis] = self.u[i], self.v[j], self.level
        return p


def parse_plane(spec: str):
    """``"z=0.5"`` -> ``(2, 0.5)``."""
    try:
        name, value = spec.split("=")
        axis = AXES.index(name.strip().lower())
        return axis, float(value)
    except ValueError:
        raise ConfigError(f"plane must look like 'z=0.5', got {spec!r}") from None


def _check_plane(grid: SamplingGrid, axis, level):
    if not grid.lower[axis] <= level <= grid.upper[axis]:
        raise ConfigError(
            f"plane {AXES[axis]}={level} lies outside the grid box "
            f"[{grid.lower[axis]}, {grid.upper[axis]}]"
        )


def plane_field(grid: SamplingGrid, axis, level, spec: ImagingSpec, data: CauchyData, terms=()):
    """Evaluate an imaging function on one plane of ``grid`` (only that plane is computed)."""
    _check_plane(grid, axis, level)
    axes = grid.axes()
    a, b = [i for i in range(3) if i != axis]
    pf = PlaneField(axis, float(level), axes[a], axes[b], np.zeros((len(axes[a]), len(axes[b]))))
    ev = BaseEvaluator(data, spec.base)
    pts = pf.points()
    pf.values = imaging_values(pts, spec, ev, terms).reshape(pf.values.shape)
    pf.label = {
        "base": spec.base,
        "variant": spec.variant,
        "s": spec.s,
        "plane": f"{AXES[axis]}={level}",
        "n_singular_masked": int(ev.singular_mask(pts).sum()),
    }
    return pf


def slice_field(fld: ScalarField, axis, level):
    """Nearest-node slice of a volume field."""
    _check_plane(fld.grid, axis, level)
    ax = fld.grid.axes()
    i = int(np.argmin(np.abs(ax[axis] - level)))
    a, b = [j for j in range(3) if j != axis]
    vals = np.take(fld.values, i, axis=axis)
    return PlaneField(axis, float(ax[axis][i]), ax[a], ax[b], vals, dict(fld.label))


def write_plane_csv(pf: PlaneField, path, normalize=False):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    vals = pf.values
    if normalize and vals.max() > 0:
        vals = vals / vals.max()
    a, b = pf.in_plane_axes
    uu, vv = np.meshgrid(pf.u, pf.v, indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([AXES[a], AXES[b], "value"])
        for row in zip(uu.ravel(), vv.ravel(), vals.ravel()):
            w.writerow([_fmt(x) for x in row])
    return path


def write_plane_png(pf: PlaneField, path, normalize=False):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise RuntimeError("PNG export needs matplotlib (install the 'plot' extra)") from exc
    vals = pf.values / pf.values.max() if normalize and pf.values.max() > 0 else pf.values
    a, b = pf.in_plane_axes
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(
        vals.T, origin="lower", extent=(pf.u[0], pf.u[-1], pf.v[0], pf.v[-1]), cmap="jet", aspect="equal"
    )
    ax.set_xlabel(AXES[a])
    ax.set_ylabel(AXES[b])
    ax.set_title(f"{AXES[pf.axis]} = {pf.level:g}")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def write_vtk(fld: ScalarField, path, normalize=False):
    """Legacy-VTK ASCII structured points (x varies fastest)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    vals = fld.normalized().values if normalize else fld.values
    g = fld.grid
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"emsource field {json.dumps(fld.label, sort_keys=True)}"[:255] + "\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write("DIMENSIONS {} {} {}\n".format(*g.shape))
        fh.write("ORIGIN {} {} {}\n".format(*map(_fmt, g.lower)))
        fh.write("SPACING {} {} {}\n".format(*map(_fmt, g.step)))
        fh.write(f"POINT_DATA {g.size}\nSCALARS field double 1\nLOOKUP_TABLE default\n")
        flat = vals.ravel(order="F")
        for lo in range(0, flat.size, 6):
            fh.write(" ".join(map(_fmt, flat[lo : lo + 6])) + "\n")
    return path


def read_vtk(path) -> ScalarField:
    """Read back a file produced by :func:`write_vtk`."""
    with open(path) as fh:
        lines = fh.read().split("\n")
    if not lines[0].startswith("# vtk DataFile") or lines[3].strip() != "DATASET STRUCTURED_POINTS":
        raise ValueError(f"{path} is not a legacy structured-points file")
    dims = tuple(int(v) for v in lines[4].split()[1:])
    origin = np.array([float(v) for v in lines[5].split()[1:]])
    spacing = np.array([float(v) for v in lines[6].split()[1:]])
    vals = np.array(" ".join(lines[10:]).split(), dtype=float)
    grid = SamplingGrid(tuple(origin), tuple(origin + spacing * (np.array(dims) - 1)), dims)
    return ScalarField(grid, vals.reshape(dims, order="F"))
