"""Boundary functionals and the exponent-s imaging fields built from them.

The interior functional pairs the Cauchy data with ``Im G(., z) q``; it is
smooth in ``z`` everywhere, including on and outside the measurement surface.
The conjugate functional pairs the data with ``conj(G)(., z) q`` and is only
usable for ``z`` away from the surface.

For the moment-recovery and deflation machinery, everything is expressed
through the three components ``I(z, e_i)``, which are evaluated together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from . import kernels
from ._quadrature import conjugate_base, interior_base, pack_surface, subtract_terms
from .forward import CauchyData, ConfigError
from .kernels import SingularityError, WaveContext

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

BASE_KINDS = ("interior", "conjugate")
VARIANTS = ("modulus", "real", "imag")


@dataclass(frozen=True)
class SamplingGrid:
    """Rectilinear grid of sampling points, ``shape[a]`` nodes per axis including both ends."""

    lower: tuple
    upper: tuple
    shape: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        n = tuple(int(v) for v in self.shape)
        if len(lo) != 3 or len(hi) != 3 or len(n) != 3:
            raise ConfigError("sampling grid needs three axes")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError("sampling grid needs lower < upper on every axis")
        if any(v < 2 for v in n):
            raise ConfigError("sampling grid needs at least 2 nodes per axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "shape", n)

    @classmethod
    def cube(cls, half_width=1.5, n=201, center=(0.0, 0.0, 0.0)):
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width), (n, n, n))

    @property
    def step(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / (np.array(self.shape) - 1)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self):
        return [np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.shape)]

    def points(self) -> np.ndarray:
        ax = self.axes()
        mesh = np.meshgrid(*ax, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def point_at(self, index) -> np.ndarray:
        """Coordinates of integer node index ``(i, j, l)`` (array of indices allowed)."""
        idx = np.asarray(index)
        return np.array(self.lower) + idx * self.step

    def nearest_index(self, point) -> np.ndarray:
        idx = np.rint((np.asarray(point, dtype=float) - np.array(self.lower)) / self.step)
        return np.clip(idx.astype(int), 0, np.array(self.shape) - 1)

    def contains(self, point, tol=1e-12) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= np.array(self.lower) - tol) and np.all(p <= np.array(self.upper) + tol))

    def spec(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "shape": list(self.shape)}


@dataclass(frozen=True)
class ImagingSpec:
    base: str = "interior"
    variant: str = "real"
    s: int = 4

    def __post_init__(self):
        if self.base not in BASE_KINDS:
            raise ConfigError(f"imaging.base must be one of {BASE_KINDS}, got {self.base!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"imaging.variant must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.s) < 1:
            raise ConfigError(f"imaging.s must be a positive integer, got {self.s}")
        object.__setattr__(self, "s", int(self.s))


@dataclass
class ScalarField:
    grid: SamplingGrid
    values: np.ndarray
    label: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)

    def normalized(self) -> "ScalarField":
        vmax = self.values.max()
        vals = self.values / vmax if vmax > 0 else self.values.copy()
        return ScalarField(self.grid, vals, {**self.label, "normalized": True})

    def argmax_point(self) -> np.ndarray:
        idx = np.unravel_index(np.argmax(self.values), self.grid.shape)
        return self.grid.point_at(idx)


@dataclass(frozen=True)
class DeflationTerm:
    """An identified source part to subtract: ``part . Im G(location, z) e_i``."""

    location: np.ndarray
    part: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "location", np.asarray(self.location, dtype=float).reshape(3))
        object.__setattr__(self, "part", np.asarray(self.part, dtype=float).reshape(3))


class BaseEvaluator:
    """Evaluates ``[I(z, e_1), I(z, e_2), I(z, e_3)]`` by surface quadrature.

    ``kind="conjugate"`` evaluates the conjugate-kernel functional instead;
    sampling points closer than ``surface_tol`` (default a tenth of a
    wavelength) to the measurement sphere are singular for it.
    """

    def __init__(self, data: CauchyData, kind="interior", surface_tol=None):
        if kind not in BASE_KINDS:
            raise ConfigError(f"unknown base kind {kind!r}")
        self.data = data
        self.kind = kind
        self.k = float(data.k)
        surf = data.surface
        self.surface_tol = data.ctx.wavelength / 10 if surface_tol is None else float(surface_tol)
        nu_x_e = np.cross(surf.normals, data.E)
        self._pack = pack_surface(surf.points, surf.weights, nu_x_e, data.curlE_cross_nu)
        self.n_evaluations = 0

    def singular_mask(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float).reshape(-1, 3)
        if self.kind == "interior":
            return np.zeros(len(z), dtype=bool)
        return self.data.surface.distance(z) <= self.surface_tol

    def __call__(self, z, on_singular="raise"):
        """Return complex array ``(m, 3)``; singular rows are zero when ``on_singular="mask"``."""
        z = np.ascontiguousarray(np.asarray(z, dtype=float).reshape(-1, 3))
        self.n_evaluations += len(z)
        if self.kind == "interior":
            return interior_base(z, self._pack, self.k)
        bad = self.singular_mask(z)
        if bad.any() and on_singular == "raise":
            raise SingularityError(
                f"{int(bad.sum())} sampling point(s) within {self.surface_tol:.4g} of the "
                "measurement surface; the conjugate functional is singular there"
            )
        out = np.zeros((len(z), 3), dtype=complex)
        if (~bad).any():
            out[~bad] = conjugate_base(np.ascontiguousarray(z[~bad]), self._pack, self.k)
        return out


def _check_q(q):
    q = np.asarray(q, dtype=float).reshape(3)
    if not np.any(q):
        raise ValueError("probe vector q must be nonzero")
    return q


def base_I(z, q, data: CauchyData):
    """Interior boundary functional ``I(z, q)`` for one point or an array of points."""
    q = _check_q(q)
    z = np.asarray(z, dtype=float)
    vals = BaseEvaluator(data, "interior")(z.reshape(-1, 3)) @ q
    return vals[0] if z.ndim == 1 else vals.reshape(z.shape[:-1])


def base_I_hat(z, q, data: CauchyData, surface_tol=None):
    """Conjugate-kernel functional; raises :class:`SingularityError` near the surface."""
    q = _check_q(q)
    z = np.asarray(z, dtype=float)
    vals = BaseEvaluator(data, "conjugate", surface_tol)(z.reshape(-1, 3)) @ q
    return vals[0] if z.ndim == 1 else vals.reshape(z.shape[:-1])


def project(values, variant):
    if variant == "real":
        return values.real
    if variant == "imag":
        return values.imag
    if variant == "modulus":
        return np.abs(values)
    raise ValueError(f"unknown variant {variant!r}")


def terms_arrays(terms):
    if not terms:
        return np.zeros((0, 3)), np.zeros((0, 3))
    return (
        np.array([t.location for t in terms], dtype=float),
        np.array([t.part for t in terms], dtype=float),
    )


def deflate(z, projected, terms, k):
    """Subtract ``sum_t part_t . Im G(location_t, z) e_i`` from real values ``(m, 3)``."""
    locs, parts = terms_arrays(terms)
    z = np.ascontiguousarray(np.asarray(z, dtype=float).reshape(-1, 3))
    projected = np.ascontiguousarray(projected, dtype=float)
    if len(locs) == 0:
        return projected.copy()
    return subtract_terms(z, projected, locs, parts, float(k))


def deflated_base(z, i, data: CauchyData, terms=(), base="interior", variant="real"):
    """Projected base value for probe ``e_i`` (``i`` in 1..3) minus the known terms."""
    if i not in (1, 2, 3):
        raise ValueError("axis index must be 1, 2 or 3")
    if variant == "modulus":
        raise ValueError("deflation needs a real-valued projection ('real' or 'imag')")
    z = np.asarray(z, dtype=float)
    vals = project(BaseEvaluator(data, base)(z.reshape(-1, 3)), variant)
    out = deflate(z, vals, list(terms), data.k)[:, i - 1]
    return out[0] if z.ndim == 1 else out.reshape(z.shape[:-1])


def field_from_components(values, s):
    """``sum_i |values_i|^s`` for real or complex component rows ``(m, 3)``."""
    return np.sum(np.abs(values) ** s, axis=-1)


def imaging_values(z, spec: ImagingSpec, evaluator: BaseEvaluator, terms=(), base_values=None):
    """Imaging-function values at points ``z``; singular conjugate points evaluate to 0."""
    if base_values is None:
        base_values = evaluator(z, on_singular="mask")
    terms = list(terms)
    if spec.variant == "modulus":
        if terms:
            raise ValueError("the modulus variant does not support deflation terms")
        comps = base_values
    else:
        comps = deflate(z, project(base_values, spec.variant), terms, evaluator.k)
    return field_from_components(comps, spec.s)


def imaging_field(grid: SamplingGrid, spec: ImagingSpec, data: CauchyData, terms=(), round_index=1):
    """Evaluate the exponent-s imaging function on every node of ``grid``."""
    ev = BaseEvaluator(data, spec.base)
    z = grid.points()
    vals = imaging_values(z, spec, ev, terms)
    n_masked = int(ev.singular_mask(z).sum())
    label = {
        "base": spec.base,
        "variant": spec.variant,
        "s": spec.s,
        "round": round_index,
        "n_terms": len(list(terms)),
        "n_singular_masked": n_masked,
    }
    return ScalarField(grid, vals, label)


def oracle_base(z, q, sources, ctx: WaveContext):
    """Closed-form value of the interior functional: ``sum_j p_j . Im G(x_j, z) q``.

    Test oracle only; the reconstruction path never calls it.
    """
    q = _check_q(q)
    z = np.asarray(z, dtype=float)
    total = np.zeros(z.shape[:-1], dtype=complex)
    for s in sources:
        col = kernels.im_green_apply(s.location, z, ctx, q)
        total = total + np.sum(s.moment * col, axis=-1)
    return total
