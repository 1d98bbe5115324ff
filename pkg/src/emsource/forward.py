"""Measurement surfaces and synthetic Cauchy data.

The forward field is evaluated directly from the dyadic Green's tensor, so no
PDE discretization is involved. Noise follows a global relative model: one
uniform complex perturbation per data channel, rescaled so that its Euclidean
norm is an exact fraction of the clean channel's norm.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .kernels import WaveContext

RNG_NAME = "numpy.PCG64"


class ConfigError(ValueError):
    """Invalid physical or numerical configuration."""


@dataclass(frozen=True)
class PointSource:
    location: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.location, dtype=float).reshape(3)
        mom = np.asarray(self.moment, dtype=complex).reshape(3)
        if not np.all(np.isfinite(loc)) or not np.all(np.isfinite(mom)):
            raise ConfigError("point source has non-finite entries")
        if np.linalg.norm(mom) == 0:
            raise ConfigError("point source moment must be nonzero")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "moment", mom)


@dataclass(frozen=True)
class BallSource:
    """Constant vector density ``vector`` on a ball."""

    center: np.ndarray
    radius: float
    vector: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        v = np.asarray(self.vector, dtype=complex).reshape(3)
        if not self.radius > 0:
            raise ConfigError(f"ball radius must be positive, got {self.radius}")
        if np.linalg.norm(v) == 0:
            raise ConfigError("ball source vector must be nonzero")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius**3


def warn_if_crowded(locations, ctx: WaveContext):
    locs = np.asarray(locations, dtype=float).reshape(-1, 3)
    if len(locs) < 2:
        return
    d = np.linalg.norm(locs[:, None, :] - locs[None, :, :], axis=-1)
    d[np.diag_indices(len(locs))] = np.inf
    if d.min() < 2 * ctx.wavelength:
        warnings.warn(
            f"sources are only {d.min():.3g} apart (< 2 wavelengths); "
            "cross terms will bias the reconstruction",
            stacklevel=3,
        )


@dataclass(frozen=True)
class MeasurementSurface:
    """Sphere sampled on a midpoint grid in polar angle ``phi`` and azimuth ``theta``."""

    center: np.ndarray
    radius: float
    n_phi: int
    n_theta: int
    points: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def spec(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "radius": self.radius,
            "n_phi": self.n_phi,
            "n_theta": self.n_theta,
        }

    def distance(self, z):
        """Unsigned distance from points ``z`` to the sphere."""
        z = np.asarray(z, dtype=float)
        return np.abs(np.linalg.norm(z - self.center, axis=-1) - self.radius)


def build_sphere_surface(center=(0.0, 0.0, 0.0), radius=25.0, n_phi=100, n_theta=100):
    if not radius > 0:
        raise ConfigError(f"surface.radius must be positive, got {radius}")
    if int(n_phi) < 2 or int(n_theta) < 2:
        raise ConfigError("surface grid needs n_phi >= 2 and n_theta >= 2")
    n_phi, n_theta = int(n_phi), int(n_theta)
    center = np.asarray(center, dtype=float).reshape(3)
    dphi = np.pi / n_phi
    dtheta = 2 * np.pi / n_theta
    phi = (np.arange(n_phi) + 0.5) * dphi
    theta = (np.arange(n_theta) + 0.5) * dtheta
    pp, tt = np.meshgrid(phi, theta, indexing="ij")
    pp, tt = pp.ravel(), tt.ravel()
    normals = np.stack(
        [np.sin(pp) * np.cos(tt), np.sin(pp) * np.sin(tt), np.cos(pp)], axis=-1
    )
    points = center + radius * normals
    weights = radius**2 * np.sin(pp) * dphi * dtheta
    return MeasurementSurface(
        center=center,
        radius=float(radius),
        n_phi=n_phi,
        n_theta=n_theta,
        points=points,
        normals=normals,
        weights=weights,
        phi=pp,
        theta=tt,
    )


@dataclass(frozen=True)
class CauchyData:
    """Boundary traces ``E`` and ``curl E x nu`` on a measurement surface."""

    surface: MeasurementSurface
    k: float
    E: np.ndarray = field(repr=False)
    curlE_cross_nu: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.surface.size
        if self.E.shape != (n, 3) or self.curlE_cross_nu.shape != (n, 3):
            raise ConfigError("Cauchy data arrays must have shape (n_points, 3)")
        if not (np.all(np.isfinite(self.E)) and np.all(np.isfinite(self.curlE_cross_nu))):
            raise ConfigError("Cauchy data contain non-finite values")

    @property
    def ctx(self) -> WaveContext:
        return WaveContext(self.k)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.E).tobytes())
        h.update(np.ascontiguousarray(self.curlE_cross_nu).tobytes())
        return h.hexdigest()[:16]


def source_config_hash(sources) -> str:
    rows = []
    for s in sources:
        if isinstance(s, BallSource):
            rows.append(["ball", *s.center, s.radius, *map(str, s.vector)])
        else:
            rows.append(["point", *s.location, *map(str, s.moment)])
    blob = json.dumps(rows, default=float).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _check_inside(centers, extents, surface: MeasurementSurface, allow_exterior: bool):
    for c, ext in zip(centers, extents):
        d = np.linalg.norm(c - surface.center)
        if d + ext >= surface.radius:
            if d - ext > surface.radius and allow_exterior:
                warnings.warn(
                    f"source at {np.round(c, 4).tolist()} lies outside the measurement surface",
                    stacklevel=3,
                )
                continue
            raise ConfigError(
                f"source at {np.round(c, 4).tolist()} is not strictly inside the "
                f"measurement sphere of radius {surface.radius}"
            )


def synthesize_point_source_data(
    sources, surface: MeasurementSurface, ctx: WaveContext, allow_exterior=False
) -> CauchyData:
    """Exact Cauchy data of a finite set of point dipoles.

    ``allow_exterior`` admits sources outside the sphere (they still radiate
    onto it) for near-boundary experiments; sources on the surface are always
    rejected.
    """
    sources = list(sources)
    locs = [s.location for s in sources]
    _check_inside(locs, [0.0] * len(locs), surface, allow_exterior)
    warn_if_crowded(locs, ctx)
    x = surface.points
    E = np.zeros((surface.size, 3), dtype=complex)
    curl = np.zeros((surface.size, 3), dtype=complex)
    for s in sources:
        E += kernels.green_tensor_apply(x, s.location, ctx, s.moment)
        curl += kernels.curl_green_apply(x, s.location, ctx, s.moment)
    meta = {
        "kind": "point",
        "n_sources": len(sources),
        "source_hash": source_config_hash(sources),
        "noise": {"delta1": 0.0, "delta2": 0.0, "seed": None, "rng": RNG_NAME},
    }
    return CauchyData(surface, ctx.k, E, np.cross(curl, surface.normals), meta)


def ball_quadrature(order: int):
    """Reference nodes/weights on the unit ball.

    Gauss-Legendre in radius and in ``cos(phi)`` with ``order`` nodes each and
    ``2 * order`` uniform azimuths (the trapezoid rule is spectral in the
    periodic variable).
    """
    if int(order) < 2:
        raise ConfigError(f"quad_order must be >= 2, got {order}")
    order = int(order)
    t, wt = np.polynomial.legendre.leggauss(order)
    rad = 0.5 * (t + 1.0)
    wrad = 0.5 * wt * rad**2
    n_az = 2 * order
    az = 2 * np.pi * np.arange(n_az) / n_az
    waz = np.full(n_az, 2 * np.pi / n_az)
    rr, cc, aa = np.meshgrid(rad, t, az, indexing="ij")
    wr, wc, wa = np.meshgrid(wrad, wt, waz, indexing="ij")
    sin_p = np.sqrt(1.0 - cc**2)
    nodes = np.stack([rr * sin_p * np.cos(aa), rr * sin_p * np.sin(aa), rr * cc], axis=-1)
    return nodes.reshape(-1, 3), (wr * wc * wa).ravel()


def synthesize_small_volume_data(
    balls, surface: MeasurementSurface, ctx: WaveContext, quad_order=6
) -> CauchyData:
    """Cauchy data radiated by constant vector densities on small balls."""
    balls = list(balls)
    for i, a in enumerate(balls):
        if a.radius > ctx.wavelength / 4:
            warnings.warn(
                f"ball radius {a.radius} exceeds a quarter wavelength; "
                "the point-source approximation degrades",
                stacklevel=2,
            )
        for b in balls[i + 1 :]:
            if np.linalg.norm(a.center - b.center) < a.radius + b.radius:
                raise ConfigError("ball sources overlap")
    _check_inside([b.center for b in balls], [b.radius for b in balls], surface, False)
    nodes, wq = ball_quadrature(quad_order)
    x = surface.points[:, None, :]
    E = np.zeros((surface.size, 3), dtype=complex)
    curl = np.zeros((surface.size, 3), dtype=complex)
    for b in balls:
        y = b.center + b.radius * nodes
        wts = wq * b.radius**3
        # chunk over surface points to bound memory
        for lo in range(0, surface.size, 2048):
            xs = x[lo : lo + 2048]
            E[lo : lo + 2048] += np.einsum(
                "q,pqc->pc", wts, kernels.green_tensor_apply(xs, y, ctx, b.vector)
            )
            curl[lo : lo + 2048] += np.einsum(
                "q,pqc->pc", wts, kernels.curl_green_apply(xs, y, ctx, b.vector)
            )
    meta = {
        "kind": "small-volume",
        "n_sources": len(balls),
        "quad_order": int(quad_order),
        "source_hash": source_config_hash(balls),
        "noise": {"delta1": 0.0, "delta2": 0.0, "seed": None, "rng": RNG_NAME},
    }
    return CauchyData(surface, ctx.k, E, np.cross(curl, surface.normals), meta)


def _uniform_complex(rng, shape):
    return rng.uniform(-1.0, 1.0, shape) + 1j * rng.uniform(-1.0, 1.0, shape)


def add_noise(data: CauchyData, delta1: float, delta2: float, seed: int) -> CauchyData:
    """Relative uniform noise: ``E + delta1 * N1 / |N1| * |E|`` and likewise for the curl trace."""
    if delta1 < 0 or delta2 < 0:
        raise ConfigError("noise levels must be nonnegative")
    rng = np.random.Generator(np.random.PCG64(seed))
    n1 = _uniform_complex(rng, data.E.shape)
    n2 = _uniform_complex(rng, data.curlE_cross_nu.shape)
    E = data.E + delta1 * n1 / np.linalg.norm(n1) * np.linalg.norm(data.E)
    C = data.curlE_cross_nu + delta2 * n2 / np.linalg.norm(n2) * np.linalg.norm(
        data.curlE_cross_nu
    )
    if delta1 == 0:
        E = data.E.copy()
    if delta2 == 0:
        C = data.curlE_cross_nu.copy()
    meta = dict(data.metadata)
    meta["noise"] = {"delta1": float(delta1), "delta2": float(delta2), "seed": int(seed), "rng": RNG_NAME}
    return replace(data, E=E, curlE_cross_nu=C, metadata=meta)
