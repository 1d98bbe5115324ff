"""Closed-form free-space kernels for time-harmonic Maxwell problems.

All functions broadcast over leading axes: points are arrays of shape
``(..., 3)`` and the result keeps the broadcast leading shape. The dyadic
Green's tensor is never formed as a 3x3 matrix; every operation returns its
action on a vector.

The tensor has the structure ``G(x, y) = a(R) I + b(R) w_hat w_hat^T`` with
``R = |x - y|``, so its imaginary part, curls and coincidence limit reduce to
a handful of radial profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# k|w| below which the series branch of the imaginary-part kernels is used.
TAYLOR_SWITCH = 1e-2

FOUR_PI = 4.0 * np.pi


class SingularityError(ValueError):
    """Raised when a singular kernel is evaluated at coincident points."""


@dataclass(frozen=True)
class WaveContext:
    """Single-frequency wave parameters."""

    k: float

    def __post_init__(self):
        if not np.isfinite(self.k) or self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.k


def _separation(x, y):
    w = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(w, axis=-1)
    return w, r


def _require_separated(r):
    if np.any(r == 0.0):
        raise SingularityError("kernel evaluated at coincident points x == y")


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def scalar_green(x, y, ctx: WaveContext):
    """Outgoing Helmholtz fundamental solution ``exp(ikR) / (4 pi R)``."""
    _, r = _separation(x, y)
    _require_separated(r)
    return np.exp(1j * ctx.k * r) / (FOUR_PI * r)


def grad_scalar_green(x, y, ctx: WaveContext):
    """Gradient of :func:`scalar_green` with respect to ``x``."""
    w, r = _separation(x, y)
    _require_separated(r)
    phi = np.exp(1j * ctx.k * r) / (FOUR_PI * r)
    radial = phi * (1j * ctx.k - 1.0 / r) / r
    return radial[..., None] * w


def green_tensor_apply(x, y, ctx: WaveContext, p):
    """Field of a point dipole: ``G(x, y) p``.

    Uses the near/far-field decomposition

        G p = Phi [(1 + i/(kR) - 1/(kR)^2) p + (-1 - 3i/(kR) + 3/(kR)^2)(w.p) w]

    with ``w`` the unit vector from ``y`` to ``x``.
    """
    w, r = _separation(x, y)
    _require_separated(r)
    k = ctx.k
    p = np.asarray(p)
    phi = np.exp(1j * k * r) / (FOUR_PI * r)
    kr = k * r
    a = phi * (1.0 + 1j / kr - 1.0 / kr**2)
    b = phi * (-1.0 - 3j / kr + 3.0 / kr**2)
    what = w / r[..., None]
    return a[..., None] * p + (b * _dot(what, p))[..., None] * what


def curl_green_apply(x, y, ctx: WaveContext, p):
    """``curl_x (G(x, y) p) = grad Phi x p``; the gradient-divergence part is curl free."""
    g = grad_scalar_green(x, y, ctx)
    return np.cross(g, np.broadcast_to(np.asarray(p), g.shape))


def im_green_profiles(r, k):
    """Radial coefficients ``(alpha, beta)`` with ``Im G = alpha I + beta w_hat w_hat^T``.

    Below ``k r < TAYLOR_SWITCH`` the second-order expansion about ``r = 0`` is
    used, which removes the ``(j0 - cos) / r^2`` cancellation.
    """
    r = np.asarray(r, dtype=float)
    kr = k * r
    small = kr < TAYLOR_SWITCH
    safe = np.where(small, 1.0, kr)
    j0 = np.sin(safe) / safe
    tail = (j0 - np.cos(safe)) / safe**2
    alpha = k * (j0 - tail) / FOUR_PI
    beta = k * (3.0 * tail - j0) / FOUR_PI
    alpha_series = k / (6.0 * np.pi) - k * kr**2 / (30.0 * np.pi)
    beta_series = k * kr**2 / (60.0 * np.pi)
    return np.where(small, alpha_series, alpha), np.where(small, beta_series, beta)


def im_green_apply(x, y, ctx: WaveContext, q):
    """Imaginary part of the Green's tensor applied to a real vector.

    Defined for all ``x, y``; at coincidence it returns ``(k / 6 pi) q``.
    """
    w, r = _separation(x, y)
    q = np.asarray(q, dtype=float)
    alpha, beta = im_green_profiles(r, ctx.k)
    # beta is O(r^2) on the series branch, so w / r is never needed there
    wq = _dot(w, q)
    r2 = np.where(r > 0, r * r, 1.0)
    return alpha[..., None] * q + (beta * wq / r2)[..., None] * w


def curl_im_profile(r, k):
    """Radial factor of ``Im grad Phi``: ``(k cos kR - sin(kR)/R) / (4 pi R)`` per unit ``w_hat``.

    Returned divided by ``r`` so that it multiplies the raw separation vector.
    """
    r = np.asarray(r, dtype=float)
    kr = k * r
    small = kr < TAYLOR_SWITCH
    safe_r = np.where(small, 1.0, r)
    safe_kr = k * safe_r
    exact = (k * np.cos(safe_kr) - np.sin(safe_kr) / safe_r) / (FOUR_PI * safe_r * safe_r)
    series = -(k**3) / (12.0 * np.pi) * (1.0 - kr**2 / 10.0)
    return np.where(small, series, exact)


def curl_im_green_apply(x, y, ctx: WaveContext, q):
    """``curl_x (Im G(x, y) q) = Im(grad Phi) x q``; vanishes at coincidence."""
    w, r = _separation(x, y)
    q = np.asarray(q, dtype=float)
    g = curl_im_profile(r, ctx.k)[..., None] * w
    return np.cross(g, np.broadcast_to(q, g.shape))


def im_green_coincidence_inverse(ctx: WaveContext):
    """Inverse of ``Im G(x, x) = (k / 6 pi) I``."""
    return (6.0 * np.pi / ctx.k) * np.eye(3)


def conj_green_apply(x, y, ctx: WaveContext, q):
    """Complex conjugate of the Green's tensor applied to a real vector."""
    return np.conj(green_tensor_apply(x, y, ctx, q))


def curl_conj_green_apply(x, y, ctx: WaveContext, q):
    """``curl_x (conj(G)(x, y) q) = conj(grad Phi) x q``."""
    g = np.conj(grad_scalar_green(x, y, ctx))
    return np.cross(g, np.broadcast_to(np.asarray(q), g.shape))
