"""Kernel identity suite used by ``emsource selfcheck``.

Each check returns a residual and the tolerance it must meet. The finite
difference oracles use central differences with step ``1e-5`` at unit-scale
separations and ``k = 20``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .forward import build_sphere_surface
from .kernels import TAYLOR_SWITCH, WaveContext

H = 1e-5


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def fd_gradient(f, x, h=H):
    """Central-difference gradient of a scalar (possibly complex) function."""
    x = np.asarray(x, dtype=float)
    out = []
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        out.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(out)


def fd_jacobian(f, x, h=H):
    """``J[a, b] = d f_b / d x_a`` for a vector field ``f``."""
    return fd_gradient(f, x, h)


def fd_curl(f, x, h=H):
    J = fd_jacobian(f, x, h)
    return np.array([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def _probe(r, seed=7):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=3)
    y = rng.uniform(-0.5, 0.5, 3)
    return y + r * d / np.linalg.norm(d), y


def dominance_counterexamples(n=1000, seed=11):
    """Count real vectors with none of ``8 p_i^2 - sum of the other two squares`` positive."""
    p = np.random.default_rng(seed).normal(size=(n, 3))
    sq = p**2
    tests = 9 * sq - sq.sum(axis=1, keepdims=True)
    return int(np.sum(~np.any(tests > 0, axis=1)))


def run_selfcheck(k=20.0):
    ctx = WaveContext(k)
    q = np.array([0.3, -1.1, 0.7])
    p = np.array([1.0 - 0.5j, 0.2 + 1.3j, -0.8])
    results = []

    x, y = _probe(0.6)
    coinc = kernels.im_green_apply(y, y, ctx, q)
    results.append(CheckResult("coincidence Im G(x,x)q = (k/6pi)q", _rel(coinc, k / (6 * np.pi) * q), 1e-10))

    inv = kernels.im_green_coincidence_inverse(ctx)
    results.append(
        CheckResult("coincidence inverse", float(np.abs(inv @ (k / (6 * np.pi) * np.eye(3)) - np.eye(3)).max()), 1e-14)
    )

    r_sw = TAYLOR_SWITCH / k
    d = np.array([0.6, -0.48, 0.64])
    below = kernels.im_green_apply(y + r_sw * (1 - 1e-9) * d, y, ctx, q)
    above = kernels.im_green_apply(y + r_sw * (1 + 1e-9) * d, y, ctx, q)
    results.append(CheckResult("Im G branch agreement at switch", _rel(below, above), 1e-8))

    x2, y2 = _probe(0.9, seed=3)
    sym = np.abs(kernels.im_green_apply(x2, y2, ctx, q) - kernels.im_green_apply(y2, x2, ctx, q)).max()
    results.append(CheckResult("Im G symmetry", float(sym), 1e-13))

    x, y = _probe(0.7)
    g = kernels.grad_scalar_green(x, y, ctx)
    g_fd = fd_gradient(lambda t: kernels.scalar_green(t, y, ctx), x)
    results.append(CheckResult("grad Phi vs finite differences", _rel(g, g_fd), 1e-5))

    x, y = _probe(0.9)

    def phi_p(t):
        return kernels.scalar_green(t, y, ctx) * p

    hess_p = fd_gradient(lambda t: np.sum(kernels.grad_scalar_green(t, y, ctx) * p), x)
    gp_def = phi_p(x) + hess_p / k**2
    results.append(CheckResult("G p vs finite-difference definition", _rel(kernels.green_tensor_apply(x, y, ctx, p), gp_def), 1e-5))

    x, y = _probe(1.1)
    curl_fd = fd_curl(lambda t: kernels.green_tensor_apply(t, y, ctx, p), x)
    results.append(CheckResult("curl G p vs finite differences", _rel(kernels.curl_green_apply(x, y, ctx, p), curl_fd), 1e-5))

    x, y = _probe(0.8)
    curl_fd = fd_curl(lambda t: kernels.im_green_apply(t, y, ctx, q), x)
    results.append(CheckResult("curl Im G q vs finite differences", _rel(kernels.curl_im_green_apply(x, y, ctx, q), curl_fd), 1e-5))

    x, y = _probe(0.7)
    results.append(
        CheckResult(
            "Im G q vs Im(G q)",
            _rel(kernels.im_green_apply(x, y, ctx, q), kernels.green_tensor_apply(x, y, ctx, q).imag),
            1e-10,
        )
    )

    results.append(CheckResult("dominance arithmetic counterexamples", float(dominance_counterexamples()), 0.0))

    surf = build_sphere_surface(radius=25.0, n_phi=100, n_theta=100)
    results.append(CheckResult("sphere weight sum", abs(surf.weights.sum() / (4 * np.pi * 25.0**2) - 1), 1e-3))
    return results


def format_report(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'residual':>10}  {'tolerance':>9}  status"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.residual:10.3e}  {r.tolerance:9.1e}  {'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
