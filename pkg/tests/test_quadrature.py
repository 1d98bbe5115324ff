import numpy as np
import pytest

from emsource import kernels
from emsource._quadrature import conjugate_base, interior_base, pack_surface, sincos, subtract_terms
from emsource.forward import build_sphere_surface


def test_sincos_matches_numpy():
    x = np.concatenate([np.linspace(-50, 50, 20001), np.random.default_rng(0).uniform(0, 1e3, 5000)])
    s, c = np.vectorize(sincos)(x)
    assert np.abs(s - np.sin(x)).max() < 1e-15 * 4
    assert np.abs(c - np.cos(x)).max() < 1e-15 * 4


@pytest.fixture(scope="module")
def setup():
    from emsource import WaveContext

    ctx = WaveContext(20.0)
    surf = build_sphere_surface(radius=3.0, n_phi=30, n_theta=40)
    rng = np.random.default_rng(1)
    n = surf.size
    A = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    C = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    z = rng.uniform(-1.5, 1.5, (7, 3))
    # include a sampling point on the surface itself for the smooth kernel
    z = np.vstack([z, surf.points[5]])
    return ctx, surf, A, C, z


def reference(ctx, surf, A, C, z, kind):
    out = np.zeros((len(z), 3), dtype=complex)
    for m, zm in enumerate(z):
        for i, e in enumerate(np.eye(3)):
            if kind == "interior":
                curl = kernels.curl_im_green_apply(surf.points, zm, ctx, e)
                g = kernels.im_green_apply(surf.points, zm, ctx, e)
                out[m, i] = np.sum(surf.weights * (np.sum(curl * A, -1) - np.sum(C * g, -1)))
            else:
                curl = kernels.curl_conj_green_apply(surf.points, zm, ctx, e)
                g = kernels.conj_green_apply(surf.points, zm, ctx, e)
                out[m, i] = 0.5j * np.sum(surf.weights * (np.sum(curl * A, -1) - np.sum(C * g, -1)))
    return out


def test_interior_kernel_matches_reference(setup):
    ctx, surf, A, C, z = setup
    pack = pack_surface(surf.points, surf.weights, A, C)
    got = interior_base(z, pack, ctx.k)
    want = reference(ctx, surf, A, C, z, "interior")
    assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_conjugate_kernel_matches_reference(setup):
    ctx, surf, A, C, z = setup
    z = z[:-1]
    pack = pack_surface(surf.points, surf.weights, A, C)
    got = conjugate_base(z, pack, ctx.k)
    want = reference(ctx, surf, A, C, z, "conjugate")
    assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_subtract_terms_matches_kernel(setup):
    ctx, _, _, _, z = setup
    rng = np.random.default_rng(2)
    locs = np.vstack([rng.uniform(-1, 1, (3, 3)), z[:1]])
    parts = rng.normal(size=(4, 3))
    vals = rng.normal(size=(len(z), 3))
    got = subtract_terms(z, vals, locs, parts, ctx.k)
    want = vals.copy()
    for x, v in zip(locs, parts):
        want -= kernels.im_green_apply(x, z, ctx, v)
    assert np.abs(got - want).max() < 1e-13
