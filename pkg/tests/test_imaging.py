import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emsource import (
    ConfigError,
    DeflationTerm,
    ImagingSpec,
    PointSource,
    SamplingGrid,
    SingularityError,
    add_noise,
    base_I,
    base_I_hat,
    build_sphere_surface,
    deflated_base,
    imaging_field,
    oracle_base,
    synthesize_point_source_data,
)
from emsource.imaging import BaseEvaluator, field_from_components, project

from conftest import TABLE1, point_sources

E = np.eye(3)


@pytest.fixture(scope="module")
def probe_points():
    return np.random.default_rng(5).uniform(-1.5, 1.5, (10, 3))


@pytest.fixture(scope="module")
def fine_data():
    from emsource import WaveContext

    surf = build_sphere_surface(radius=5.0, n_phi=200, n_theta=200)
    return synthesize_point_source_data(point_sources(TABLE1), surf, WaveContext(20.0))


@pytest.fixture(scope="module")
def far_data():
    from emsource import WaveContext

    return synthesize_point_source_data(point_sources(TABLE1), build_sphere_surface(radius=25.0), WaveContext(20.0))


def oracle_matrix(z, sources, ctx):
    return np.stack([oracle_base(z, e, sources, ctx) for e in E], axis=-1)


def test_base_matches_closed_form(fine_data, probe_points, ctx):
    got = BaseEvaluator(fine_data)(probe_points)
    want = oracle_matrix(probe_points, point_sources(TABLE1), ctx)
    assert np.linalg.norm(got - want) / np.linalg.norm(want) <= 1e-3


def test_scalar_and_batch_agree(fine_data, probe_points):
    batch = base_I(probe_points, E[0], fine_data)
    assert batch.shape == (10,)
    assert base_I(probe_points[3], E[0], fine_data) == pytest.approx(batch[3], rel=1e-14)


def test_real_moments_give_real_base(ctx):
    src = [PointSource((0.2, -0.4, 0.1), (1.0, -2.0, 0.5)), PointSource((-0.8, 0.5, 0.6), (0.3, 0.9, -1.2))]
    data = synthesize_point_source_data(src, build_sphere_surface(radius=5.0, n_phi=200, n_theta=200), ctx)
    z = np.random.default_rng(1).uniform(-1.5, 1.5, (8, 3))
    vals = BaseEvaluator(data)(z)
    assert np.abs(vals.imag).max() <= 1e-3 * np.abs(vals).max()


@given(st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_linear_in_probe(fine_data, alpha):
    z = np.array([0.1, -0.3, 0.4])
    q = np.array([0.3, 1.0, -0.7])
    assert base_I(z, alpha * q, fine_data) == pytest.approx(alpha * base_I(z, q, fine_data), rel=1e-12)


def test_zero_probe_rejected(fine_data, ctx):
    with pytest.raises(ValueError):
        base_I(np.zeros(3), np.zeros(3), fine_data)
    with pytest.raises(ValueError):
        oracle_base(np.zeros(3), np.zeros(3), point_sources(TABLE1), ctx)


def test_oracle_coincidence(ctx):
    src = [PointSource((0.3, 0.1, -0.2), (2.0 - 1j, 0.5, 3.0))]
    for i in range(3):
        val = oracle_base(np.array(src[0].location), E[i], src, ctx)
        assert val == pytest.approx(ctx.k / (6 * np.pi) * src[0].moment[i], rel=1e-12)


def test_oracle_decay(ctx):
    src = [PointSource((0.0, 0.0, 0.0), (1.0, 2.0, -1.0))]
    d = np.linspace(5, 50, 40) * ctx.wavelength
    z = d[:, None] * np.array([0.6, 0.0, 0.8])
    scaled = np.stack([np.abs(oracle_base(z, e, src, ctx)) for e in E]).max(axis=0) * d
    assert scaled.max() < 2.0


def test_conjugate_matches_interior(far_data, probe_points):
    interior = BaseEvaluator(far_data)(probe_points)
    conj = BaseEvaluator(far_data, "conjugate")(probe_points)
    assert np.linalg.norm(conj - interior) / np.linalg.norm(interior) <= 1e-2
    assert base_I_hat(probe_points[0], E[1], far_data) == pytest.approx(conj[0, 1], rel=1e-13)


def test_conjugate_raises_on_surface(far_data):
    on_surface = far_data.surface.points[17]
    with pytest.raises(SingularityError):
        base_I_hat(on_surface, E[0], far_data)
    near = far_data.surface.points[17] * (1 - 0.001)
    with pytest.raises(SingularityError):
        base_I_hat(near, E[0], far_data)
    ev = BaseEvaluator(far_data, "conjugate")
    out = ev(np.stack([on_surface, np.zeros(3)]), on_singular="mask")
    assert np.all(out[0] == 0) and np.all(out[1] != 0)
    # the interior functional has no such restriction
    assert np.isfinite(base_I(on_surface, E[0], far_data))


def test_deflated_base_without_terms_is_projection(far_data, probe_points):
    raw = BaseEvaluator(far_data)(probe_points)
    for variant in ("real", "imag"):
        for i in (1, 2, 3):
            got = deflated_base(probe_points, i, far_data, (), variant=variant)
            assert np.array_equal(got, project(raw, variant)[:, i - 1])
    with pytest.raises(ValueError):
        deflated_base(probe_points, 1, far_data, (), variant="modulus")
    with pytest.raises(ValueError):
        deflated_base(probe_points, 4, far_data)


def test_subtracting_all_sources_leaves_floor(far_data, ctx):
    sources = point_sources(TABLE1)
    z = SamplingGrid.cube(1.5, 9).points()
    terms = [DeflationTerm(s.location, s.moment.real) for s in sources]
    full = np.stack([deflated_base(z, i, far_data, ()) for i in (1, 2, 3)], -1)
    resid = np.stack([deflated_base(z, i, far_data, terms) for i in (1, 2, 3)], -1)
    assert np.abs(resid).max() <= 1e-3 * np.abs(full).max()


def test_partial_subtraction_matches_remaining_oracle(far_data, ctx):
    sources = point_sources(TABLE1)
    z = np.random.default_rng(3).uniform(-1.5, 1.5, (20, 3))
    terms = [DeflationTerm(sources[0].location, sources[0].moment.real)]
    got = np.stack([deflated_base(z, i, far_data, terms) for i in (1, 2, 3)], -1)
    want = oracle_matrix(z, sources[1:], ctx).real
    assert np.linalg.norm(got - want) / np.linalg.norm(want) <= 1e-2


def test_field_is_nonnegative_and_labelled(far_data):
    grid = SamplingGrid.cube(1.5, 7)
    for variant in ("modulus", "real", "imag"):
        fld = imaging_field(grid, ImagingSpec("interior", variant, 3), far_data, round_index=2)
        assert np.all(fld.values >= 0)
        assert fld.label["variant"] == variant and fld.label["round"] == 2 and fld.label["s"] == 3
    norm = fld.normalized()
    assert norm.values.max() == pytest.approx(1.0)


def test_field_from_components_is_power_sum():
    v = np.array([[1.0, -2.0, 0.5], [0.0, 0.0, 0.0]])
    assert np.allclose(field_from_components(v, 4), [1 + 16 + 0.0625, 0.0])


def test_conjugate_field_masks_surface_nodes(ctx):
    src = [PointSource((0.1, 0.0, 0.0), (1.0, 0.0, 0.0))]
    data = synthesize_point_source_data(src, build_sphere_surface(radius=1.5, n_phi=20, n_theta=20), ctx)
    grid = SamplingGrid.cube(1.5, 5)
    fld = imaging_field(grid, ImagingSpec("conjugate", "modulus", 4), data)
    assert fld.label["n_singular_masked"] > 0


def test_single_source_field_peaks_at_source(ctx):
    x = (-0.5, 0.0, 0.5)
    data = add_noise(
        synthesize_point_source_data([PointSource(x, (17, -7, -8))], build_sphere_surface(), ctx), 0.1, 0.1, seed=1
    )
    grid = SamplingGrid.cube(0.25, 21, center=x)
    fld = imaging_field(grid, ImagingSpec("interior", "modulus", 1), data)
    assert np.max(np.abs(fld.argmax_point() - x)) <= grid.step.max() + 1e-12


def test_grid_validation():
    with pytest.raises(ConfigError):
        SamplingGrid((0, 0, 0), (1, 1, -1), (3, 3, 3))
    with pytest.raises(ConfigError):
        SamplingGrid((0, 0, 0), (1, 1, 1), (3, 1, 3))
    g = SamplingGrid.cube(1.5, 201)
    assert np.allclose(g.step, 0.015)
    assert g.size == 201**3
    assert np.allclose(g.point_at((100, 100, 100)), 0.0)
    assert tuple(g.nearest_index((0.0071, -0.0076, 1.5))) == (100, 99, 200)
    assert g.contains((1.5, 0, 0)) and not g.contains((1.6, 0, 0))


def test_points_are_ij_ordered():
    g = SamplingGrid((0, 0, 0), (1, 2, 3), (2, 3, 4))
    pts = g.points().reshape(2, 3, 4, 3)
    assert np.allclose(pts[1, 2, 3], (1, 2, 3))
    assert np.allclose(pts[0, 1, 0], (0, 1, 0))


def test_imaging_spec_validation():
    with pytest.raises(ConfigError):
        ImagingSpec(base="exterior")
    with pytest.raises(ConfigError):
        ImagingSpec(variant="phase")
    with pytest.raises(ConfigError):
        ImagingSpec(s=0)
