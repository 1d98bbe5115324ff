from dataclasses import replace

import numpy as np
import pytest

import emsource.reconstruct as rc
from emsource import (
    ConfigError,
    DeflationTerm,
    ImagingSpec,
    PointSource,
    ReconstructionParams,
    SamplingGrid,
    ScalarField,
    add_noise,
    build_sphere_surface,
    deflation_loop,
    detect_peaks,
    group_dominant,
    merge_re_im,
    oracle_base,
    reconstruct_sources,
    recover_moment_component,
    synthesize_point_source_data,
)
from emsource.imaging import BaseEvaluator, imaging_values
from emsource.reconstruct import Peak, recover_part_vector

from conftest import TABLE1, point_sources

E = np.eye(3)


class OracleEvaluator(BaseEvaluator):
    """Closed-form base values in place of surface quadrature."""

    sources = ()

    def __call__(self, z, on_singular="raise"):
        z = np.asarray(z, dtype=float).reshape(-1, 3)
        self.n_evaluations += len(z)
        return np.stack([oracle_base(z, e, self.sources, self.data.ctx) for e in E], axis=-1)


def oracle_setup(monkeypatch, sources, ctx):
    cls = type("Oracle", (OracleEvaluator,), {"sources": tuple(sources)})
    monkeypatch.setattr(rc, "BaseEvaluator", cls)
    # a coarse surface only carries k and the source bookkeeping
    surf = build_sphere_surface(radius=25.0, n_phi=4, n_theta=4)
    return synthesize_point_source_data(sources, surf, ctx), cls


def gaussian_field(grid, centers, heights, width=0.1):
    pts = grid.points()
    vals = sum(h * np.exp(-np.sum((pts - c) ** 2, axis=1) / (2 * width**2)) for c, h in zip(centers, heights))
    return ScalarField(grid, vals)


# peak detection ---------------------------------------------------------


def test_constant_and_zero_fields_have_no_peaks():
    grid = SamplingGrid.cube(1.0, 11)
    params = ReconstructionParams()
    assert detect_peaks(ScalarField(grid, np.full(grid.shape, 3.0)), params) == []
    assert detect_peaks(ScalarField(grid, np.zeros(grid.shape)), params) == []


def test_two_bumps_give_two_peaks(ctx):
    grid = SamplingGrid.cube(1.5, 61)
    min_sep = ctx.wavelength / 2
    a = grid.point_at((20, 30, 30))
    b = a + np.array([grid.step[0] * round(5 * min_sep / grid.step[0]), 0, 0])
    peaks = detect_peaks(gaussian_field(grid, [a, b], [1.0, 0.5]), ReconstructionParams(min_sep=min_sep))
    assert len(peaks) == 2
    assert np.allclose(peaks[0].location, a) and np.allclose(peaks[1].location, b)
    assert peaks[0].value > peaks[1].value


def test_peak_threshold_and_separation():
    grid = SamplingGrid.cube(1.5, 61)
    a, b, c = grid.point_at((10, 30, 30)), grid.point_at((50, 30, 30)), grid.point_at((14, 30, 30))
    fld = gaussian_field(grid, [a, b], [1.0, 0.1], width=0.05)
    assert len(detect_peaks(fld, ReconstructionParams(eta=0.2))) == 1
    assert len(detect_peaks(fld, ReconstructionParams(eta=0.05))) == 2
    close = gaussian_field(grid, [a, c], [1.0, 0.8], width=0.04)
    assert len(detect_peaks(close, ReconstructionParams(min_sep=0.1))) == 2
    kept = detect_peaks(close, ReconstructionParams(min_sep=0.5))
    assert len(kept) == 1 and np.allclose(kept[0].location, a)


def test_peak_on_box_edge_is_found():
    grid = SamplingGrid.cube(1.0, 21)
    corner = grid.point_at((0, 0, 20))
    peaks = detect_peaks(gaussian_field(grid, [corner], [1.0]), ReconstructionParams())
    assert len(peaks) == 1 and np.allclose(peaks[0].location, corner)


def test_group_dominant():
    mk = lambda vals: [Peak(np.zeros(3), v) for v in vals]  # noqa: E731
    assert group_dominant([], 0.5) == ([], [])
    dom, rest = group_dominant(mk([2.0]), 0.5)
    assert len(dom) == 1 and rest == []
    dom, rest = group_dominant(mk([1.0, 0.9, 0.3]), 0.5)
    assert [p.value for p in dom] == [1.0, 0.9] and [p.value for p in rest] == [0.3]


# merging ----------------------------------------------------------------


def test_merge_pairs_identical_locations():
    x = np.array([0.1, 0.2, 0.3])
    rec = merge_re_im([(x, (1, 2, 3), 1)], [(x, (4, 5, 6), 2)], 0.05)
    (s,) = rec.sources
    assert np.allclose(s.moment, [1 + 4j, 2 + 5j, 3 + 6j])
    assert s.matched and s.re_round == 1 and s.im_round == 2


def test_merge_unpaired_parts():
    rec = merge_re_im([((0, 0, 0), (1, 0, 0), 1)], [((1, 0, 0), (0, 2, 0), 1)], 0.05)
    assert len(rec.sources) == 2
    im_only, re_only = rec.sources
    assert not re_only.matched and np.allclose(re_only.moment, [1, 0, 0])
    assert not im_only.matched and np.allclose(im_only.moment, [0, 2j, 0])
    assert re_only.im_round is None and im_only.re_round is None


def test_merge_prefers_nearest_and_real_location():
    re = [((0.0, 0, 0), (1, 0, 0), 1), ((0.06, 0, 0), (2, 0, 0), 1)]
    im = [((0.05, 0, 0), (0, 1, 0), 1)]
    rec = merge_re_im(re, im, 0.1)
    paired = [s for s in rec.sources if s.matched]
    assert len(paired) == 1
    assert np.allclose(paired[0].location, (0.06, 0, 0))
    assert np.allclose(paired[0].moment, [2, 1j, 0])


# moment recovery and deflation with closed-form base values ---------------


def test_exact_single_source(monkeypatch, ctx):
    grid = SamplingGrid.cube(0.6, 25)
    x = grid.point_at((7, 15, 12))
    p = np.array([2.0 - 1.0j, -0.5 + 3.0j, 1.5])
    data, _ = oracle_setup(monkeypatch, [PointSource(x, p)], ctx)
    rec = reconstruct_sources(data, grid, params=ReconstructionParams(dense=True))
    (s,) = rec.sources
    assert np.array_equal(s.location, x)
    assert np.linalg.norm(s.moment - p) <= 1e-10 * np.linalg.norm(p)
    assert s.matched


def test_strong_then_weak_source(monkeypatch, ctx):
    grid = SamplingGrid((-5.0, -0.5, -0.5), (5.0, 0.5, 0.5), (201, 21, 21))
    strong = PointSource(grid.point_at((6, 10, 10)), (10.0, 5.0, -3.0))
    weak_moment = np.array([-3.0, 5.0, 10.0]) * 0.1
    weak = PointSource(grid.point_at((194, 10, 10)), weak_moment)
    assert np.linalg.norm(weak.location - strong.location) / ctx.wavelength > 29.5
    data, _ = oracle_setup(monkeypatch, [strong, weak], ctx)
    params = ReconstructionParams(dense=True)
    part = deflation_loop(data, grid, ImagingSpec(variant="real"), params)
    assert [np.round(t.location, 6).tolist() for t in part.terms] == [
        np.round(strong.location, 6).tolist(),
        np.round(weak.location, 6).tolist(),
    ]
    assert part.term_rounds == [1, 2]
    # what remains is cross-talk between the two sources
    for term, src in zip(part.terms, (strong, weak)):
        assert np.linalg.norm(term.part - src.moment.real) <= 1e-2 * np.linalg.norm(src.moment)


def test_deflation_removes_accepted_peak(monkeypatch, ctx):
    grid = SamplingGrid.cube(1.5, 31)
    sources = point_sources(TABLE1)
    data, cls = oracle_setup(monkeypatch, sources, ctx)
    part = deflation_loop(data, grid, ImagingSpec(variant="real"), ReconstructionParams(dense=True, max_rounds=1))
    assert part.terms
    ev = cls(data)
    spec = ImagingSpec(variant="real")
    locs = np.array([t.location for t in part.terms])
    before = imaging_values(locs, spec, ev)
    after = imaging_values(locs, spec, ev, part.terms)
    assert np.all(after <= 0.5 * before)


def test_cross_talk_shrinks_with_distance(monkeypatch, ctx):
    x1 = np.zeros(3)
    p1 = np.array([1.0, 2.0, -1.0])
    d0 = 20 * ctx.wavelength

    def worst(d):
        errs = []
        for dd in np.linspace(d, d + ctx.wavelength, 15):
            data, cls = oracle_setup(monkeypatch, [PointSource(x1, p1), PointSource((dd, 0.3, 0), (0.5, 2.0, 1.0))], ctx)
            got = [recover_moment_component(x1, i, data, evaluator=cls(data)) for i in (1, 2, 3)]
            errs.append(np.max(np.abs(np.array(got) - p1)))
        return max(errs)

    near, far = worst(d0), worst(2 * d0)
    assert far < near
    assert far <= 0.75 * near


def test_part_vector_probe_scaling(monkeypatch, ctx):
    x = np.array([0.2, -0.1, 0.3])
    p = np.array([1.0 + 2.0j, -3.0, 0.5j])
    data, cls = oracle_setup(monkeypatch, [PointSource(x, p)], ctx)
    ev = cls(data)
    assert np.allclose(recover_part_vector(x, data, variant="real", evaluator=ev), p.real, atol=1e-12)
    assert np.allclose(recover_part_vector(x, data, variant="imag", evaluator=ev), p.imag, atol=1e-12)
    with pytest.raises(ValueError):
        recover_moment_component(x, 0, data, evaluator=ev)


# full pipeline on quadrature data ------------------------------------------


@pytest.fixture(scope="module")
def small_run_inputs():
    from emsource import WaveContext

    ctx = WaveContext(20.0)
    data = synthesize_point_source_data(point_sources(TABLE1), build_sphere_surface(), ctx)
    grid = SamplingGrid.cube(1.5, 41)
    params = ReconstructionParams(coarse_n=16)
    return data, grid, params


def test_zero_data_gives_no_sources(small_run_inputs):
    data, grid, params = small_run_inputs
    zero = replace(data, E=np.zeros_like(data.E), curlE_cross_nu=np.zeros_like(data.curlE_cross_nu))
    part = deflation_loop(zero, grid, ImagingSpec(variant="real"), params)
    assert part.rounds == [] and part.terms == [] and part.stop_reason == "zero data"
    rec = reconstruct_sources(zero, grid, params=params)
    assert rec.sources == []


def test_modulus_variant_rejected_for_deflation(small_run_inputs):
    data, grid, params = small_run_inputs
    with pytest.raises(ValueError):
        deflation_loop(data, grid, ImagingSpec(variant="modulus"), params)


def test_deterministic(small_run_inputs):
    data, grid, params = small_run_inputs
    noisy = add_noise(data, 0.1, 0.1, seed=5)
    a = reconstruct_sources(noisy, grid, params=params)
    b = reconstruct_sources(noisy, grid, params=params)
    assert a.to_dict()["sources"] == b.to_dict()["sources"]
    assert a.to_dict()["rounds_re"] == b.to_dict()["rounds_re"]


def test_scaling_equivariance(small_run_inputs, ctx):
    data, grid, params = small_run_inputs
    c = 3.0
    scaled_src = [PointSource(s.location, c * s.moment) for s in point_sources(TABLE1)]
    scaled = synthesize_point_source_data(scaled_src, data.surface, ctx)
    a = reconstruct_sources(data, grid, params=params)
    b = reconstruct_sources(scaled, grid, params=params)
    assert len(a.sources) == len(b.sources) == 3
    for sa, sb in zip(a.sources, b.sources):
        assert np.array_equal(sa.location, sb.location)
        assert np.allclose(sb.moment, c * sa.moment, rtol=1e-9)
    for ra, rb in zip(a.rounds_re, b.rounds_re):
        assert rb.field_max == pytest.approx(c**4 * ra.field_max, rel=1e-9)
        assert [p.location.tolist() for p in ra.peaks] == [p.location.tolist() for p in rb.peaks]


def test_small_grid_run_finds_table1(small_run_inputs):
    data, grid, params = small_run_inputs
    rec = reconstruct_sources(data, grid, params=params)
    truth = np.array([s.location for s in point_sources(TABLE1)])
    assert len(rec.sources) == 3
    for s in rec.sources:
        assert np.abs(truth - s.location).max(axis=1).min() <= grid.step.max() + 1e-12
    # the first source has a real moment, so only the other two pair up
    assert sum(s.matched for s in rec.sources) == 2
    assert rec.diagnostics["two_stage"]
    assert rec.diagnostics["base_evaluations"] < grid.size


def test_reconstruction_document(small_run_inputs):
    data, grid, params = small_run_inputs
    doc = reconstruct_sources(data, grid, params=params, mode="small-volume").to_dict()
    assert doc["mode"] == "small-volume"
    for s in doc["sources"]:
        d = np.array(s["direction_re"]) + 1j * np.array(s["direction_im"])
        assert np.linalg.norm(d) == pytest.approx(1.0)
        assert s["re_round"] is not None or s["im_round"] is not None
    with pytest.raises(ConfigError):
        reconstruct_sources(data, grid, params=params, mode="volume")


@pytest.mark.parametrize(
    "kw",
    [{"eta": 0.0}, {"gamma": 1.0}, {"tau_stop": -0.1}, {"min_sep": 0.0}, {"merge_radius": -1.0},
     {"mask": "sometimes"}, {"max_rounds": 0}, {"coarse_n": 1}],
)
def test_params_validation(kw):
    with pytest.raises(ConfigError):
        ReconstructionParams(**kw)


def test_params_resolve_against_wavelength(ctx):
    r = ReconstructionParams().resolved(ctx.wavelength, 0.015)
    assert r["min_sep"] == pytest.approx(ctx.wavelength / 2)
    assert r["mask_radius"] == pytest.approx(ctx.wavelength / 2)
    assert r["merge_radius"] == pytest.approx(0.045)
    assert r["residue_radius"] == pytest.approx(ctx.wavelength)
    assert ReconstructionParams(min_sep=0.3).resolved(ctx.wavelength, 0.015)["min_sep"] == 0.3
