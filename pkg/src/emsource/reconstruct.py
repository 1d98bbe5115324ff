"""Peak detection, moment recovery and the deflation loop.

Each round builds the deflated real-part (or imaginary-part) imaging field,
reads off its significant peaks, keeps the dominant group, recovers their part
vectors with the probe ``(6 pi / k) e_i`` and subtracts them before the next
round. The two parts are then paired by location into complex moments.

Large grids are searched in two stages: a coarse pass over the whole box
proposes candidates and each candidate is refined by hill-climbing on the fine
grid. Base values are cached per fine node, so later rounds only pay for the
analytic subtraction of accepted terms.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import ndimage

from .forward import CauchyData, ConfigError
from .imaging import (
    BaseEvaluator,
    DeflationTerm,
    ImagingSpec,
    SamplingGrid,
    ScalarField,
    deflate,
    field_from_components,
    project,
)

log = logging.getLogger(__name__)

_NEIGHBOURS = np.ones((3, 3, 3), dtype=bool)
_NEIGHBOURS[1, 1, 1] = False


@dataclass(frozen=True)
class Peak:
    location: np.ndarray
    value: float
    round: int = 1

    def to_dict(self):
        return {"location": [float(v) for v in self.location], "value": float(self.value), "round": self.round}


@dataclass(frozen=True)
class ReconstructionParams:
    """Thresholds of the deflation loop.

    ``None`` radii resolve against the wavelength (``min_sep``, ``mask_radius``:
    half a wavelength; ``residue_radius``: one wavelength) or the fine grid
    (``merge_radius``: three steps). Peaks closer than ``residue_radius`` to an
    accepted source are treated as its deflation residue, never as new sources.
    ``tau_stop`` compares peak amplitudes, i.e. field values to the power ``1/s``.
    """

    eta: float = 0.2
    gamma: float = 0.5
    min_sep: float | None = None
    tau_stop: float = 0.05
    max_rounds: int = 8
    merge_radius: float | None = None
    mask_radius: float | None = None
    residue_radius: float | None = None
    mask: str = "auto"
    mask_ratio: float = 6.0
    coarse_n: int = 48
    coarse_eta_factor: float = 0.25
    dense: bool = False

    def __post_init__(self):
        for name in ("eta", "gamma", "tau_stop", "coarse_eta_factor"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"reconstruction.{name} must lie in (0, 1), got {v}")
        for name in ("min_sep", "merge_radius", "mask_radius", "residue_radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"reconstruction.{name} must be positive, got {v}")
        if self.mask not in ("auto", "on", "off"):
            raise ConfigError(f"reconstruction.mask must be auto, on or off, got {self.mask!r}")
        if int(self.max_rounds) < 1:
            raise ConfigError("reconstruction.max_rounds must be >= 1")
        if int(self.coarse_n) < 2:
            raise ConfigError("reconstruction.coarse_n must be >= 2")

    def resolved(self, wavelength, fine_step):
        return {
            "min_sep": self.min_sep if self.min_sep is not None else wavelength / 2,
            "mask_radius": self.mask_radius if self.mask_radius is not None else wavelength / 2,
            "merge_radius": self.merge_radius if self.merge_radius is not None else 3 * fine_step,
            "residue_radius": self.residue_radius if self.residue_radius is not None else wavelength,
        }


def detect_peaks(field: ScalarField, params: ReconstructionParams, round_index=1, min_sep=None):
    """Strict-somewhere local maxima over the 26-neighbourhood, thresholded and thinned."""
    vals = field.values
    if vals.size == 0:
        raise ValueError("empty field")
    vmax = float(vals.max())
    if not vmax > 0:
        return []
    if min_sep is None:
        min_sep = params.min_sep if params.min_sep is not None else 0.0
    # edge replication never creates a strict neighbour, so borders behave
    hi = ndimage.maximum_filter(vals, footprint=_NEIGHBOURS, mode="nearest")
    lo = ndimage.minimum_filter(vals, footprint=_NEIGHBOURS, mode="nearest")
    is_peak = (vals >= hi) & (vals > lo) & (vals >= params.eta * vmax)
    idx = np.argwhere(is_peak)
    peaks = [Peak(field.grid.point_at(i), float(vals[tuple(i)]), round_index) for i in idx]
    return thin_peaks(peaks, min_sep)


def thin_peaks(peaks, min_sep):
    """Sort by value and drop any peak within ``min_sep`` of a larger kept one."""
    kept = []
    for p in sorted(peaks, key=lambda p: -p.value):
        if all(np.linalg.norm(p.location - q.location) >= min_sep for q in kept):
            kept.append(p)
    return kept


def group_dominant(peaks, gamma):
    if not peaks:
        return [], []
    top = peaks[0].value
    dominant = [p for p in peaks if p.value >= gamma * top]
    deferred = [p for p in peaks if p.value < gamma * top]
    return dominant, deferred


def recover_moment_component(x_hat, i, data: CauchyData, terms=(), variant="real", base="interior", evaluator=None):
    """Component ``i`` (1..3) of the part vector at ``x_hat``: ``(6 pi / k)`` times the deflated base."""
    if i not in (1, 2, 3):
        raise ValueError("axis index must be 1, 2 or 3")
    return recover_part_vector(x_hat, data, terms, variant, base, evaluator)[i - 1]


def recover_part_vector(x_hat, data: CauchyData, terms=(), variant="real", base="interior", evaluator=None):
    ev = evaluator or BaseEvaluator(data, base)
    x_hat = np.asarray(x_hat, dtype=float).reshape(1, 3)
    vals = deflate(x_hat, project(ev(x_hat), variant), list(terms), data.k)
    return (6.0 * np.pi / data.k) * vals[0]


class FineFieldSampler:
    """Lazily evaluated base values on the nodes of a fine grid."""

    def __init__(self, evaluator: BaseEvaluator, grid: SamplingGrid):
        self.ev = evaluator
        self.grid = grid
        self._cache = {}

    def _flat(self, idx):
        return np.ravel_multi_index(idx.T, self.grid.shape)

    def base(self, idx):
        idx = np.asarray(idx, dtype=int).reshape(-1, 3)
        flat = self._flat(idx)
        missing = np.array([f not in self._cache for f in flat.tolist()], dtype=bool)
        if missing.any():
            new_flat, first = np.unique(flat[missing], return_index=True)
            new_idx = idx[missing][first]
            vals = self.ev(self.grid.point_at(new_idx), on_singular="mask")
            self._cache.update(zip(new_flat.tolist(), vals))
        return np.array([self._cache[f] for f in flat.tolist()])

    @property
    def n_cached(self):
        return len(self._cache)


@dataclass
class RoundRecord:
    round: int
    field_max: float
    mask_active: bool
    candidates: list
    peaks: list
    accepted: list
    stop_reason: str | None = None

    def to_dict(self):
        return {
            "round": self.round,
            "field_max": self.field_max,
            "mask_active": self.mask_active,
            "n_candidates": len(self.candidates),
            "peaks": [p.to_dict() for p in self.peaks],
            "accepted": [
                {"location": [float(v) for v in t.location], "part": [float(v) for v in t.part]}
                for t in self.accepted
            ],
            "stop_reason": self.stop_reason,
        }


@dataclass
class PartResult:
    variant: str
    terms: list
    rounds: list
    stop_reason: str
    term_rounds: list = field(default_factory=list)


class PeakSearch:
    """Field evaluation for one dataset on a fine grid, either dense or two-stage."""

    def __init__(self, data: CauchyData, grid: SamplingGrid, spec: ImagingSpec, params: ReconstructionParams):
        self.data = data
        self.grid = grid
        self.spec = spec
        self.params = params
        self.ev = BaseEvaluator(data, spec.base)
        self.k = data.k
        self.sampler = FineFieldSampler(self.ev, grid)
        self._dense_base = None
        self._coarse_base = None
        self._fine_points = None
        self.coarse = None
        if not params.dense:
            self.coarse = SamplingGrid(grid.lower, grid.upper, tuple(min(params.coarse_n, n) for n in grid.shape))
            ratio = grid.step / self.coarse.step
            # hill-climb window: one coarse cell, capped at three
            self.window = np.maximum(1, np.ceil(1.0 / ratio).astype(int))
            self.reach = np.maximum(self.window, np.ceil(3.0 / ratio).astype(int))

    # field values -----------------------------------------------------
    def _values(self, z, base_values, variant, terms):
        comps = deflate(z, project(base_values, variant), terms, self.k)
        return field_from_components(comps, self.spec.s)

    def dense_field(self, variant, terms):
        if self._dense_base is None:
            log.info("dense evaluation on %d nodes", self.grid.size)
            self._fine_points = self.grid.points()
            self._dense_base = self.ev(self._fine_points, on_singular="mask")
        vals = self._values(self._fine_points, self._dense_base, variant, terms)
        return ScalarField(self.grid, vals, {"variant": variant, "n_terms": len(terms)})

    def coarse_field(self, variant, terms):
        if self._coarse_base is None:
            log.info("coarse evaluation on %d nodes", self.coarse.size)
            self._coarse_points = self.coarse.points()
            self._coarse_base = self.ev(self._coarse_points, on_singular="mask")
        vals = self._values(self._coarse_points, self._coarse_base, variant, terms)
        return ScalarField(self.coarse, vals, {"variant": variant, "n_terms": len(terms)})

    def fine_values(self, idx, variant, terms):
        return self._values(self.grid.point_at(idx), self.sampler.base(idx), variant, terms)

    def _window(self, center, half):
        lo = np.maximum(center - half, 0)
        hi = np.minimum(center + half, np.array(self.grid.shape) - 1)
        axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1), lo, hi

    def refine(self, start_point, variant, terms, masked_out):
        """Hill-climb on the fine grid from ``start_point``; returns ``(index, value)``."""
        start = self.grid.nearest_index(start_point)
        center = start.copy()
        top = np.array(self.grid.shape) - 1
        while True:
            idx, lo, hi = self._window(center, self.window)
            vals = self.fine_values(idx, variant, terms)
            vals[masked_out(self.grid.point_at(idx))] = 0.0
            best = idx[np.argmax(vals)]
            on_edge = ((best == lo) & (lo > 0)) | ((best == hi) & (hi < top))
            if not on_edge.any() or np.any(np.abs(best - start) >= self.reach) or np.all(best == center):
                return best, float(vals.max())
            center = best

    def candidates(self, variant, terms, masked_out, round_index, floor=0.0):
        """Fine-grid peaks, strongest first, not yet filtered by ``eta`` or ``min_sep``.

        In two-stage mode the search ends early when the strongest refined peak
        is below ``floor``, and weak seeds that cannot reach ``eta`` times the
        best refined value are not refined at all.
        """
        p = self.params
        if p.dense:
            fld = self.dense_field(variant, terms)
            vals = fld.values.copy()
            vals[masked_out(self.grid.points()).reshape(self.grid.shape)] = 0.0
            loose = ReconstructionParams(eta=p.eta, gamma=p.gamma)
            return detect_peaks(ScalarField(self.grid, vals, fld.label), loose, round_index, min_sep=0.0)
        fld = self.coarse_field(variant, terms)
        vals = fld.values.copy()
        vals[masked_out(self.coarse.points()).reshape(self.coarse.shape)] = 0.0
        loose = ReconstructionParams(eta=p.eta * p.coarse_eta_factor, gamma=p.gamma)
        seeds = detect_peaks(ScalarField(self.coarse, vals, fld.label), loose, round_index, min_sep=0.0)
        found = {}
        best_value = 0.0
        for s in seeds:
            if s.value < p.coarse_eta_factor * p.eta * best_value:
                break
            best, value = self.refine(s.location, variant, terms, masked_out)
            key = tuple(best.tolist())
            if value > 0 and key not in found:
                found[key] = Peak(self.grid.point_at(best), value, round_index)
            best_value = max(best_value, value)
            if best_value < floor:
                break
        return sorted(found.values(), key=lambda q: -q.value)

    def leading_amplitude(self, variant):
        """Amplitude (value to the power 1/s) of the strongest undeflated peak."""
        cand = self.candidates(variant, [], lambda z: np.zeros(len(np.asarray(z).reshape(-1, 3)), dtype=bool), 1, np.inf)
        return cand[0].value ** (1 / self.spec.s) if cand else 0.0


def _near_any(points, centers, radius):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    out = np.zeros(len(points), dtype=bool)
    for c in centers:
        out |= np.linalg.norm(points - c, axis=-1) < radius
    return out


def deflation_loop(
    data: CauchyData,
    grid: SamplingGrid,
    spec: ImagingSpec,
    params: ReconstructionParams,
    search=None,
    reference_amplitude=0.0,
):
    """Iterated peak picking and subtraction for one real projection.

    Rounds stop once the strongest remaining amplitude drops below ``tau_stop``
    times the larger of this part's round-1 amplitude and
    ``reference_amplitude`` (the other part's, when both are run).
    """
    if spec.variant == "modulus":
        raise ValueError("deflation runs on the real-part or imag-part variant only")
    if not np.any(data.E) and not np.any(data.curlE_cross_nu):
        return PartResult(spec.variant, [], [], "zero data")
    search = search or PeakSearch(data, grid, spec, params)
    radii = params.resolved(data.ctx.wavelength, float(np.min(grid.step)))
    s = spec.s
    terms, term_rounds, rounds = [], [], []
    first_amp = None
    prev_amp = None
    stop = "max_rounds"
    for n in range(1, int(params.max_rounds) + 1):
        accepted_locs = [t.location for t in terms]

        def masked(z):
            return _near_any(z, accepted_locs, radii["mask_radius"])

        def unmasked(z):
            return np.zeros(len(np.asarray(z).reshape(-1, 3)), dtype=bool)

        floor = (params.tau_stop * reference_amplitude) ** s
        cand_m = search.candidates(spec.variant, terms, masked, n, floor)
        if params.mask == "on":
            use_mask = True
        elif params.mask == "off" or prev_amp is None:
            use_mask = False
        else:
            amp_m = cand_m[0].value ** (1 / s) if cand_m else 0.0
            use_mask = amp_m == 0.0 or prev_amp / amp_m >= params.mask_ratio
        cand = cand_m if (use_mask or not terms) else search.candidates(spec.variant, terms, unmasked, n, floor)
        fmax = cand[0].value if cand else 0.0
        rec = RoundRecord(n, fmax, use_mask, cand, [], [])
        rounds.append(rec)
        if first_amp is None:
            first_amp = fmax ** (1 / s)
        ref = max(first_amp, reference_amplitude)
        if fmax <= 0 or ((n > 1 or ref > first_amp) and fmax ** (1 / s) < params.tau_stop * ref):
            stop = rec.stop_reason = "below tau_stop" if fmax > 0 else "no peaks"
            break
        peaks = [p for p in cand if p.value >= params.eta * fmax]
        peaks = thin_peaks(peaks, radii["min_sep"])
        peaks = [p for p in peaks if not _near_any(p.location, accepted_locs, radii["residue_radius"])[0]]
        # the field max may belong to a rejected residue; judge survivors on their own
        significant = [p for p in peaks if p.value ** (1 / s) >= params.tau_stop * ref]
        rec.peaks = significant
        if not significant:
            stop = rec.stop_reason = "below tau_stop" if peaks else "no peaks"
            break
        peaks = significant
        dominant, _ = group_dominant(peaks, params.gamma)
        new = []
        for p in dominant:
            part = recover_part_vector(p.location, data, terms, spec.variant, evaluator=search.ev)
            new.append(DeflationTerm(p.location, part))
        rec.accepted = new
        terms = terms + new
        term_rounds += [n] * len(new)
        prev_amp = dominant[-1].value ** (1 / s)
        log.info("%s round %d: accepted %d, field max %.4g", spec.variant, n, len(new), fmax)
    else:
        rounds[-1].stop_reason = "max_rounds"
    return PartResult(spec.variant, terms, rounds, stop, term_rounds)


@dataclass
class RecoveredSource:
    location: np.ndarray
    moment: np.ndarray
    re_round: int | None
    im_round: int | None
    matched: bool
    re_location: np.ndarray | None = None
    im_location: np.ndarray | None = None

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.moment))

    @property
    def direction(self) -> np.ndarray:
        return self.moment / np.linalg.norm(self.moment)

    def to_dict(self):
        def vec(v):
            return None if v is None else [float(c) for c in v]

        return {
            "location": vec(self.location),
            "moment_re": vec(self.moment.real),
            "moment_im": vec(self.moment.imag),
            "re_round": self.re_round,
            "im_round": self.im_round,
            "matched": self.matched,
            "re_location": vec(self.re_location),
            "im_location": vec(self.im_location),
        }


@dataclass
class Reconstruction:
    sources: list
    rounds_re: list = field(default_factory=list)
    rounds_im: list = field(default_factory=list)
    mode: str = "point"
    config: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def locations(self):
        return np.array([s.location for s in self.sources]).reshape(-1, 3)

    def to_dict(self):
        out = {
            "mode": self.mode,
            "sources": [s.to_dict() for s in self.sources],
            "rounds_re": [r.to_dict() for r in self.rounds_re],
            "rounds_im": [r.to_dict() for r in self.rounds_im],
            "config": self.config,
            "diagnostics": self.diagnostics,
        }
        if self.mode == "small-volume":
            for d, s in zip(out["sources"], self.sources):
                d["direction_re"] = [float(v) for v in s.direction.real]
                d["direction_im"] = [float(v) for v in s.direction.imag]
                d["magnitude"] = s.magnitude
        return out


def merge_re_im(re_parts, im_parts, merge_radius):
    """Pair real and imaginary parts by location, nearest pairs first.

    ``re_parts`` and ``im_parts`` are sequences of ``(location, vector, round)``.
    """
    re_parts, im_parts = list(re_parts), list(im_parts)
    pairs = []
    for a, (xr, _, _) in enumerate(re_parts):
        for b, (xi, _, _) in enumerate(im_parts):
            d = float(np.linalg.norm(np.asarray(xr) - np.asarray(xi)))
            if d <= merge_radius:
                pairs.append((d, a, b))
    pairs.sort()
    used_re, used_im, sources = set(), set(), []
    for _, a, b in pairs:
        if a in used_re or b in used_im:
            continue
        used_re.add(a)
        used_im.add(b)
        xr, vr, nr = re_parts[a]
        xi, vi, ni = im_parts[b]
        moment = np.asarray(vr, dtype=float) + 1j * np.asarray(vi, dtype=float)
        sources.append(RecoveredSource(np.asarray(xr, float), moment, nr, ni, True, np.asarray(xr, float), np.asarray(xi, float)))
    for a, (xr, vr, nr) in enumerate(re_parts):
        if a not in used_re:
            sources.append(RecoveredSource(np.asarray(xr, float), np.asarray(vr, dtype=complex), nr, None, False, np.asarray(xr, float)))
    for b, (xi, vi, ni) in enumerate(im_parts):
        if b not in used_im:
            sources.append(RecoveredSource(np.asarray(xi, float), 1j * np.asarray(vi, dtype=float), None, ni, False, None, np.asarray(xi, float)))
    sources.sort(key=lambda s: -s.magnitude)
    return Reconstruction(sources)


def reconstruct_sources(
    data: CauchyData,
    grid: SamplingGrid,
    spec: ImagingSpec | None = None,
    params: ReconstructionParams | None = None,
    mode: str = "point",
):
    """Full pipeline: real-part and imaginary-part deflation, then pairing."""
    if mode not in ("point", "small-volume"):
        raise ConfigError(f"mode must be 'point' or 'small-volume', got {mode!r}")
    spec = spec or ImagingSpec()
    params = params or ReconstructionParams()
    # both parts share one search so base values are computed once
    search = PeakSearch(data, grid, spec, params)
    # a part whose strongest peak is negligible next to the other part's is noise
    reference = max(search.leading_amplitude(v) for v in ("real", "imag"))
    parts = {
        variant: deflation_loop(
            data, grid, ImagingSpec(spec.base, variant, spec.s), params, search=search, reference_amplitude=reference
        )
        for variant in ("real", "imag")
    }
    radii = params.resolved(data.ctx.wavelength, float(np.min(grid.step)))
    re = [(t.location, t.part, r) for t, r in zip(parts["real"].terms, parts["real"].term_rounds)]
    im = [(t.location, t.part, r) for t, r in zip(parts["imag"].terms, parts["imag"].term_rounds)]
    rec = merge_re_im(re, im, radii["merge_radius"])
    rec.rounds_re = parts["real"].rounds
    rec.rounds_im = parts["imag"].rounds
    rec.mode = mode
    rec.config = {
        "spec": asdict(spec),
        "params": asdict(params),
        "grid": grid.spec(),
        "resolved": radii,
    }
    rec.diagnostics = {
        "stop_re": parts["real"].stop_reason,
        "stop_im": parts["imag"].stop_reason,
        "base_evaluations": search.ev.n_evaluations,
        "fine_nodes_cached": search.sampler.n_cached,
        "two_stage": not params.dense,
    }
    return rec
