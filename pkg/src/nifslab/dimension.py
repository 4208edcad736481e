"""Limit-set sampling and the numeric dimension / area estimators."""
from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np

from .engine import DEFAULT_DEPTH_CEILING, DepthCeilingError, MapSchedule, address_batch, required_depth
from .gibbs import GibbsMeasure, sample_prefixes

__all__ = [
    "PointCloud",
    "DimensionEstimate",
    "AreaTable",
    "EnergyEstimate",
    "SweepRecord",
    "SweepResult",
    "NoiseFloorError",
    "UNIT_BALL_VOLUME",
    "sample_limit_set",
    "box_counts",
    "box_counting",
    "dyadic_ladder",
    "well_sampled_ladder",
    "s_energy",
    "area_positivity",
    "dimension_sweep",
    "render_png",
    "save_cloud",
    "load_cloud",
]

#: b_m, volume of the unit ball in R^m
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}

CHUNK = 1 << 17
JITTER = 5


class NoiseFloorError(ValueError):
    """Scale ladder reaching below 10x the truncation error (or too short)."""


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    m: int
    error_bound: float
    provenance: dict = field(default_factory=dict)
    #: lower-left corner of X's bounding box; box-counting grids are anchored here
    anchor: complex = 0j

    def __len__(self):
        return len(self.points)

    def extent(self) -> float:
        """Largest coordinate range."""
        if len(self.points) == 0:
            return 0.0
        p = self.points
        return float(max(np.ptp(p.real), np.ptp(p.imag)))

    def diameter(self, directions: int = 256) -> float:
        """Max pairwise distance among the extreme points in ``directions`` directions."""
        p = self.points
        if len(p) < 2:
            return 0.0
        if len(p) <= 2048:
            cand = p
        else:
            theta = np.exp(1j * np.pi * np.arange(directions) / directions)
            idx = set()
            for chunk in range(0, len(p), CHUNK):
                proj = (p[chunk:chunk + CHUNK, None] * np.conj(theta)[None, :]).real
                idx.update((proj.argmax(axis=0) + chunk).tolist())
                idx.update((proj.argmin(axis=0) + chunk).tolist())
            cand = p[sorted(idx)]
        return float(np.abs(cand[:, None] - cand[None, :]).max())

    def translated(self, shift: complex) -> "PointCloud":
        return PointCloud(self.points + shift, self.m, self.error_bound, dict(self.provenance),
                          self.anchor + shift)

    def rotated(self, angle: float) -> "PointCloud":
        if self.m != 2:
            raise ValueError("rotation needs a planar cloud")
        return PointCloud(self.points * np.exp(1j * angle), self.m, self.error_bound,
                          dict(self.provenance), self.anchor)


def sample_limit_set(schedule: MapSchedule, t, count: int, tolerance: float,
                     measure: GibbsMeasure | None = None, seed: int = 0,
                     sampler=None, depth_ceiling: int = DEFAULT_DEPTH_CEILING) -> PointCloud:
    """``count`` points of J_t, each within ``tolerance`` of its true address.

    Streams are iid uniform per level unless a level-n Gibbs ``measure`` drives
    the first n symbols.  ``sampler(rng, count, depth) -> (count, depth) int
    array`` overrides both.  Chunk k uses the k-th spawned child of
    SeedSequence(seed), so the cloud is bit-identical for a given seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    schedule.check_parameter(t)
    gamma_t = schedule.contraction_at(t)
    diam = schedule.space.diameter
    depth = max(1, required_depth(gamma_t, diam, tolerance))
    if depth > depth_ceiling:
        raise DepthCeilingError(f"tolerance {tolerance:g} needs depth {depth} > ceiling {depth_ceiling}")
    if measure is not None and measure.level > depth:
        depth = measure.level
    sizes = np.array([schedule.alphabet.size_at(j) for j in range(1, depth + 1)])
    nchunks = -(-count // CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(nchunks)
    out = np.empty(count, dtype=complex)
    for k in range(nchunks):
        rng = np.random.default_rng(seeds[k])
        lo, hi = k * CHUNK, min(count, (k + 1) * CHUNK)
        size = hi - lo
        if sampler is not None:
            syms = np.asarray(sampler(rng, size, depth))
        else:
            syms = (rng.random((size, depth)) * sizes).astype(np.int64)
            if measure is not None:
                syms[:, :measure.level] = sample_prefixes(measure, size, rng)
        out[lo:hi] = address_batch(schedule, syms, t)
    X = schedule.space.X
    anchor = X.center - X.radius - (1j * X.radius if schedule.m == 2 else 0)
    prov = {
        "family": schedule.name,
        "t": [float(np.real(t)), float(np.imag(t))],
        "count": count,
        "tolerance": tolerance,
        "depth": depth,
        "seed": seed,
        "measure": None if measure is None else {"s": measure.s, "level": measure.level},
    }
    return PointCloud(out, schedule.m, gamma_t ** depth * diam, prov, anchor)


# ---------------------------------------------------------------------------
# box counting


def box_counts(cloud: PointCloud, eps, offsets: int = JITTER) -> np.ndarray:
    """Median over anchor jitters of the number of occupied eps-cells.

    Jitter k shifts the grid origin by (k/offsets) of the coarsest scale (in
    both coordinates, with different fractions), and the origin is shared by
    every scale.  On a dyadic ladder the grids of one jitter are then nested,
    so the counts are monotone in eps.
    """
    eps = np.asarray(eps, dtype=float)
    p = cloud.points - cloud.anchor
    if len(p) == 0:
        return np.zeros(len(eps), dtype=np.int64)
    base = eps.max()
    counts = np.empty((offsets, len(eps)), dtype=np.int64)
    for k in range(offsets):
        shift = base * (k / offsets + 1j * ((2 * k) % offsets) / offsets) if cloud.m == 2 \
            else base * k / offsets
        q = p + shift
        for c, e in enumerate(eps):
            ix = np.floor(q.real / e).astype(np.int64)
            if cloud.m == 2:
                iy = np.floor(q.imag / e).astype(np.int64)
                keys = (ix << 32) + iy
            else:
                keys = ix
            counts[k, c] = np.unique(keys).size
    return np.median(counts, axis=0).astype(np.int64)


@dataclass(frozen=True)
class DimensionEstimate:
    estimate: float
    eps: np.ndarray
    counts: np.ndarray
    residual: float
    method: str = "box-counting"

    @property
    def fit_range(self) -> tuple[float, float]:
        return float(self.eps.min()), float(self.eps.max())


def dyadic_ladder(top: float, count: int) -> np.ndarray:
    return top / 2.0 ** np.arange(count)


def _check_ladder(cloud: PointCloud, eps: np.ndarray) -> None:
    if len(eps) < 4:
        raise NoiseFloorError(f"scale ladder has {len(eps)} scales, need >= 4")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("scale ladder must be strictly decreasing")
    floor = 10.0 * cloud.error_bound
    if eps.min() < floor:
        raise NoiseFloorError(f"scale {eps.min():g} below the noise floor {floor:g}")


def _default_ladder(cloud: PointCloud) -> np.ndarray:
    top = cloud.extent()
    if top == 0:
        top = 1.0
    eps = dyadic_ladder(top / 4.0, 8)
    return eps[eps >= 10.0 * cloud.error_bound]


def well_sampled_ladder(cloud: PointCloud, scales: int = 8, occupancy: float = 20.0) -> np.ndarray:
    """The ``scales`` finest dyadic scales at which the cloud is still well sampled.

    A scale counts as well sampled when the number of occupied cells is at
    most len(cloud)/occupancy, so every occupied cell holds ~``occupancy``
    points on average.  Scales run from extent/4 down to the noise floor.
    """
    top = cloud.extent() / 4.0
    floor = 10.0 * cloud.error_bound
    if top <= floor:
        raise NoiseFloorError("cloud extent is below the noise floor")
    n = int(math.floor(math.log2(top / floor))) + 1
    eps = dyadic_ladder(top, n)
    counts = box_counts(cloud, eps)
    ok = eps[counts <= len(cloud) / occupancy]
    return ok[-scales:]


def box_counting(cloud: PointCloud, ladder=None, offsets: int = JITTER) -> DimensionEstimate:
    """Least-squares slope of log N(eps) against log(1/eps).

    ``ladder`` is an explicit decreasing list of scales, ``None`` for 8 dyadic
    scales from extent/4 down, or ``"well-sampled"`` for
    :func:`well_sampled_ladder`.
    """
    if ladder is None:
        eps = _default_ladder(cloud)
    elif isinstance(ladder, str):
        if ladder != "well-sampled":
            raise ValueError(f"unknown ladder rule {ladder!r}")
        eps = well_sampled_ladder(cloud)
    else:
        eps = np.asarray(ladder, dtype=float)
    _check_ladder(cloud, eps)
    counts = box_counts(cloud, eps, offsets)
    x = np.log(1.0 / eps)
    y = np.log(counts)
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return DimensionEstimate(float(slope), eps, counts, resid)


# ---------------------------------------------------------------------------
# area and energy


@dataclass(frozen=True)
class AreaTable:
    eps: np.ndarray
    counts: np.ndarray
    covered: np.ndarray
    verdict: str
    floor: float


def area_positivity(cloud: PointCloud, ladder=None, floor: float = 1e-3) -> AreaTable:
    """N(eps) eps^m per scale, with a verdict read off the two finest scales."""
    if ladder is None:
        eps = _default_ladder(cloud)
    elif isinstance(ladder, str):
        eps = well_sampled_ladder(cloud)
    else:
        eps = np.asarray(ladder, dtype=float)
    if len(eps) < 2:
        raise NoiseFloorError("need at least two scales")
    counts = box_counts(cloud, eps)
    covered = counts * eps ** cloud.m
    a, b = covered[-2], covered[-1]
    ok = min(a, b) > floor and max(a, b) <= 2.0 * min(a, b)
    return AreaTable(eps, counts, covered, "positive-area-consistent" if ok else "inconclusive", floor)


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    s: float
    pairs: int
    excluded: int

    @property
    def overflow(self) -> bool:
        return math.isinf(self.value)


def s_energy(cloud: PointCloud, s: float, block: int = 2048) -> EnergyEstimate:
    """Mean of |x_i - x_j|^(-s) over ordered pairs i != j.

    Pairs closer than the cloud's error bound are dropped and counted; the
    mean is over the remaining pairs, so s = 0 gives exactly 1.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    p = cloud.points
    M = len(p)
    cut = cloud.error_bound
    total = 0.0
    used = 0
    excluded = 0
    for lo in range(0, M, block):
        d = np.abs(p[lo:lo + block, None] - p[None, :])
        rows = np.arange(lo, min(M, lo + block))
        d[rows - lo, rows] = np.nan
        keep = d > cut
        excluded += int(np.count_nonzero(d <= cut))
        vals = d[keep]
        used += vals.size
        with np.errstate(over="ignore"):
            total += float(np.sum(vals ** (-s)))
    if used == 0:
        raise ValueError("every pair lies within the error bound")
    return EnergyEstimate(total / used, s, used, excluded)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRecord:
    t: complex
    s: float
    target: float
    estimate: float
    verdict: str
    conforming: bool
    note: str = ""


@dataclass(frozen=True)
class SweepResult:
    records: list
    tolerance: float
    threshold: float

    @property
    def fraction(self) -> float:
        ok = [r.conforming for r in self.records if r.verdict != "error"]
        return sum(ok) / len(ok) if ok else math.nan

    @property
    def passed(self) -> bool:
        return self.fraction >= self.threshold


def _sweep_point(schedule, t, points, tolerance, seed, dim_tol, ladder, depth):
    from .pressure import bowen_dimension

    try:
        schedule.check_parameter(t)
        s = bowen_dimension(schedule, t, depth=depth).value
        cloud = sample_limit_set(schedule, t, points, tolerance, seed=seed)
        if s > schedule.m:
            table = area_positivity(cloud, ladder)
            return SweepRecord(complex(t), s, float(schedule.m), math.nan, table.verdict,
                               table.verdict == "positive-area-consistent",
                               "s(t) > m: area verdict")
        est = box_counting(cloud, ladder)
        target = min(float(schedule.m), s)
        ok = abs(est.estimate - target) <= dim_tol
        return SweepRecord(complex(t), s, target, est.estimate,
                           "match" if ok else "mismatch", ok,
                           "box dimension estimate of a Hausdorff-dimension target")
    except Exception as exc:  # recorded per grid point, never fatal
        return SweepRecord(complex(t), math.nan, math.nan, math.nan, "error", False,
                           f"{type(exc).__name__}: {exc}")


def dimension_sweep(schedule: MapSchedule, grid, points: int = 100_000, tolerance: float = 1e-6,
                    seed: int = 0, dim_tol: float = 0.15, threshold: float = 0.9,
                    ladder="well-sampled", depth: int = 20,
                    executor: Executor | None = None) -> SweepResult:
    """One record per grid point; grid point k samples with seed + k."""
    grid = [complex(t) for t in np.atleast_1d(np.asarray(grid, dtype=complex))] if len(grid) else []
    args = [(schedule, t, points, tolerance, seed + k, dim_tol, ladder, depth)
            for k, t in enumerate(grid)]
    if executor is None:
        records = [_sweep_point(*a) for a in args]
    else:
        records = list(executor.map(lambda a: _sweep_point(*a), args))
    return SweepResult(records, dim_tol, threshold)


# ---------------------------------------------------------------------------
# export


def raster(cloud: PointCloud, eps: float, box: tuple[complex, complex] | None = None) -> np.ndarray:
    """Boolean image, one pixel per eps-cell of the box (default: the cloud's bounding box)."""
    p = cloud.points
    if box is None:
        lo = complex(p.real.min(), p.imag.min())
        hi = complex(p.real.max(), p.imag.max())
    else:
        lo, hi = box
    w = max(1, int(math.ceil((hi.real - lo.real) / eps)) + 1)
    h = max(1, int(math.ceil((hi.imag - lo.imag) / eps)) + 1) if cloud.m == 2 else 1
    ix = np.clip(np.floor((p.real - lo.real) / eps).astype(np.int64), 0, w - 1)
    iy = np.clip(np.floor((p.imag - lo.imag) / eps).astype(np.int64), 0, h - 1)
    img = np.zeros((h, w), dtype=bool)
    img[h - 1 - iy, ix] = True
    return img


def render_png(cloud: PointCloud, eps: float, path, box=None, strip_height: int = 16,
               text: dict | None = None) -> np.ndarray:
    """Write covered cells black on white; 1-D clouds become a horizontal strip."""
    from PIL import Image, PngImagePlugin

    img = raster(cloud, eps, box)
    if cloud.m == 1:
        img = np.repeat(img, strip_height, axis=0)
    info = PngImagePlugin.PngInfo()
    for k, v in (text or {}).items():
        info.add_text(str(k), str(v))
    Image.fromarray(np.where(img, 0, 255).astype(np.uint8), mode="L").save(path, pnginfo=info)
    return img


def save_cloud(cloud: PointCloud, path) -> None:
    """``.npy`` writes complex binary; anything else writes 'x y' text lines."""
    path = str(path)
    if path.endswith(".npy"):
        np.save(path, cloud.points)
    else:
        np.savetxt(path, np.column_stack([cloud.points.real, cloud.points.imag]), fmt="%.12g")


def load_cloud(path, m: int = 2, error_bound: float = 0.0) -> PointCloud:
    path = str(path)
    if path.endswith(".npy"):
        pts = np.load(path)
    else:
        xy = np.atleast_2d(np.loadtxt(path))
        pts = xy[:, 0] + 1j * xy[:, 1]
    return PointCloud(np.asarray(pts, dtype=complex), m, error_bound, {"file": path})
