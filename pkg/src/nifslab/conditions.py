"""Numeric checks of the six structural conditions on a parameterized family.

Status values: ``verified-exactly`` (affine closed form covers every level and
parameter), ``verified-on-samples`` (finite sample, counts recorded),
``failed`` (always with a witness) and ``delegated`` (condition 6, see
:mod:`nifslab.transversality`).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import (AmbientSpace, MapSchedule, ParameterError, address_batch, compose,
                     required_depth)
from .symbolic import Word

__all__ = [
    "ConditionRecord",
    "ConditionReport",
    "estimate_contraction",
    "estimate_distortion",
    "distortion_continuity_delta",
    "family_sup_distance",
    "sampled_sup_distance",
    "chain_bound_ratio",
    "continuity_modulus",
    "derivative_floor",
    "check_conditions",
]

VERIFIED = "verified-exactly"
SAMPLED = "verified-on-samples"
FAILED = "failed"
DELEGATED = "delegated"


def _grid(grid) -> np.ndarray:
    g = np.atleast_1d(np.asarray(grid, dtype=complex))
    if g.size == 0:
        raise ValueError("empty parameter grid")
    return g


def _check_grid(schedule: MapSchedule, grid: np.ndarray) -> None:
    bad = ~np.asarray(schedule.region.contains(grid))
    if bad.any():
        raise ParameterError(f"grid point {grid[bad][0]!r} lies outside U")


def estimate_contraction(schedule: MapSchedule, grid, depth: int = 32) -> float:
    """max over grid and levels <= depth of the per-level scaling factor."""
    grid = _grid(grid)
    _check_grid(schedule, grid)
    return float(max(np.abs(schedule.level(j, grid)[0]).max() for j in range(1, depth + 1)))


def estimate_distortion(schedule: MapSchedule, t, depth: int = 16, samples: int = 256,
                        seed: int = 0) -> float:
    """max |D phi_w(x1)| / |D phi_w(x2)| over sampled words and point pairs of V.

    Affine maps have constant derivative, so this is exactly 1 for every
    family in the package.
    """
    schedule.check_parameter(t)
    rng = np.random.default_rng(seed)
    worst = 1.0
    for _ in range(samples):
        n = int(rng.integers(1, depth + 1))
        start = int(rng.integers(1, depth + 1))
        syms = [int(rng.integers(schedule.alphabet.size_at(start + k))) for k in range(n)]
        cmap = compose(schedule, Word(start, syms), t, check=False)
        x1, x2 = _points_in_V(schedule.space, rng, 2)
        d1, d2 = cmap.derivative_at(x1), cmap.derivative_at(x2)
        worst = max(worst, d1 / d2, d2 / d1)
    return worst


def _points_in_V(space: AmbientSpace, rng, count):
    c, r = space.V.center, space.V.radius * (1 - 1e-9)
    if space.m == 1:
        return c + r * rng.uniform(-1, 1, count) + 0j
    return c + r * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))


def _log_ratio_ok(schedule, t0, ts, eta, depth):
    """Two-sided per-level bound |log|a_i^(j)(t0)| - log|a_i^(j)(t)|| <= eta for all j <= depth.

    For affine maps the word-level bound exp(-j eta) <= ratio <= exp(j eta)
    holds for every word iff it holds for every single map: the log-ratio of a
    word is a sum of per-map log-ratios, and j of them bounded by eta give j eta.
    """
    ok = np.ones(ts.shape, dtype=bool)
    for j in range(1, depth + 1):
        l0 = schedule.log_scales(j, t0)
        lt = np.log(np.abs(schedule.level(j, ts)[0]))
        ok &= np.all(np.abs(lt - l0[:, None]) <= eta, axis=0)
    return ok


def distortion_continuity_delta(schedule: MapSchedule, eta: float, t0, depth: int = 16,
                                angles: int = 64, lattice: int = 2000,
                                r_min: float = 1e-7) -> float:
    """Largest lattice radius delta such that every tested t with |t - t0| <= delta passes.

    The lattice is ``lattice`` geometric radii from ``r_min`` up to the
    distance from t0 to the boundary of U; each radius is a circle of
    ``angles`` points (two points for a real parameter).  The scan stops at
    the first circle with a failing point, so a larger eta never gives a
    smaller delta on the same lattice.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    schedule.check_parameter(t0)
    t0 = complex(t0)
    cap = schedule.region.boundary_distance(t0)
    radii = np.geomspace(min(r_min, cap / 2), cap, lattice)
    if schedule.region.d == 2:
        ring = np.exp(2j * np.pi * np.arange(angles) / angles)
    else:
        ring = np.array([1.0, -1.0], dtype=complex)
    # the last radius sits on the boundary of U; pull it in by a hair
    radii[-1] *= 1 - 1e-12
    best = 0.0
    for lo in range(0, lattice, 128):
        rr = radii[lo:lo + 128]
        ts = (t0 + rr[:, None] * ring[None, :]).ravel()
        inside = np.asarray(schedule.region.contains(ts))
        ok = np.ones(ts.shape, dtype=bool)
        ok[inside] = _log_ratio_ok(schedule, t0, ts[inside], eta, depth)
        ok = ok.reshape(len(rr), -1).all(axis=1)
        if not ok.all():
            k = int(np.argmin(ok))
            return float(rr[k - 1]) if k > 0 else best
        best = float(rr[-1])
    return cap


def family_sup_distance(schedule: MapSchedule, t1, t2, depth: int = 64) -> tuple[float, float]:
    """(||Phi_t1 - Phi_t2||_inf, ||D Phi_t1 - D Phi_t2||_inf) over levels <= depth on X.

    For affine maps the difference (a1-a2) x + (b1-b2) has its sup over the
    ball X on the boundary circle, |(a1-a2) c + (b1-b2)| + |a1-a2| R, and the
    derivative difference is the constant |a1-a2|.
    """
    X = schedule.space.X
    dist = 0.0
    ddist = 0.0
    for j in range(1, depth + 1):
        a1, b1 = schedule.level(j, t1)
        a2, b2 = schedule.level(j, t2)
        da = np.abs(a1 - a2)
        dist = max(dist, float(np.max(np.abs((a1 - a2) * X.center + (b1 - b2)) + da * X.radius)))
        ddist = max(ddist, float(np.max(da)))
    return dist, ddist


def sampled_sup_distance(schedule: MapSchedule, t1, t2, depth: int = 16, samples: int = 4096,
                         seed: int = 0) -> float:
    """Sup of |phi_i,t1(x) - phi_i,t2(x)| over sampled x in X (boundary included)."""
    rng = np.random.default_rng(seed)
    X = schedule.space.X
    x = schedule.space.sample_points(rng, samples)
    if schedule.m == 2:
        x = np.concatenate([x, X.center + X.radius * np.exp(2j * np.pi * rng.random(samples))])
    else:
        x = np.concatenate([x, [X.center - X.radius, X.center + X.radius]])
    best = 0.0
    for j in range(1, depth + 1):
        a1, b1 = schedule.level(j, t1)
        a2, b2 = schedule.level(j, t2)
        vals = np.abs((a1 - a2)[:, None] * x[None, :] + (b1 - b2)[:, None])
        best = max(best, float(vals.max()))
    return best


def chain_bound_ratio(schedule: MapSchedule, t0, t, words: int = 200, depth: int = 24,
                      points: int = 16, seed: int = 0, gamma: float | None = None) -> float:
    """max over random words and x of |phi_{w,t0}(x) - phi_{w,t}(x)| / (||Phi_t0 - Phi_t|| / (1-gamma)).

    Values <= 1 confirm the composition-distance bound on the samples.
    """
    gamma = schedule.gamma if gamma is None else gamma
    rng = np.random.default_rng(seed)
    bound = family_sup_distance(schedule, t0, t, 2 * depth)[0] / (1.0 - gamma)
    if bound == 0:
        return 0.0
    worst = 0.0
    for _ in range(words):
        j = int(rng.integers(1, depth + 1))
        start = int(rng.integers(1, depth + 1))
        syms = np.array([[int(rng.integers(schedule.alphabet.size_at(start + k)))
                          for k in range(j)]])
        x = schedule.space.sample_points(rng, points)
        for xi in x:
            z0 = _apply_word(schedule, syms[0], start, t0, xi)
            z1 = _apply_word(schedule, syms[0], start, t, xi)
            worst = max(worst, abs(z0 - z1) / bound)
    return worst


def _apply_word(schedule, syms, start, t, x):
    z = complex(x)
    for k in range(len(syms) - 1, -1, -1):
        z = schedule.map_at(start + k, int(syms[k]), t)(z)
    return z


def derivative_floor(schedule: MapSchedule, grid, depth: int = 32) -> float:
    """kappa: min over grid and levels of the per-map scaling factor."""
    grid = _grid(grid)
    return float(min(np.abs(schedule.level(j, grid)[0]).min() for j in range(1, depth + 1)))


def continuity_modulus(schedule: MapSchedule, t0, radius: float = 1e-3, pairs: int = 256,
                       tolerance: float = 1e-10, seed: int = 0) -> float:
    """max |pi_{1,t}(w) - pi_{1,t0}(w)| / |t - t0| over random streams w and nearby t."""
    schedule.check_parameter(t0)
    rng = np.random.default_rng(seed)
    t0 = complex(t0)
    if schedule.region.d == 2:
        dt = radius * np.sqrt(rng.random(pairs)) * np.exp(2j * np.pi * rng.random(pairs))
    else:
        dt = radius * rng.uniform(-1, 1, pairs) + 0j
    ts = t0 + dt
    ok = np.asarray(schedule.region.contains(ts)) & (dt != 0)
    gam = max(schedule.contraction_at(t0), max((schedule.contraction_at(t) for t in ts[ok]),
                                                default=0.0))
    depth = max(1, required_depth(gam, schedule.space.diameter, tolerance))
    sizes = np.array([schedule.alphabet.size_at(j) for j in range(1, depth + 1)])
    worst = 0.0
    for t, d in zip(ts[ok], dt[ok]):
        syms = (rng.random((1, depth)) * sizes).astype(np.int64)
        p0 = address_batch(schedule, syms, t0)[0]
        p1 = address_batch(schedule, syms, t)[0]
        worst = max(worst, abs(p1 - p0) / abs(d))
    return worst


@dataclass
class ConditionRecord:
    number: int
    name: str
    status: str
    samples: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == FAILED and not self.witness:
            raise ValueError("a failed condition needs a witness")


@dataclass
class ConditionReport:
    family: str
    grid: list
    records: list
    gamma_hat: float
    K_table: list
    delta_table: list
    family_distances: list
    premises: dict = field(default_factory=dict)

    def status(self, number: int) -> str:
        return next(r.status for r in self.records if r.number == number)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [[t.real, t.imag] for t in self.grid]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_jsonable)

    def to_text(self) -> str:
        lines = [f"family: {self.family}", f"gamma_hat: {self.gamma_hat:.12g}"]
        for r in self.records:
            lines.append(f"condition {r.number} ({r.name}): {r.status}; samples={r.samples}"
                         + (f"; witness={json.dumps(r.witness, default=_jsonable)}" if r.witness else ""))
        return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _conformal_check(schedule, grid, depth):
    """Returns a witness dict on failure, else None."""
    X, V = schedule.space.X, schedule.space.V
    for j in range(1, depth + 1):
        a, b = schedule.level(j, grid)
        if schedule.m == 1 and np.any(np.abs(np.imag(a)) > 0):
            k = np.argwhere(np.abs(np.imag(a)) > 0)[0]
            return {"level": j, "symbol": int(k[0]) + 1, "t": complex(grid[k[1]]),
                    "reason": "non-real linear part in dimension one"}
        for ball, name in ((X, "X"), (V, "V")):
            c = a * ball.center + b
            r = np.abs(a) * ball.radius
            inside = ball.contains_ball(c, r)
            if not np.all(inside):
                k = np.argwhere(~inside)[0]
                return {"level": j, "symbol": int(k[0]) + 1, "t": complex(grid[k[1]]),
                        "reason": f"image of {name} not inside {name}"}
    return None


def check_conditions(schedule: MapSchedule, grid, depth: int = 32, samples: int = 256,
                     etas=(0.1, 0.01), seed: int = 0) -> ConditionReport:
    """Conditions 1-5 on a parameter grid, condition 6 delegated."""
    grid = _grid(grid)
    _check_grid(schedule, grid)
    exact = schedule.closed_form
    ok_status = VERIFIED if exact else SAMPLED
    records = []

    w = _conformal_check(schedule, grid, depth)
    records.append(ConditionRecord(1, "conformality and self-maps of X, V",
                                   FAILED if w else ok_status, grid.size * depth, w,
                                   {"levels": depth}))

    gamma_hat = estimate_contraction(schedule, grid, depth)
    if gamma_hat <= schedule.gamma and gamma_hat < 1:
        records.append(ConditionRecord(2, "uniform contraction", ok_status, grid.size * depth,
                                       None, {"gamma_hat": gamma_hat, "gamma": schedule.gamma}))
    else:
        for j in range(1, depth + 1):
            a = np.abs(schedule.level(j, grid)[0])
            if a.max() > schedule.gamma:
                k = np.unravel_index(a.argmax(), a.shape)
                wit = {"level": j, "symbol": int(k[0]) + 1, "t": complex(grid[k[1]]),
                       "scale": float(a.max())}
                break
        records.append(ConditionRecord(2, "uniform contraction", FAILED, grid.size * depth, wit,
                                       {"gamma_hat": gamma_hat, "gamma": schedule.gamma}))

    K_table = []
    for t in grid:
        K_table.append([complex(t), estimate_distortion(schedule, t, min(depth, 16), samples, seed)])
    K_max = max(k for _, k in K_table)
    # affine conformal: every derivative is constant, so K = 1 exactly
    records.append(ConditionRecord(3, "bounded distortion", VERIFIED if K_max == 1.0 else SAMPLED,
                                   grid.size * samples, None, {"K_max": K_max}))

    delta_table = []
    bad = None
    for eta in etas:
        for t in grid:
            d = distortion_continuity_delta(schedule, eta, t, depth=min(depth, 16))
            delta_table.append([float(eta), complex(t), d])
            if d <= 0 and bad is None:
                bad = {"eta": float(eta), "t": complex(t), "delta": d}
    records.append(ConditionRecord(4, "distortion continuity", FAILED if bad else ok_status,
                                   len(delta_table), bad, {"etas": list(etas)}))

    moduli = [continuity_modulus(schedule, t, seed=seed) for t in grid]
    records.append(ConditionRecord(
        5, "joint continuity of the address map", ok_status, grid.size * 256, None,
        {"lipschitz_modulus_max": max(moduli),
         "note": "sampled modulus; uniform limit of continuous maps" if exact
         else "sampled modulus only"}))

    records.append(ConditionRecord(6, "transversality", DELEGATED, 0, None,
                                   {"module": "nifslab.transversality"}))

    dists = []
    ratios = []
    for k in range(len(grid) - 1):
        t1, t2 = grid[k], grid[k + 1]
        d, dd = family_sup_distance(schedule, t1, t2, depth)
        dists.append([complex(t1), complex(t2), d, dd])
        ratios.append(chain_bound_ratio(schedule, t1, t2, words=50, seed=seed + k))
    premises = {
        "kappa": derivative_floor(schedule, grid, depth),
        "chain_bound_max_ratio": max(ratios) if ratios else None,
        "chain_bound_holds": all(r <= 1 + 1e-12 for r in ratios),
    }
    return ConditionReport(schedule.name, [complex(t) for t in grid], records, gamma_hat,
                           K_table, delta_table, dists, premises)
