"""Partition sums Z_{n,t}(s), lower pressure and the Bowen dimension s(t).

All sums are accumulated in the log domain.  Two independent routes compute
log Z_{n,t}(s):

* ``"enumerate"`` lists every word of I^n, composes its linear parts and
  reduces ``s * log||D phi_w||`` with a max-shifted pairwise sum;
* ``"factor"`` uses that derivative norms of affine conformal maps multiply
  exactly along a word, so Z_n(s) = prod_k sum_i |a_i^(k)|^s.

Every family in this package is affine conformal, so ``"auto"`` picks the
factorized route; the enumeration is kept as the oracle and for the
submultiplicativity check, which must not assume what it checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import MapSchedule
from .symbolic import word_count

__all__ = [
    "EnumerationBudgetError",
    "DEFAULT_ENUM_CAP",
    "log_norms",
    "logsumexp",
    "log_partition_sum",
    "partition_sum",
    "pressure",
    "pressure_profile",
    "PressureProfile",
    "BowenResult",
    "bowen_dimension",
    "ContinuityScan",
    "bowen_continuity_scan",
    "segment",
    "submultiplicative_violations",
]

DEFAULT_ENUM_CAP = 2 ** 24
DEFAULT_DEPTH = 20
S_CEILING = 64.0


class EnumerationBudgetError(ValueError):
    pass


def logsumexp(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    top = x.max()
    if not np.isfinite(top):
        return float(top)
    # np.sum reduces pairwise
    return float(top + np.log(np.sum(np.exp(x - top))))


def log_norms(schedule: MapSchedule, t, n: int, start_level: int = 1,
              cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
    """log ||D phi_{w,t}|| for every word w of length n from ``start_level``.

    Words are in lexicographic order with the first symbol most significant,
    so the extensions of a prefix occupy a contiguous block.
    """
    count = word_count(schedule.alphabet, n, start_level)
    if count > cap:
        raise EnumerationBudgetError(f"|I^{n}| = {count} exceeds the enumeration cap {cap}")
    linear = np.ones(1, dtype=complex)
    for k in range(n):
        a, _ = schedule.level(start_level + k, t)
        linear = (linear[:, None] * a[None, :]).ravel()
    # linear parts can underflow for long words; renormalize through logs if so
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(linear))
    if not np.all(np.isfinite(out)):
        out = np.zeros(1)
        for k in range(n):
            out = (out[:, None] + schedule.log_scales(start_level + k, t)[None, :]).ravel()
    return out


def log_partition_sum(schedule: MapSchedule, t, s: float, n: int, start_level: int = 1,
                      method: str = "auto", cap: int = DEFAULT_ENUM_CAP) -> float:
    """log of sum_{w in I_start^(start+n-1)} ||D phi_{w,t}||^s."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if n == 0:
        return 0.0
    if method in ("auto", "factor"):
        total = 0.0
        for k in range(n):
            total += logsumexp(s * schedule.log_scales(start_level + k, t))
        return total
    if method == "enumerate":
        return logsumexp(s * log_norms(schedule, t, n, start_level, cap))
    raise ValueError(f"unknown method {method!r}")


def partition_sum(schedule: MapSchedule, t, s: float, n: int, method: str = "enumerate",
                  cap: int = DEFAULT_ENUM_CAP) -> float:
    """Z_{n,t}(s); exhaustive over I^n unless ``method`` says otherwise."""
    return math.exp(log_partition_sum(schedule, t, s, n, 1, method, cap))


def _window(depths: Sequence[int], window: Sequence[int] | None) -> tuple[int, ...]:
    if window is not None:
        w = tuple(window)
    else:
        depths = tuple(depths)
        w = depths[len(depths) // 2:] if len(depths) > 1 else depths
    if not w:
        raise ValueError("empty depth window")
    return w


@dataclass(frozen=True)
class PressureProfile:
    """(1/n) log Z_{n,t}(s) on a grid of s values (rows) and depths (columns)."""

    t: complex
    s_values: np.ndarray
    depths: tuple[int, ...]
    table: np.ndarray
    window: tuple[int, ...]

    def _cols(self):
        return [self.depths.index(n) for n in self.window]

    def lower_pressure(self) -> np.ndarray:
        """liminf surrogate: minimum over the trailing window of depths."""
        return self.table[:, self._cols()].min(axis=1)

    def window_spread(self) -> np.ndarray:
        sub = self.table[:, self._cols()]
        return sub.max(axis=1) - sub.min(axis=1)


def pressure_profile(schedule: MapSchedule, t, s_values, depth: int = DEFAULT_DEPTH,
                     window: Sequence[int] | None = None, method: str = "auto") -> PressureProfile:
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    depths = tuple(range(1, depth + 1))
    table = np.empty((len(s_values), len(depths)))
    for r, s in enumerate(s_values):
        if method == "enumerate":
            for c, n in enumerate(depths):
                table[r, c] = log_partition_sum(schedule, t, s, n, method=method) / n
        else:
            # cumulative level sums give every depth in one pass
            acc = 0.0
            for c, n in enumerate(depths):
                acc += logsumexp(s * schedule.log_scales(n, t))
                table[r, c] = acc / n
    return PressureProfile(complex(t), s_values, depths, table, _window(depths, window))


def pressure(schedule: MapSchedule, t, s: float, depth: int = DEFAULT_DEPTH,
             window: Sequence[int] | None = None, method: str = "auto") -> float:
    """Lower pressure P_t(s) estimated as the minimum over the depth window."""
    return float(pressure_profile(schedule, t, [s], depth, window, method).lower_pressure()[0])


@dataclass(frozen=True)
class BowenResult:
    s: float
    infinite: bool
    bracket: tuple[float, float]
    residual: float
    depth: int
    window_spread: float

    @property
    def value(self) -> float:
        return math.inf if self.infinite else self.s


def bowen_dimension(schedule: MapSchedule, t, tolerance: float = 1e-9, depth: int = DEFAULT_DEPTH,
                    window: Sequence[int] | None = None, s_ceiling: float = S_CEILING,
                    method: str = "auto") -> BowenResult:
    """s(t) = sup{s >= 0 : P_t(s) > 0} by bracketing and bisection.

    Keeps P(lo) >= 0 > P(hi); P is non-increasing in s at every depth, so the
    sign change is unique.  If P stays nonnegative up to ``s_ceiling`` the
    result carries the infinity marker.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")

    def P(s):
        return pressure(schedule, t, s, depth, window, method)

    lo, hi = 0.0, min(1.0, s_ceiling)
    p_hi = P(hi)
    while p_hi >= 0:
        lo = hi
        if hi >= s_ceiling:
            prof = pressure_profile(schedule, t, [lo], depth, window, method)
            return BowenResult(math.inf, True, (lo, math.inf), float(p_hi), depth,
                               float(prof.window_spread()[0]))
        hi = min(2.0 * hi, s_ceiling)
        p_hi = P(hi)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if P(mid) >= 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    prof = pressure_profile(schedule, t, [s], depth, window, method)
    return BowenResult(s, False, (lo, hi), abs(float(prof.lower_pressure()[0])), depth,
                       float(prof.window_spread()[0]))


def segment(start, end, step: float) -> np.ndarray:
    """Equally spaced parameters from start to end with spacing at most ``step``."""
    start, end = complex(start), complex(end)
    length = abs(end - start)
    count = max(1, math.ceil(length / step)) if length > 0 else 1
    return start + (end - start) * np.linspace(0.0, 1.0, count + 1 if length > 0 else 1)


@dataclass(frozen=True)
class ContinuityScan:
    ts: np.ndarray
    s_values: np.ndarray
    ds: np.ndarray
    max_jump: float
    max_slope: float


def bowen_continuity_scan(schedule: MapSchedule, path, **bowen_kwargs) -> ContinuityScan:
    """s(t) along a discretized path with successive differences."""
    ts = np.asarray(path, dtype=complex)
    for t in ts:
        schedule.check_parameter(t)
    svals = np.array([bowen_dimension(schedule, t, **bowen_kwargs).value for t in ts])
    ds = np.diff(svals)
    dt = np.abs(np.diff(ts))
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = np.where(dt > 0, np.abs(ds) / np.where(dt > 0, dt, 1.0), 0.0)
    return ContinuityScan(ts, svals, ds, float(np.abs(ds).max(initial=0.0)),
                          float(slopes.max(initial=0.0)))


def submultiplicative_violations(schedule: MapSchedule, t, s: float, max_total: int = 12,
                                 distortion: float = 1.0, slack: float = 1e-12,
                                 cap: int = DEFAULT_ENUM_CAP) -> list[tuple[int, int, float]]:
    """All (n, j, gap) with log Z_{n+j} < log Z_n + log sum_{v in I_{n+1}^{n+j}} - s log K - slack.

    Every partition sum here is computed by exhaustive enumeration.
    """
    bad = []
    for total in range(2, max_total + 1):
        log_total = log_partition_sum(schedule, t, s, total, method="enumerate", cap=cap)
        for n in range(1, total):
            j = total - n
            head = log_partition_sum(schedule, t, s, n, method="enumerate", cap=cap)
            tail = log_partition_sum(schedule, t, s, j, start_level=n + 1, method="enumerate",
                                     cap=cap)
            gap = log_total - (head + tail - s * math.log(distortion))
            if gap < -slack * max(1.0, abs(log_total)):
                bad.append((n, j, gap))
    return bad
