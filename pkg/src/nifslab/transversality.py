"""Difference power series, the double-zero probe and empirical transversality.

For the two-map example, pi_{n,t}(omega) - pi_{n,t}(tau) is a power series
in t whose coefficients are differences of translations.  Multiplied by n it
has leading coefficient +-1 and all other coefficients in [-1, 1]; the class
of such series is called G below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import GAMMA_EXAMPLE
from .engine import MapSchedule, ParameterRegion, address_series
from .symbolic import SymbolStream, UniformTail

__all__ = [
    "BoundedPowerSeries",
    "difference_series",
    "double_zero_exclusion",
    "SearchRegion",
    "SearchResult",
    "double_zero_search",
    "uniform_sampler",
    "vertex_sampler",
    "mixed_sampler",
    "fixed_sampler",
    "DiskRegion",
    "TransversalityReport",
    "TransversalityScan",
    "empirical_transversality",
    "transversality_scan",
    "random_pair",
    "ResolutionError",
]

DEFAULT_LENGTH = 256


@dataclass(frozen=True, eq=False)
class BoundedPowerSeries:
    """f(t) = leading + sum_{j=1}^L a_j t^j, with |a_j| <= ``tail_coeff`` for j > L."""

    leading: float
    coeffs: np.ndarray
    tail_coeff: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.leading not in (1.0, -1.0):
            raise ValueError(f"leading coefficient must be +-1, got {self.leading}")
        if np.any(np.abs(self.coeffs) > 1.0 + 1e-15):
            raise ValueError("coefficients must lie in [-1, 1]")

    @property
    def length(self) -> int:
        return len(self.coeffs)

    def is_member(self) -> bool:
        return self.leading in (1.0, -1.0) and bool(np.all(np.abs(self.coeffs) <= 1.0 + 1e-15))

    def __call__(self, t):
        t = np.asarray(t, dtype=complex)
        acc = np.zeros_like(t)
        for a in self.coeffs[::-1]:
            acc = acc * t + a
        return self.leading + acc * t

    def derivative(self, t):
        t = np.asarray(t, dtype=complex)
        acc = np.zeros_like(t)
        L = self.length
        for j in range(L, 0, -1):
            acc = acc * t + j * self.coeffs[j - 1]
        return acc

    def tail_bound(self, rho: float) -> float:
        """Bound on |sum_{j>L} a_j t^j| for |t| <= rho."""
        if self.tail_coeff == 0:
            return 0.0
        return self.tail_coeff * rho ** (self.length + 1) / (1.0 - rho)

    def derivative_tail_bound(self, rho: float) -> float:
        """Bound on |sum_{j>L} j a_j t^(j-1)| for |t| <= rho."""
        if self.tail_coeff == 0:
            return 0.0
        L = self.length
        # sum_{j>L} j rho^(j-1) = rho^L ((L+1) - L rho) / (1-rho)^2
        return self.tail_coeff * rho ** L * ((L + 1) - L * rho) / (1.0 - rho) ** 2


def difference_series(schedule: MapSchedule, omega: SymbolStream, tau: SymbolStream,
                      n: int | None = None, length: int = DEFAULT_LENGTH) -> BoundedPowerSeries:
    """n * (pi_{n,t}(omega) - pi_{n,t}(tau)) as a member of G."""
    if n is None:
        n = omega.start_level
    if omega.symbol(0) == tau.symbol(0):
        raise ValueError(f"streams agree at level {n}")
    d = n * (address_series(schedule, omega, n, length + 1) - address_series(schedule, tau, n, length + 1))
    if np.any(np.abs(d.imag) > 0):
        raise ValueError("translations are not real")
    d = d.real
    levels = n + np.arange(length + 1)
    if np.any(np.abs(d) > n / levels + 1e-12):
        raise ValueError("coefficient exceeds n/(n+i-1)")
    lead = float(np.round(d[0]))
    if abs(abs(d[0]) - 1.0) > 1e-12:
        raise ValueError(f"leading coefficient {d[0]} is not +-1")
    # beyond the truncation |a_j| <= n/(n+j) < 1
    return BoundedPowerSeries(lead, np.clip(d[1:], -1.0, 1.0), n / (n + length + 1))


def double_zero_exclusion(t) -> str:
    t = complex(t)
    if abs(t) < GAMMA_EXAMPLE and t.imag != 0:
        return "excluded"
    return "not-covered-by-theorem"


# ---------------------------------------------------------------------------
# double-zero search


@dataclass(frozen=True)
class SearchRegion:
    """Compact set {|t| <= r_max, |Im t| >= im_min}."""

    r_max: float
    im_min: float = 0.0

    def __post_init__(self):
        if not 0 < self.r_max < 1:
            raise ValueError("search region must lie in the unit disk")
        if not 0 <= self.im_min < self.r_max:
            raise ValueError("empty search region")

    @classmethod
    def inside_exclusion(cls, margin: float = 1e-6) -> "SearchRegion":
        """The double-zero exclusion region shrunk by ``margin`` (relative in modulus)."""
        return cls(GAMMA_EXAMPLE * (1.0 - margin), margin)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(0, dtype=complex)
        while out.size < count:
            r = self.r_max * np.sqrt(rng.random(2 * count))
            z = r * np.exp(2j * np.pi * rng.random(2 * count))
            out = np.concatenate([out, z[np.abs(z.imag) >= self.im_min]])
        return out[:count]

    def project(self, z: np.ndarray) -> np.ndarray:
        r = np.abs(z)
        z = np.where(r > self.r_max, z * (self.r_max / np.where(r > 0, r, 1)), z)
        if self.im_min > 0:
            sign = np.where(z.imag >= 0, 1.0, -1.0)
            z = np.where(np.abs(z.imag) < self.im_min, z.real + 1j * sign * self.im_min, z)
            r = np.abs(z)
            # pushing off the axis can leave the disk; pull back along the real part
            over = r > self.r_max
            re = np.sign(z.real) * np.sqrt(np.maximum(self.r_max ** 2 - self.im_min ** 2, 0.0))
            z = np.where(over, re + 1j * np.imag(z), z)
        return z


def uniform_sampler(rng, count, length):
    lead = rng.choice([-1.0, 1.0], size=count)
    return lead, rng.uniform(-1.0, 1.0, size=(count, length))


def vertex_sampler(rng, count, length):
    lead = rng.choice([-1.0, 1.0], size=count)
    return lead, rng.choice([-1.0, 1.0], size=(count, length))


def mixed_sampler(rng, count, length):
    """Half uniform coefficients, half +-1 vertices of the coefficient cube."""
    half = count // 2
    l1, c1 = uniform_sampler(rng, half, length)
    l2, c2 = vertex_sampler(rng, count - half, length)
    return np.concatenate([l1, l2]), np.concatenate([c1, c2])


def fixed_sampler(series: BoundedPowerSeries):
    def sampler(rng, count, length):
        c = np.zeros((count, length))
        k = min(length, series.length)
        c[:, :k] = series.coeffs[:k]
        return np.full(count, series.leading), c
    return sampler


@dataclass(frozen=True)
class SearchResult:
    value: float
    location: complex
    series: BoundedPowerSeries
    trials: int
    restarts: int
    threshold: float
    below_threshold: int
    tail_bound: float

    @property
    def consistent(self) -> bool:
        return self.value > self.threshold


def _poly_eval(lead, coeffs, z):
    """f, f', f'' of lead + sum_j c_j t^j at z (each row of coeffs with its own z column)."""
    L = coeffs.shape[1]
    f = np.zeros_like(z)
    d1 = np.zeros_like(z)
    d2 = np.zeros_like(z)
    for j in range(L, 0, -1):
        c = coeffs[:, j - 1][:, None]
        d2 = d2 * z + 2 * d1
        d1 = d1 * z + f
        f = f * z + c
    # at this point f = sum c_j z^(j-1); shift by one power of z
    d2 = d2 * z + 2 * d1
    d1 = d1 * z + f
    f = f * z + lead[:, None]
    return f, d1, d2


def double_zero_search(sampler=mixed_sampler, region: SearchRegion | None = None,
                       trials: int = 10_000, restarts: int = 64, threshold: float = 1e-3,
                       seed: int = 0, length: int = 48, iterations: int = 40,
                       batch: int = 256, series_tail: float = 0.0) -> SearchResult:
    """Minimize max(|f|, |f'|) over the region for random series from ``sampler``.

    Each series gets ``restarts`` uniform random starts, refined by damped
    Gauss-Newton steps on |f|^2 + |f'|^2 (Levenberg-Marquardt damping, iterates
    projected back into the region).  The best value seen anywhere is kept.
    ``series_tail`` is the coefficient bound beyond ``length`` (0 for the
    polynomial samplers here, whose series are exact members of G).
    """
    region = region or SearchRegion.inside_exclusion()
    tail = 0.0
    if series_tail:
        tail = series_tail * region.r_max ** (length + 1) / (1 - region.r_max)
    if threshold <= tail:
        raise ValueError(f"threshold {threshold:g} not above the truncation tail bound {tail:g}")
    best = (math.inf, 0j, None)
    below = 0
    for lo in range(0, trials, batch):
        count = min(batch, trials - lo)
        rng = np.random.default_rng([seed, lo // batch])
        lead, coeffs = sampler(rng, count, length)
        z = region.sample(rng, count * restarts).reshape(count, restarts)
        lam = np.full(z.shape, 1e-3)
        f, d1, d2 = _poly_eval(lead, coeffs, z)
        obj = np.abs(f) ** 2 + np.abs(d1) ** 2
        seen = np.maximum(np.abs(f), np.abs(d1)).min(axis=1)
        where = z[np.arange(count), np.maximum(np.abs(f), np.abs(d1)).argmin(axis=1)]
        for _ in range(iterations):
            num = np.conj(d1) * f + np.conj(d2) * d1
            den = np.abs(d1) ** 2 + np.abs(d2) ** 2 + lam
            cand = region.project(z - num / den)
            cf, c1, c2 = _poly_eval(lead, coeffs, cand)
            cobj = np.abs(cf) ** 2 + np.abs(c1) ** 2
            ok = cobj < obj
            z = np.where(ok, cand, z)
            f, d1, d2 = np.where(ok, cf, f), np.where(ok, c1, d1), np.where(ok, c2, d2)
            obj = np.where(ok, cobj, obj)
            lam = np.where(ok, lam * 0.3, lam * 10.0)
            m = np.maximum(np.abs(f), np.abs(d1))
            k = m.argmin(axis=1)
            mk = m[np.arange(count), k]
            better = mk < seen
            seen = np.where(better, mk, seen)
            where = np.where(better, z[np.arange(count), k], where)
        below += int(np.count_nonzero(seen < threshold))
        i = int(seen.argmin())
        if seen[i] < best[0]:
            best = (float(seen[i]), complex(where[i]),
                    BoundedPowerSeries(float(lead[i]), coeffs[i].copy(), series_tail))
    return SearchResult(best[0], best[1], best[2], trials, restarts, threshold, below, tail)


# ---------------------------------------------------------------------------
# empirical transversality


class ResolutionError(ValueError):
    """Grid cells too coarse (or radius below the truncation tail)."""


@dataclass(frozen=True)
class DiskRegion:
    """Compact parameter region G: closed disk, optionally intersected with |t| <= modulus_cap."""

    center: complex
    radius: float
    modulus_cap: float | None = None

    def cells(self, h: float) -> np.ndarray:
        """Centers of the h-grid cells (anchored at the disk's bounding-box corner) lying in G."""
        n = int(math.ceil(2 * self.radius / h))
        k = (np.arange(n) + 0.5) * h - self.radius
        t = self.center + k[None, :] + 1j * k[:, None]
        t = t.ravel()
        keep = np.abs(t - self.center) <= self.radius
        if self.modulus_cap is not None:
            keep &= np.abs(t) <= self.modulus_cap
        return t[keep]

    def max_modulus(self) -> float:
        top = abs(self.center) + self.radius
        return min(top, self.modulus_cap) if self.modulus_cap is not None else top


@dataclass(frozen=True)
class TransversalityReport:
    n: int
    radii: np.ndarray
    cell: float
    area: np.ndarray
    area_upper: np.ndarray
    area_G: float
    C_hat: float
    lipschitz: float
    tail: float

    @property
    def log_rate(self) -> float:
        return math.log(self.C_hat) / self.n if self.C_hat > 0 else -math.inf


def _diff_coeffs(schedule, omega, tau, n, length):
    d = address_series(schedule, omega, n, length) - address_series(schedule, tau, n, length)
    return d


def empirical_transversality(schedule: MapSchedule, G: DiskRegion, omega: SymbolStream,
                             tau: SymbolStream, n: int, radii, cell: float,
                             length: int = DEFAULT_LENGTH, min_cells: float = 10.0
                             ) -> TransversalityReport:
    """Area of {t in G : |pi_{n,t}(omega) - pi_{n,t}(tau)| <= r} by cell counting.

    With D the address difference, a cell of center c and half-diagonal h'
    counts as inside when |D(c)| + L_c h' + tail <= r, where
    L_c = |D'(c)| + M2 h' + tail' bounds |D'| on the cell (M2 bounds |D''| on
    |t| <= rho).  Cells that are neither surely inside nor surely outside
    form the uncertainty band ``area_upper - area``.  The smallest radius must
    leave ``min_cells`` cells across the expected sublevel width 2r/|D'|.
    """
    if omega.symbol(0) == tau.symbol(0):
        raise ValueError(f"streams agree at level {n}")
    radii = np.sort(np.asarray(radii, dtype=float))
    cells = G.cells(cell)
    region: ParameterRegion = schedule.region
    half_diag = cell / math.sqrt(2.0)
    dist = region.boundary_distances(cells)
    if cells.size == 0 or dist.min() <= half_diag:
        raise ValueError("G must lie inside U at positive distance from its boundary")
    rho = G.max_modulus() + half_diag
    d = _diff_coeffs(schedule, omega, tau, n, length)
    # beyond the truncation |d_i| <= 1/(n+i-1) < 1/(n+length)
    k = np.arange(length, length + 4000, dtype=float)
    w = 1.0 / (n + length)
    tail0 = w * rho ** length / (1.0 - rho)
    tail1 = w * float(np.sum(k * rho ** (k - 1)))
    tail2 = w * float(np.sum(k * (k - 1) * rho ** (k - 2)))
    i = np.arange(2, length)
    M2 = float(np.sum(i * (i - 1) * np.abs(d[2:]) * rho ** (i - 2))) + tail2
    if radii[0] <= tail0:
        raise ResolutionError(f"radius {radii[0]:g} below the truncation tail bound {tail0:g}")
    vals = np.zeros(cells.shape, dtype=complex)
    der = np.zeros(cells.shape, dtype=complex)
    for c in d[::-1]:
        der = der * cells + vals
        vals = vals * cells + c
    mod = np.abs(vals)
    slope = np.abs(der)
    near = mod <= radii[0]
    # slope across the sublevel set, or at the closest approach if it is empty
    ref = slope[near].max() if near.any() else slope[mod.argmin()]
    if ref > 0:
        width = 2 * radii[0] / ref
        if width < min_cells * cell:
            raise ResolutionError(f"cell {cell:g} too coarse: sublevel width ~{width:.3g} "
                                  f"spans < {min_cells:g} cells")
    local_lip = slope + M2 * half_diag + tail1
    slack = local_lip * half_diag + tail0
    area = np.array([np.count_nonzero(mod + slack <= r) for r in radii]) * cell ** 2
    upper = np.array([np.count_nonzero(mod - slack <= r) for r in radii]) * cell ** 2
    C = float(np.max(area / radii ** 2))
    return TransversalityReport(n, radii, cell, area, upper, cells.size * cell ** 2, C,
                                float(local_lip.max()), tail0)


def random_pair(schedule: MapSchedule, n: int, seed: int) -> tuple[SymbolStream, SymbolStream]:
    """Two seeded random streams at level n that differ in their first symbol."""
    alpha = schedule.alphabet
    first = UniformTail(seed, alpha)(0, n)
    other = (first + 1 + UniformTail(seed + 1, alpha)(0, n) % max(1, alpha.size_at(n) - 1)) \
        % alpha.size_at(n)
    omega = SymbolStream(n, (first,), UniformTail(seed + 2, alpha))
    tau = SymbolStream(n, (other,), UniformTail(seed + 3, alpha))
    return omega, tau


@dataclass(frozen=True)
class TransversalityScan:
    ns: np.ndarray
    C_hat: np.ndarray
    reports: list = field(repr=False, default_factory=list)

    @property
    def C_over_n2(self) -> np.ndarray:
        return self.C_hat / self.ns.astype(float) ** 2

    @property
    def log_rates(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.C_hat) / self.ns

    @property
    def K_fit(self) -> float:
        """Smallest K with C_hat_n <= K n^2 for every scanned n."""
        return float(self.C_over_n2.max())

    @property
    def K_spread(self) -> float:
        """max/min of C_hat_n / n^2 (inf if some C_hat_n vanishes)."""
        r = self.C_over_n2
        return float(r.max() / r.min()) if r.min() > 0 else math.inf


def transversality_scan(schedule: MapSchedule, G: DiskRegion, ns, radii, cell: float,
                        pairs: int = 16, seed: int = 0, length: int = DEFAULT_LENGTH
                        ) -> TransversalityScan:
    """C_hat_n = max over ``pairs`` random stream pairs per level n."""
    ns = np.asarray(list(ns), dtype=int)
    C = np.zeros(len(ns))
    reports = []
    for a, n in enumerate(ns):
        for p in range(pairs):
            omega, tau = random_pair(schedule, int(n), 4 * (seed * 1_000_003 + int(n) * 1009 + p))
            rep = empirical_transversality(schedule, G, omega, tau, int(n), radii, cell, length)
            reports.append(rep)
            C[a] = max(C[a], rep.C_hat)
    return TransversalityScan(ns, C, reports)
