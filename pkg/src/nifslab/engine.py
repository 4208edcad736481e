"""Parameterized families of affine conformal NIFSs.

Points of R^1 and R^2 are both carried as Python/numpy complex numbers (the
imaginary part is zero in dimension one), so a map is ``z -> a*z + b`` with a
complex linear part ``a``.  For m = 2 this is a planar similarity with scaling
factor |a| and rotation arg(a); for m = 1, ``a`` must be real and its sign is
the orthogonal part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .symbolic import AlphabetSchedule, SymbolStream, Word, prefix

__all__ = [
    "Ball",
    "AmbientSpace",
    "ParameterRegion",
    "AffineMap",
    "ComposedMap",
    "AddressPoint",
    "MapSchedule",
    "OSCReport",
    "ParameterError",
    "DepthCeilingError",
    "compose",
    "derivative_norm",
    "address",
    "address_batch",
    "address_series",
    "osc_check",
    "required_depth",
]

DEFAULT_DEPTH_CEILING = 10_000


class ParameterError(ValueError):
    """Parameter outside the family's region U."""


class DepthCeilingError(ValueError):
    """Requested tolerance needs more composition levels than allowed."""


@dataclass(frozen=True)
class Ball:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains_ball(self, center, radius, slack: float = 1e-12) -> np.ndarray:
        """Closed-ball inclusion B(center, radius) in self (vectorized)."""
        return np.abs(np.asarray(center) - self.center) + radius <= self.radius + slack


@dataclass(frozen=True)
class AmbientSpace:
    """Seed set X (closed ball) inside the open extension domain V."""

    m: int
    X: Ball
    V: Ball

    def __post_init__(self):
        if self.m not in (1, 2):
            raise ValueError(f"only m = 1 or m = 2 is supported, got {self.m}")
        if self.m == 1 and (self.X.center.imag or self.V.center.imag):
            raise ValueError("centers must be real in dimension one")
        gap = self.V.radius - abs(self.V.center - self.X.center) - self.X.radius
        if not gap > 0:
            raise ValueError("X must lie strictly inside V")

    @property
    def gap(self) -> float:
        """Distance from X to the boundary of V."""
        return self.V.radius - abs(self.V.center - self.X.center) - self.X.radius

    @property
    def diameter(self) -> float:
        return self.X.diameter

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform random points of X."""
        c, r = self.X.center, self.X.radius
        if self.m == 1:
            return c + r * rng.uniform(-1.0, 1.0, count) + 0j
        rho = r * np.sqrt(rng.uniform(0.0, 1.0, count))
        return c + rho * np.exp(2j * np.pi * rng.uniform(0.0, 1.0, count))


@dataclass(frozen=True)
class ParameterRegion:
    """Open parameter set U.

    ``kind`` is ``"disk"`` (complex parameter, d = 2; optionally with the real
    axis removed) or ``"interval"`` (real parameter, d = 1).
    """

    kind: str
    center: complex = 0j
    radius: float = 1.0
    exclude_real: bool = False
    lo: float = -1.0
    hi: float = 1.0
    tag: str = ""

    def __post_init__(self):
        if self.kind not in ("disk", "interval"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        object.__setattr__(self, "center", complex(self.center))

    @classmethod
    def disk(cls, center=0j, radius=1.0, exclude_real=False, tag="") -> "ParameterRegion":
        return cls("disk", center=center, radius=radius, exclude_real=exclude_real, tag=tag)

    @classmethod
    def interval(cls, lo, hi, tag="") -> "ParameterRegion":
        return cls("interval", lo=lo, hi=hi, tag=tag)

    @property
    def d(self) -> int:
        return 2 if self.kind == "disk" else 1

    @property
    def bounding_box(self) -> tuple[complex, complex]:
        """(lower-left, upper-right) corners; real endpoints for intervals."""
        if self.kind == "disk":
            r = self.radius
            return self.center - r - 1j * r, self.center + r + 1j * r
        return complex(self.lo), complex(self.hi)

    def contains(self, t) -> np.ndarray | bool:
        t = np.asarray(t)
        if self.kind == "disk":
            inside = np.abs(t - self.center) < self.radius
            if self.exclude_real:
                inside &= np.imag(t) != 0
            return inside if inside.ndim else bool(inside)
        inside = (np.imag(t) == 0) & (np.real(t) > self.lo) & (np.real(t) < self.hi)
        return inside if inside.ndim else bool(inside)

    def boundary_distance(self, t) -> float:
        """Euclidean distance from t to the complement of U (0 outside U)."""
        if not self.contains(t):
            return 0.0
        t = complex(t)
        if self.kind == "disk":
            dist = self.radius - abs(t - self.center)
            if self.exclude_real:
                dist = min(dist, abs(t.imag))
            return dist
        return min(t.real - self.lo, self.hi - t.real)

    def boundary_distances(self, ts) -> np.ndarray:
        """Vectorized :meth:`boundary_distance`."""
        ts = np.asarray(ts, dtype=complex)
        if self.kind == "disk":
            dist = self.radius - np.abs(ts - self.center)
            if self.exclude_real:
                dist = np.minimum(dist, np.abs(ts.imag))
        else:
            dist = np.minimum(ts.real - self.lo, self.hi - ts.real)
        return np.where(self.contains(ts), dist, 0.0)

    def to_dict(self) -> dict:
        if self.kind == "disk":
            return {
                "kind": "disk",
                "center": [self.center.real, self.center.imag],
                "radius": self.radius,
                "exclude_real": self.exclude_real,
            }
        return {"kind": "interval", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class AffineMap:
    """z -> a*z + b."""

    a: complex = 1 + 0j
    b: complex = 0j

    def __call__(self, z):
        return self.a * z + self.b

    def then(self, inner: "AffineMap") -> "AffineMap":
        """self o inner."""
        return AffineMap(self.a * inner.a, self.a * inner.b + self.b)

    @property
    def scale(self) -> float:
        return abs(self.a)


@dataclass(frozen=True)
class ComposedMap:
    """phi_{omega,t}: the composition along a word, still affine conformal."""

    affine: AffineMap
    word: Word
    t: complex

    @property
    def linear(self) -> complex:
        return self.affine.a

    @property
    def translation(self) -> complex:
        return self.affine.b

    def __call__(self, z):
        return self.affine(z)

    def derivative_at(self, z) -> float:
        """|D phi(z)|; constant for affine maps."""
        return abs(self.affine.a)

    def image_ball(self, ball: Ball) -> tuple[complex, float]:
        return self.affine(ball.center), abs(self.affine.a) * ball.radius


@dataclass(frozen=True)
class AddressPoint:
    point: complex
    depth: int
    error_bound: float


Rule = Callable[[int, int, object], object]


@dataclass(frozen=True, eq=False)
class MapSchedule:
    """The family t -> Phi_t with phi_{i,t}^(j)(z) = linear(j,i,t) z + translation(j,i,t).

    ``linear`` and ``translation`` take the 1-based level j, the 0-based
    symbol i and a parameter (scalar or numpy array) and must broadcast.

    ``gamma`` is the declared uniform contraction bound.  ``contraction`` is
    an optional certified per-parameter bound sup_j max_i |linear(j,i,t)|;
    without it the declared ``gamma`` is used.  ``closed_form`` marks catalog
    families whose per-level quantities have been bounded analytically for
    every level and parameter (not just sampled ones).
    """

    name: str
    space: AmbientSpace
    alphabet: AlphabetSchedule
    region: ParameterRegion
    linear: Rule
    translation: Rule
    gamma: float
    contraction: Callable[[object], float] | None = None
    closed_form: bool = False
    series_form: bool = False
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"declared contraction bound must be in (0,1), got {self.gamma}")

    @property
    def m(self) -> int:
        return self.space.m

    def check_parameter(self, t) -> None:
        if not self.region.contains(t):
            raise ParameterError(f"parameter {complex(t)} lies outside U ({self.region.tag or self.region.kind})")

    def contraction_at(self, t) -> float:
        if self.contraction is None:
            return self.gamma
        return float(self.contraction(t))

    def level(self, j: int, t) -> tuple[np.ndarray, np.ndarray]:
        """Linear parts and translations of Phi_t^(j), one row per symbol."""
        size = self.alphabet.size_at(j)
        shape = np.shape(t)
        a = np.empty((size,) + shape, dtype=complex)
        b = np.empty((size,) + shape, dtype=complex)
        for i in range(size):
            a[i] = self.linear(j, i, t)
            b[i] = self.translation(j, i, t)
        return a, b

    def map_at(self, j: int, i: int, t) -> AffineMap:
        size = self.alphabet.size_at(j)
        if not 0 <= i < size:
            raise ValueError(f"symbol {i + 1} outside I^({j}) of size {size}")
        return AffineMap(complex(self.linear(j, i, t)), complex(self.translation(j, i, t)))

    def log_scales(self, j: int, t) -> np.ndarray:
        """log |linear part| for every symbol of level j."""
        a, _ = self.level(j, t)
        return np.log(np.abs(a))


def compose(schedule: MapSchedule, word: Word, t, check: bool = True) -> ComposedMap:
    """phi_{omega,t} = phi^(n)_{omega_n} o ... o phi^(k)_{omega_k}; identity for the empty word."""
    if check:
        schedule.check_parameter(t)
        word.validate(schedule.alphabet)
    total = AffineMap()
    for k, sym in enumerate(word.symbols):
        total = total.then(schedule.map_at(word.start_level + k, sym, t))
    return ComposedMap(total, word, t)


def derivative_norm(cmap: ComposedMap) -> float:
    """||D phi||_X, the (constant) scaling factor of an affine conformal map."""
    return abs(cmap.linear)


def required_depth(contraction: float, diameter: float, tolerance: float) -> int:
    """Least N with contraction**N * diameter <= tolerance."""
    if tolerance >= diameter:
        return 0
    n = math.ceil(math.log(tolerance / diameter) / math.log(contraction))
    while contraction ** n * diameter > tolerance:
        n += 1
    while n > 0 and contraction ** (n - 1) * diameter <= tolerance:
        n -= 1
    return n


def address(
    schedule: MapSchedule,
    stream: SymbolStream,
    t,
    tolerance: float,
    depth_ceiling: int = DEFAULT_DEPTH_CEILING,
    check: bool = True,
) -> AddressPoint:
    """pi_{n,t}(omega) approximated by phi_{omega|N,t}(center of X).

    ``check=False`` skips the membership test t in U, e.g. to evaluate the
    address series at a real parameter where it still converges.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if check:
        schedule.check_parameter(t)
    gamma_t = schedule.contraction_at(t)
    diam = schedule.space.diameter
    n = required_depth(gamma_t, diam, tolerance)
    if n > depth_ceiling:
        raise DepthCeilingError(
            f"tolerance {tolerance:g} needs depth {n} > ceiling {depth_ceiling}"
        )
    z = schedule.space.X.center
    start = stream.start_level
    for k in range(n - 1, -1, -1):
        f = schedule.map_at(start + k, stream.symbol(k), t)
        z = f(z)
    return AddressPoint(complex(z), n, gamma_t ** n * diam)


def address_batch(
    schedule: MapSchedule, symbols: np.ndarray, t, start_level: int = 1
) -> np.ndarray:
    """Vectorized phi_{omega|N,t}(center X) for each row of an (M, N) symbol array."""
    symbols = np.asarray(symbols)
    count, depth = symbols.shape
    z = np.full(count, schedule.space.X.center, dtype=complex)
    for k in range(depth - 1, -1, -1):
        a, b = schedule.level(start_level + k, t)
        col = symbols[:, k]
        z = a[col] * z + b[col]
    return z


def address_series(schedule: MapSchedule, stream: SymbolStream, n: int | None = None,
                   length: int = 256) -> np.ndarray:
    """Coefficients of pi_{n,t}(omega) = sum_i b^(n+i-1)_{omega_{n+i-1}} t^(i-1).

    Only defined for families whose maps all have linear part t (the catalog's
    ``paper-example``); then the coefficients do not depend on t.
    """
    if not schedule.series_form:
        raise ValueError(f"family {schedule.name!r} has no power-series address form")
    if n is None:
        n = stream.start_level
    if stream.start_level != n:
        raise ValueError(f"stream anchored at level {stream.start_level}, expected {n}")
    return np.array(
        [complex(schedule.translation(n + k, stream.symbol(k), 0j)) for k in range(length)]
    )


@dataclass(frozen=True)
class OSCReport:
    satisfied: bool
    tested_levels: int
    witness_level: int | None = None
    witness_pair: tuple[int, int] | None = None
    center_distance: float | None = None
    radius_sum: float | None = None


def osc_check(schedule: MapSchedule, t, depth: int) -> OSCReport:
    """Per-level disjointness of phi_a(int X) and phi_b(int X), levels 1..depth.

    Images of the open ball X are open balls, so they are disjoint exactly
    when the distance of centers is at least the sum of radii.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    X = schedule.space.X
    for j in range(1, depth + 1):
        a, b = schedule.level(j, t)
        centers = a * X.center + b
        radii = np.abs(a) * X.radius
        for p in range(len(a)):
            for q in range(p + 1, len(a)):
                dist = abs(centers[p] - centers[q])
                if dist < radii[p] + radii[q]:
                    return OSCReport(False, j, j, (p, q), float(dist), float(radii[p] + radii[q]))
    return OSCReport(True, depth)


def images_nested(schedule: MapSchedule, stream: SymbolStream, t, depth: int) -> bool:
    """phi_{omega|j+1}(X) subset of phi_{omega|j}(X) for j < depth (ball check)."""
    X = schedule.space.X
    prev = None
    for j in range(1, depth + 1):
        c, r = compose(schedule, prefix(stream, j), t).image_ball(X)
        if prev is not None:
            pc, pr = prev
            if abs(c - pc) + r > pr * (1 + 1e-12) + 1e-15:
                return False
        prev = (c, r)
    return True


def level_table(schedule: MapSchedule, t, depth: int, start_level: int = 1
                ) -> list[tuple[np.ndarray, np.ndarray]]:
    return [schedule.level(start_level + k, t) for k in range(depth)]
