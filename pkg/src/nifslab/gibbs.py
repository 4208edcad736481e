"""Finite-level Gibbs-like measures on the symbol space.

At level n the measure gives the cylinder [w], w in I^n, the mass
||D phi_{w,t}||^s / Z_{n,t}(s).  Shorter cylinders get the total mass of their
level-n extensions.  The weak-* limit over n is not constructed; everything
downstream works with the level-n table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import MapSchedule
from .pressure import DEFAULT_ENUM_CAP, log_norms, logsumexp
from .symbolic import AlphabetSchedule, SymbolStream, UniformTail, Word, word_count

__all__ = [
    "GibbsMeasure",
    "build_gibbs",
    "cylinder_mass",
    "cylinder_log_masses",
    "gibbs_bound_violations",
    "sample_stream",
    "sample_prefixes",
    "word_index",
    "decode_index",
]


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    top = x.max(axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    return safe + np.log(np.sum(np.exp(x - safe[:, None]), axis=1))


@dataclass(frozen=True, eq=False)
class GibbsMeasure:
    schedule: MapSchedule
    t: complex
    s: float
    level: int
    log_masses: np.ndarray
    log_Z: float

    @property
    def alphabet(self) -> AlphabetSchedule:
        return self.schedule.alphabet

    @property
    def masses(self) -> np.ndarray:
        return np.exp(self.log_masses)

    def block_size(self, m: int) -> int:
        """Number of level-n extensions of a length-m word."""
        return word_count(self.alphabet, self.level - m, m + 1)


def build_gibbs(schedule: MapSchedule, t, s: float, n: int,
                cap: int = DEFAULT_ENUM_CAP) -> GibbsMeasure:
    """Normalized cylinder-mass table mu_{t,s,n} over I^n."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if n < 1:
        raise ValueError("level must be >= 1")
    logw = s * log_norms(schedule, t, n, 1, cap)
    log_z = logsumexp(logw)
    return GibbsMeasure(schedule, complex(t), float(s), n, logw - log_z, log_z)


def word_index(alphabet: AlphabetSchedule, word: Word) -> int:
    """Position of a level-1 word in lexicographic order of I^|w|."""
    idx = 0
    for k, sym in enumerate(word.symbols):
        idx = idx * alphabet.size_at(1 + k) + sym
    return idx


def decode_index(alphabet: AlphabetSchedule, index: int, n: int) -> tuple[int, ...]:
    syms = []
    for k in range(n, 0, -1):
        size = alphabet.size_at(k)
        syms.append(index % size)
        index //= size
    return tuple(reversed(syms))


def cylinder_log_masses(measure: GibbsMeasure, m: int) -> np.ndarray:
    """log mu([w]) for every w in I^m (lexicographic order)."""
    if not 0 <= m <= measure.level:
        raise ValueError(f"prefix depth {m} outside 0..{measure.level}")
    block = measure.block_size(m)
    return _logsumexp_rows(measure.log_masses.reshape(-1, block))


def cylinder_mass(measure: GibbsMeasure, word: Word) -> float:
    """mu([w]): total mass of the level-n extensions of a level-1 word."""
    if word.start_level != 1 and len(word):
        raise ValueError("cylinder words must be anchored at level 1")
    m = len(word)
    if m > measure.level:
        raise ValueError(f"word of length {m} deeper than the level-{measure.level} table")
    word.validate(measure.alphabet)
    block = measure.block_size(m)
    start = word_index(measure.alphabet, word) * block
    return math.exp(logsumexp(measure.log_masses[start:start + block]))


def gibbs_bound_violations(measure: GibbsMeasure, distortion: float = 1.0,
                           slack: float = 1e-12) -> list[tuple[int, int, float]]:
    """Words breaking mu([w]) <= K^s ||D phi_w||^s / Z_{|w|}(s), as (m, index, excess).

    Checked in the log domain for every prefix depth m = 1..n; Z_m is
    recomputed by enumeration of I^m.
    """
    bad = []
    sched, t, s = measure.schedule, measure.t, measure.s
    for m in range(1, measure.level + 1):
        lhs = cylinder_log_masses(measure, m)
        lw = s * log_norms(sched, t, m)
        rhs = s * math.log(distortion) + lw - logsumexp(lw)
        excess = lhs - rhs
        for idx in np.flatnonzero(excess > slack):
            bad.append((m, int(idx), float(excess[idx])))
    return bad


def sample_prefixes(measure: GibbsMeasure, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` level-n prefixes drawn from the mass table, as a (count, n) array."""
    p = measure.masses
    idx = rng.choice(p.size, size=count, p=p / p.sum())
    out = np.empty((count, measure.level), dtype=np.int64)
    for k in range(measure.level, 0, -1):
        size = measure.alphabet.size_at(k)
        out[:, k - 1] = idx % size
        idx //= size
    return out


def sample_stream(measure: GibbsMeasure, seed: int = 0, tail=None) -> SymbolStream:
    """A stream whose first n symbols follow the table; the tail defaults to iid uniform."""
    rng = np.random.default_rng(seed)
    head = tuple(int(x) for x in sample_prefixes(measure, 1, rng)[0])
    if tail is None:
        tail = UniformTail(seed, measure.alphabet)
    return SymbolStream(1, head, tail)
