"""Level-dependent alphabets, finite words and infinite symbol streams.

Symbols are stored 0-based.  User-facing text (``format_word`` /
``parse_word``) is 1-based so that the two-map example reads ``1.2.1``.
"""
from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "AlphabetSchedule",
    "Word",
    "SymbolStream",
    "Periodic",
    "UniformTail",
    "PrefixMarker",
    "prefix",
    "shift",
    "longest_common_prefix",
    "enumerate_words",
    "word_array",
    "word_count",
    "format_word",
    "parse_word",
]

DEFAULT_DEPTH_LIMIT = 64


@dataclass(frozen=True)
class AlphabetSchedule:
    """Cardinalities |I^(j)| given by a periodic table (a constant if one entry)."""

    sizes: tuple[int, ...] = (2,)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError(f"alphabet sizes must be positive, got {self.sizes!r}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def constant(cls, size: int) -> "AlphabetSchedule":
        return cls((size,))

    def size_at(self, j: int) -> int:
        if j < 1:
            raise ValueError(f"levels start at 1, got {j}")
        return self.sizes[(j - 1) % len(self.sizes)]

    @property
    def max_size(self) -> int:
        return max(self.sizes)


@dataclass(frozen=True)
class Word:
    """A finite word whose k-th symbol is drawn from I^(start_level + k)."""

    start_level: int
    symbols: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if self.start_level < 1:
            raise ValueError(f"start_level must be >= 1, got {self.start_level}")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def end_level(self) -> int:
        """Level of the last symbol (start_level - 1 for the empty word)."""
        return self.start_level + len(self.symbols) - 1

    def validate(self, alphabet: AlphabetSchedule) -> None:
        for k, sym in enumerate(self.symbols):
            size = alphabet.size_at(self.start_level + k)
            if not 0 <= sym < size:
                raise ValueError(
                    f"symbol {sym + 1} at level {self.start_level + k} "
                    f"outside alphabet of size {size}"
                )

    def concat(self, other: "Word") -> "Word":
        if len(self) and other.start_level != self.end_level + 1:
            raise ValueError("words are not adjacent in level")
        start = self.start_level if len(self) else other.start_level
        return Word(start, self.symbols + other.symbols)

    def __getitem__(self, item):
        if isinstance(item, slice):
            start, _, step = item.indices(len(self.symbols))
            if step != 1:
                raise ValueError("only contiguous subwords are supported")
            return Word(self.start_level + start, self.symbols[item])
        return self.symbols[item]


# ---------------------------------------------------------------------------
# tail rules


@dataclass(frozen=True)
class Periodic:
    """Tail repeating ``pattern`` forever; a one-symbol pattern is a constant tail."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("periodic pattern must be non-empty")
        object.__setattr__(self, "pattern", tuple(int(s) for s in self.pattern))

    def __call__(self, q: int, level: int) -> int:
        return self.pattern[q % len(self.pattern)]


_BLOCK = 64


@functools.lru_cache(maxsize=4096)
def _uniform_block(seed: int, block: int) -> tuple[float, ...]:
    rng = np.random.default_rng([seed, block])
    return tuple(rng.random(_BLOCK))


@dataclass(frozen=True)
class UniformTail:
    """Seeded iid tail, uniform on I^(level) at each level.

    Symbols are addressable at any position without generating the ones
    before it (the random stream is cut into independently seeded blocks).
    """

    seed: int
    alphabet: AlphabetSchedule = field(default_factory=AlphabetSchedule)

    def __call__(self, q: int, level: int) -> int:
        u = _uniform_block(self.seed, q // _BLOCK)[q % _BLOCK]
        return int(u * self.alphabet.size_at(level))


@dataclass(frozen=True)
class SymbolStream:
    """An infinite word omega in I_n^infinity: finite prefix followed by a tail rule.

    ``skip`` counts symbols dropped by :func:`shift`; the tail rule is always
    called with the index relative to the end of the original prefix.
    """

    origin_level: int
    head: tuple[int, ...] = ()
    tail: object = Periodic((0,))
    skip: int = 0

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(s) for s in self.head))
        if self.origin_level < 1:
            raise ValueError("levels start at 1")

    @classmethod
    def periodic(cls, pattern: Sequence[int], start_level: int = 1) -> "SymbolStream":
        return cls(start_level, (), Periodic(tuple(pattern)))

    @classmethod
    def eventually_constant(
        cls, head: Sequence[int], symbol: int, start_level: int = 1
    ) -> "SymbolStream":
        return cls(start_level, tuple(head), Periodic((symbol,)))

    @classmethod
    def random(
        cls, seed: int, alphabet: AlphabetSchedule | None = None, start_level: int = 1,
        head: Sequence[int] = (),
    ) -> "SymbolStream":
        return cls(start_level, tuple(head), UniformTail(seed, alphabet or AlphabetSchedule()))

    @property
    def start_level(self) -> int:
        return self.origin_level + self.skip

    def symbol(self, k: int) -> int:
        """Symbol at 0-based position k, i.e. omega_{start_level + k}."""
        if k < 0:
            raise IndexError(k)
        p = self.skip + k
        if p < len(self.head):
            return self.head[p]
        return self.tail(p - len(self.head), self.origin_level + p)

    def symbols(self, count: int) -> tuple[int, ...]:
        return tuple(self.symbol(k) for k in range(count))


# ---------------------------------------------------------------------------
# operations


def prefix(stream: SymbolStream, j: int) -> Word:
    """omega|_j: the first j symbols as a word anchored at the stream's level."""
    if j < 1:
        raise ValueError(f"prefix length must be >= 1, got {j}")
    return Word(stream.start_level, stream.symbols(j))


def shift(stream: SymbolStream, n: int) -> SymbolStream:
    """sigma^n: drop the first n symbols; the result starts n levels later."""
    if n < 0:
        raise ValueError(f"shift must be nonnegative, got {n}")
    if n == 0:
        return stream
    return SymbolStream(stream.origin_level, stream.head, stream.tail, stream.skip + n)


class PrefixMarker(enum.Enum):
    DISJOINT = "disjoint-at-first-symbol"
    DEPTH_LIMIT = "equal-up-to-depth-limit"


def longest_common_prefix(
    omega: SymbolStream, tau: SymbolStream, depth_limit: int = DEFAULT_DEPTH_LIMIT
) -> Word | PrefixMarker:
    """omega ^ tau, or a marker when the first symbols differ / no difference is found."""
    if omega.start_level != tau.start_level:
        raise ValueError(
            f"streams anchored at different levels ({omega.start_level} vs {tau.start_level})"
        )
    if omega.symbol(0) != tau.symbol(0):
        return PrefixMarker.DISJOINT
    for k in range(1, depth_limit):
        if omega.symbol(k) != tau.symbol(k):
            return Word(omega.start_level, omega.symbols(k))
    return PrefixMarker.DEPTH_LIMIT


def word_count(alphabet: AlphabetSchedule, n: int, start_level: int = 1) -> int:
    return int(np.prod([alphabet.size_at(start_level + k) for k in range(n)], dtype=object))


def enumerate_words(alphabet: AlphabetSchedule, n: int, start_level: int = 1) -> Iterator[Word]:
    """All words of length n from ``start_level`` in lexicographic order."""
    ranges = [range(alphabet.size_at(start_level + k)) for k in range(n)]
    for syms in itertools.product(*ranges):
        yield Word(start_level, syms)


def word_array(alphabet: AlphabetSchedule, n: int, start_level: int = 1) -> np.ndarray:
    """All words of length n as rows of an int array, same order as enumerate_words."""
    sizes = [alphabet.size_at(start_level + k) for k in range(n)]
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(sizes).reshape(n, -1).T
    return np.ascontiguousarray(grids)


def format_word(word: Word) -> str:
    return ".".join(str(s + 1) for s in word.symbols)


def parse_word(text: str, start_level: int = 1) -> Word:
    text = text.strip()
    if not text:
        return Word(start_level, ())
    return Word(start_level, tuple(int(tok) - 1 for tok in text.split(".")))
