"""Constrained fermionic Fock spaces.

Basis states are occupancy words: bit ``i`` of the integer is set when mode
``i`` is occupied.  Modes are ordered by ascending index and the sign picked
up by ``a_i`` / ``a_i^dagger`` is ``(-1)^(number of occupied modes below i)``.
"""

from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_MODE_CAP = 24
SAMPLER_HARD_CEILING = 1_000_000


def mode_cap() -> int:
    """Dense-enumeration cap, overridable through ``SUSYHOM_MAX_MODES``."""
    raw = os.environ.get("SUSYHOM_MAX_MODES")
    if raw is None:
        return DEFAULT_MODE_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"SUSYHOM_MAX_MODES must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError("SUSYHOM_MAX_MODES must be positive")
    return cap


class CapExceeded(ValueError):
    """Raised when a dense path is asked to handle more modes than allowed."""


class EmptySector(ValueError):
    pass


class SamplingFailure(RuntimeError):
    """Rejection sampling did not find a member within the try budget."""


@dataclass(frozen=True)
class FockState:
    occupancy: int
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mode count must be non-negative")
        if self.occupancy < 0 or self.occupancy >> self.m:
            raise ValueError(f"occupancy {self.occupancy:#b} has bits outside {self.m} modes")

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "FockState":
        """Build from a mode-ordered list of occupation numbers, ``|n_0 n_1 ...>``."""
        word = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValueError("occupation numbers must be 0 or 1")
            word |= b << i
        return cls(word, len(bits))

    @property
    def fermion_number(self) -> int:
        return self.occupancy.bit_count()

    @property
    def parity(self) -> int:
        return -1 if self.fermion_number % 2 else 1

    def bits(self) -> tuple[int, ...]:
        return tuple((self.occupancy >> i) & 1 for i in range(self.m))

    def __str__(self) -> str:
        return "|" + "".join(str(b) for b in self.bits()) + ">"


def jw_sign(word: int, i: int) -> int:
    """``(-1)`` to the number of occupied modes strictly below ``i``."""
    return -1 if (word & ((1 << i) - 1)).bit_count() & 1 else 1


def apply_mode(kind: str, i: int, s: FockState) -> Optional[tuple[int, FockState]]:
    """Apply ``a_i^dagger`` (``kind='create'``) or ``a_i`` to a basis state.

    Returns ``(sign, new_state)``, or ``None`` when the result is the zero vector.
    """
    if not 0 <= i < s.m:
        raise IndexError(f"mode {i} out of range for {s.m} modes")
    bit = 1 << i
    occupied = bool(s.occupancy & bit)
    if kind == "create":
        if occupied:
            return None
    elif kind == "annihilate":
        if not occupied:
            return None
    else:
        raise ValueError(f"unknown mode operation {kind!r}")
    return jw_sign(s.occupancy, i), FockState(s.occupancy ^ bit, s.m)


@dataclass(frozen=True)
class ConstraintSet:
    """Forbidden monomials: each entry ``S`` encodes ``prod_{i in S} n_i = 0``."""

    forbidden: tuple[frozenset[int], ...] = ()

    @classmethod
    def of(cls, sets: Iterable[Iterable[int]]) -> "ConstraintSet":
        seen = []
        for s in sets:
            fs = frozenset(int(i) for i in s)
            if not fs:
                raise ValueError("an empty forbidden set would exclude every state")
            if fs not in seen:
                seen.append(fs)
        return cls(tuple(seen))

    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << i for i in s) for s in self.forbidden)

    def validate(self, m: int) -> None:
        for s in self.forbidden:
            if any(i < 0 or i >= m for i in s):
                raise ValueError(f"constraint {sorted(s)} references a mode outside 0..{m - 1}")
        if len(self.forbidden) > max(m * m, 1):
            raise ValueError(f"{len(self.forbidden)} constraints exceed the m^2 = {m * m} limit")

    def to_json(self) -> list[list[int]]:
        return [sorted(s) for s in self.forbidden]


@dataclass(frozen=True)
class DualRailLayout:
    """Site structure used by the reduction constructions.

    Site ``k`` owns modes ``(2k, 2k+1)``.  Sites listed in ``free_sites`` carry no
    constraint; every other site holds at most one fermion.
    """

    sites: int
    free_sites: frozenset[int] = frozenset({0})


@dataclass(eq=False)
class GradedSpace:
    m: int
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    layout: Optional[DualRailLayout] = None
    cap: Optional[int] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _index: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("mode count must be non-negative")
        self.constraints.validate(self.m)
        self._masks = self.constraints.masks()
        if self.cap is None:
            self.cap = mode_cap()

    @property
    def unconstrained(self) -> bool:
        return not self._masks

    def is_member_word(self, word: int) -> bool:
        for mask in self._masks:
            if word & mask == mask:
                return False
        return True

    def member(self, s: FockState) -> bool:
        if s.m != self.m:
            raise ValueError(f"state has {s.m} modes, space has {self.m}")
        return self.is_member_word(s.occupancy)

    def member_words(self, words: np.ndarray) -> np.ndarray:
        """Vectorised membership for an array of occupancy words."""
        words = np.asarray(words, dtype=np.uint64)
        ok = np.ones(words.shape, dtype=bool)
        for mask in self._masks:
            mk = np.uint64(mask)
            ok &= (words & mk) != mk
        return ok

    def _check_level(self, l: int) -> None:
        if not 0 <= l <= self.m:
            raise ValueError(f"fermion number {l} outside 0..{self.m}")

    def sector_words(self, l: int) -> list[int]:
        """Occupancy words of the sector ``F = l`` in ascending order (cached)."""
        self._check_level(l)
        words = self._cache.get(l)
        if words is not None:
            return words
        if self.m > self.cap:
            raise CapExceeded(f"{self.m} modes exceed the dense enumeration cap {self.cap}")
        words = _enumerate_sector(self.m, l, self._masks)
        with self._lock:
            words = self._cache.setdefault(l, words)
            self._index.setdefault(l, {w: k for k, w in enumerate(words)})
        return words

    def sector_index(self, l: int) -> dict[int, int]:
        self.sector_words(l)
        return self._index[l]

    def sector_basis(self, l: int) -> list[FockState]:
        return [FockState(w, self.m) for w in self.sector_words(l)]

    def dim(self, l: int) -> int:
        if l < 0 or l > self.m:
            return 0
        return len(self.sector_words(l))

    def dims(self) -> list[int]:
        return [self.dim(l) for l in range(self.m + 1)]

    def total_dim(self) -> int:
        return sum(self.dims())


def _enumerate_sector(m: int, l: int, masks: Sequence[int]) -> list[int]:
    if not masks:
        words = [sum(1 << i for i in c) for c in combinations(range(m), l)]
        words.sort()
        return words
    # neighbour lists of pairwise constraints allow pruning during the search
    pair_block = [0] * m
    general = []
    for mask in masks:
        if mask.bit_count() == 2:
            i = (mask & -mask).bit_length() - 1
            j = mask.bit_length() - 1
            pair_block[i] |= 1 << j
            pair_block[j] |= 1 << i
        else:
            general.append(mask)
    out: list[int] = []

    def rec(start: int, word: int, blocked: int, left: int) -> None:
        if left == 0:
            for g in general:
                if word & g == g:
                    return
            out.append(word)
            return
        for i in range(start, m - left + 1):
            bit = 1 << i
            if blocked & bit:
                continue
            rec(i + 1, word | bit, blocked | pair_block[i], left - 1)

    rec(0, 0, 0, l)
    out.sort()
    return out


def default_max_tries(space: GradedSpace, l: int) -> int:
    if space.m <= space.cap:
        dim = space.dim(l)
        if dim == 0:
            raise EmptySector(f"sector F={l} is empty")
        return min(64 * math.ceil(2**space.m / dim), SAMPLER_HARD_CEILING)
    return SAMPLER_HARD_CEILING


def sample_sector(
    space: GradedSpace,
    l: int,
    rng: np.random.Generator,
    max_tries: Optional[int] = None,
) -> FockState:
    """Draw a basis state uniformly from the sector ``F = l``.

    Dual-rail spaces use a direct constructive sampler; everything else uses
    rejection sampling over Hamming-weight-``l`` words.
    """
    space._check_level(l)
    if space.layout is not None:
        return FockState(_sample_dual_rail(space.layout, l, rng), space.m)
    if space.unconstrained:
        return FockState(_random_weight_word(space.m, l, rng), space.m)
    if max_tries is None:
        max_tries = default_max_tries(space, l)
    for _ in range(max_tries):
        w = _random_weight_word(space.m, l, rng)
        if space.is_member_word(w):
            return FockState(w, space.m)
    raise SamplingFailure(
        f"no member of sector F={l} found in {max_tries} tries; sector is not dense enough to sample"
    )


def _random_weight_word(m: int, l: int, rng: np.random.Generator) -> int:
    if l == 0:
        return 0
    idx = rng.choice(m, size=l, replace=False)
    return int(sum(1 << int(i) for i in idx))


def dual_rail_sector_dim(layout: DualRailLayout, l: int) -> int:
    free = len(layout.free_sites)
    single = layout.sites - free
    total = 0
    # the free sites together hold k fermions in C(2*free, k) ways
    for k in range(0, min(2 * free, l) + 1):
        rest = l - k
        if rest > single:
            continue
        total += math.comb(2 * free, k) * math.comb(single, rest) * 2**rest
    return total


def _sample_dual_rail(layout: DualRailLayout, l: int, rng: np.random.Generator) -> int:
    free = sorted(layout.free_sites)
    single = [s for s in range(layout.sites) if s not in layout.free_sites]
    weights = []
    for k in range(0, 2 * len(free) + 1):
        rest = l - k
        ok = 0 <= rest <= len(single)
        weights.append(math.comb(2 * len(free), k) * math.comb(len(single), rest) * 2**rest if ok else 0)
    total = sum(weights)
    if total == 0:
        raise EmptySector(f"sector F={l} is empty")
    k = int(rng.choice(len(weights), p=np.asarray(weights, dtype=float) / total))
    free_modes = [2 * s + r for s in free for r in (0, 1)]
    word = 0
    if k:
        for mode in rng.choice(len(free_modes), size=k, replace=False):
            word |= 1 << free_modes[int(mode)]
    rest = l - k
    if rest:
        for site_pos in rng.choice(len(single), size=rest, replace=False):
            site = single[int(site_pos)]
            word |= 1 << (2 * site + int(rng.integers(2)))
    return word
