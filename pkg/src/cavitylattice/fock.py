"""Bosonic Fock bases over a set of lattice sites.

States are occupation vectors ``(n_1, ..., n_M)`` with ``0 <= n_i <= n_max``,
optionally restricted to a fixed total particle number and/or an arbitrary
extra predicate. They are stored in strict lexicographic order, which is also
the numeric order of the mixed-radix key ``sum_i n_i (n_max+1)**(M-1-i)``;
lookups use that key with a binary search.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .errors import BasisLookupError, InfeasibleSectorError

__all__ = ["FockBasis", "build_basis", "rank", "unrank"]


def _compositions(m: int, cap: int, total: int) -> Iterator[tuple[int, ...]]:
    """Lexicographic occupation vectors of length ``m`` summing to ``total``."""
    if m == 1:
        if total <= cap:
            yield (total,)
        return
    lo = max(0, total - cap * (m - 1))
    for first in range(lo, min(cap, total) + 1):
        for rest in _compositions(m - 1, cap, total - first):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Enumerated bosonic occupation basis.

    Build with :func:`build_basis`; the object is immutable afterwards.
    """

    num_sites: int
    max_per_site: int
    total_number: int | None
    occupations: np.ndarray = field(repr=False)
    label: str | None = None

    def __post_init__(self):
        self.occupations.setflags(write=False)

    def __len__(self) -> int:
        return self.occupations.shape[0]

    @property
    def dim(self) -> int:
        return len(self)

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(int(x) for x in row) for row in self.occupations)

    @cached_property
    def index_of(self) -> Mapping[tuple[int, ...], int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def _radix(self) -> np.ndarray | None:
        base = self.max_per_site + 1
        if base ** self.num_sites >= 2**62:
            return None
        return base ** np.arange(self.num_sites - 1, -1, -1, dtype=np.int64)

    @cached_property
    def keys(self) -> np.ndarray:
        if self._radix is None:
            raise OverflowError("basis too large for integer keys")
        keys = self.occupations.astype(np.int64) @ self._radix
        keys.setflags(write=False)
        return keys

    @cached_property
    def tag(self) -> str:
        """Identifier used to check that operators act on the same basis."""
        digest = hashlib.sha1(np.ascontiguousarray(self.occupations).tobytes()).hexdigest()[:12]
        return f"fock:{self.num_sites}:{self.max_per_site}:{self.total_number}:{digest}"

    @cached_property
    def particle_numbers(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def lookup(self, occupations: np.ndarray) -> np.ndarray:
        """Indices of the rows of ``occupations`` (shape ``(k, M)``), -1 where absent."""
        occupations = np.asarray(occupations)
        if occupations.size == 0:
            return np.zeros(0, dtype=np.int64)
        inside = np.all((occupations >= 0) & (occupations <= self.max_per_site), axis=1)
        out = np.full(occupations.shape[0], -1, dtype=np.int64)
        if self._radix is None:
            for r in np.flatnonzero(inside):
                out[r] = self.index_of.get(tuple(int(x) for x in occupations[r]), -1)
            return out
        k = occupations[inside].astype(np.int64) @ self._radix
        pos = np.searchsorted(self.keys, k)
        pos_c = np.minimum(pos, len(self) - 1)
        found = (pos < len(self)) & (self.keys[pos_c] == k)
        out[np.flatnonzero(inside)[found]] = pos_c[found]
        return out

    def __iter__(self):
        return iter(self.states)

    def __eq__(self, other):
        return isinstance(other, FockBasis) and self.tag == other.tag

    def __hash__(self):
        return hash(self.tag)


def build_basis(
    num_sites: int,
    max_per_site: int,
    total_number: int | None = None,
    *,
    where: Callable[[tuple[int, ...]], bool] | None = None,
    label: str | None = None,
) -> FockBasis:
    """Enumerate a capped Fock basis, optionally in a fixed-``N`` sector.

    Parameters
    ----------
    num_sites : int
        Number of bosonic modes ``M >= 1``.
    max_per_site : int
        Occupation cap ``n_max >= 0``; states above it are not represented.
    total_number : int, optional
        Restrict to states with ``sum(n) == total_number``.
    where : callable, optional
        Extra predicate on occupation tuples (e.g. per-species numbers).
    """
    if num_sites < 1:
        raise ValueError(f"num_sites must be >= 1, got {num_sites}")
    if max_per_site < 0:
        raise ValueError(f"max_per_site must be >= 0, got {max_per_site}")
    if total_number is not None:
        if total_number < 0:
            raise ValueError(f"total_number must be >= 0, got {total_number}")
        if total_number > num_sites * max_per_site:
            raise InfeasibleSectorError(
                f"N={total_number} cannot be placed on {num_sites} sites with cap {max_per_site}"
            )
        states = _compositions(num_sites, max_per_site, total_number)
    else:
        states = itertools.product(range(max_per_site + 1), repeat=num_sites)
    if where is not None:
        states = (s for s in states if where(s))
    occ = np.array(list(states), dtype=np.int64).reshape(-1, num_sites)
    if occ.shape[0] == 0:
        raise InfeasibleSectorError("no Fock state satisfies the basis constraints")
    return FockBasis(num_sites, max_per_site, total_number, occ, label)


def sector_size(num_sites: int, total_number: int) -> int:
    """Stars-and-bars count of an uncapped fixed-N sector."""
    return comb(total_number + num_sites - 1, num_sites - 1)


def rank(basis: FockBasis, occupation: Sequence[int]) -> int:
    try:
        return basis.index_of[tuple(int(x) for x in occupation)]
    except KeyError:
        raise BasisLookupError(f"{tuple(occupation)} is not in the basis") from None


def unrank(basis: FockBasis, index: int) -> tuple[int, ...]:
    if not 0 <= index < len(basis):
        raise BasisLookupError(f"index {index} out of range for basis of size {len(basis)}")
    return basis.states[index]
