"""Exact n-copy shell counts.

``shell_counts`` returns, for every total lattice energy t, the number of
n-copy basis states with that energy, either over the full space or over the
occupied subspace.  The counts are the coefficients of (sum_i w_i z^m_i)^n.

The power is taken with Kronecker substitution: the polynomial is packed into
a single Python integer with fixed-width slots wide enough that no carry can
cross a slot boundary, raised with the built-in ``pow`` and unpacked.  This is
exact and much faster than a schoolbook convolution loop.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal

from .errors import ResourceGuardError
from .spectrum import LatticeSpectrum

__all__ = [
    "ShellCountVector",
    "shell_counts",
    "naive_shell_counts",
    "weights",
    "ARRAY_LIMIT",
    "ENUMERATION_LIMIT",
]

Weight = Literal["full", "occupied"]

ARRAY_LIMIT = 10**7
ENUMERATION_LIMIT = 10**7
# packed integers larger than this many bits are refused (about 512 MB)
PACKED_BITS_LIMIT = 2**32


@dataclass(frozen=True)
class ShellCountVector:
    """Dense counts indexed by total lattice energy ``t`` in ``[0, n*m_max]``."""

    n: int
    counts: tuple[int, ...]

    def __getitem__(self, t: int) -> int:
        if 0 <= t < len(self.counts):
            return self.counts[t]
        return 0

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def support(self) -> range:
        """Smallest index range holding every non-zero entry."""
        nz = [t for t, c in enumerate(self.counts) if c]
        if not nz:
            return range(0)
        return range(nz[0], nz[-1] + 1)

    def nonzero(self) -> Iterator[tuple[int, int]]:
        for t, c in enumerate(self.counts):
            if c:
                yield t, c

    def as_dict(self) -> dict[int, int]:
        return dict(self.nonzero())


def weights(ls: LatticeSpectrum, weight: Weight) -> tuple[int, ...]:
    if weight == "full":
        return ls.degeneracy
    if weight == "occupied":
        return ls.occupied
    raise ValueError(f"weight must be 'full' or 'occupied', not {weight!r}")


def _check_array(ls: LatticeSpectrum, n: int, limit: int) -> int:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    length = n * ls.m_max + 1
    if length > limit:
        raise ResourceGuardError(
            f"shell array of length {length} exceeds limit {limit} (n={n}, m_max={ls.m_max})"
        )
    return length


def shell_counts(
    ls: LatticeSpectrum, n: int, weight: Weight = "full", limit: int = ARRAY_LIMIT
) -> ShellCountVector:
    """Coefficients of (sum_i w_i z^m_i)^n, with w = degeneracy or occupied dims."""
    _check_array(ls, n, limit)
    w = weights(ls, weight)
    return ShellCountVector(n, _power_coeffs(ls.m, w, n))


@lru_cache(maxsize=512)
def _power_coeffs(m: tuple[int, ...], w: tuple[int, ...], n: int) -> tuple[int, ...]:
    length = n * m[-1] + 1
    total = sum(w)
    if total == 0:
        return (0,) * length
    # every coefficient is at most total**n, so this slot width never overflows
    slot_bits = n * total.bit_length() + 1
    slot_bytes = (slot_bits + 7) // 8
    if length * slot_bytes * 8 > PACKED_BITS_LIMIT:
        raise ResourceGuardError(
            f"packed polynomial needs {length * slot_bytes * 8} bits (limit {PACKED_BITS_LIMIT})"
        )
    shift = 8 * slot_bytes
    base = 0
    for mi, wi in zip(m, w):
        if wi:
            base += wi << (shift * mi)
    raw = pow(base, n).to_bytes(length * slot_bytes, "little")
    return tuple(
        int.from_bytes(raw[k * slot_bytes:(k + 1) * slot_bytes], "little")
        for k in range(length)
    )


def naive_shell_counts(
    ls: LatticeSpectrum, n: int, weight: Weight = "full", limit: int = ENUMERATION_LIMIT
) -> ShellCountVector:
    """Reference implementation that enumerates every basis string."""
    length = _check_array(ls, n, ARRAY_LIMIT)
    w = weights(ls, weight)
    dim = sum(w)
    if dim**n > limit:
        raise ResourceGuardError(f"enumerating {dim}^{n} strings exceeds limit {limit}")
    # one entry per basis state, carrying its lattice energy
    states = [mi for mi, wi in zip(ls.m, w) for _ in range(wi)]
    tally = Counter(sum(combo) for combo in itertools.product(states, repeat=n))
    return ShellCountVector(n, tuple(tally.get(t, 0) for t in range(length)))
