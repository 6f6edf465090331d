"""Finite-size maximum deterministic work via the shell-capacity criterion.

A uniform downward shift of s lattice units is realizable on n copies exactly
when every occupied shell fits inside the full shell s units below it:
N_occ(t) <= N_full(t - s) for every t with N_occ(t) > 0.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResourceGuardError
from .shellcount import ARRAY_LIMIT, shell_counts
from .spectrum import LatticeSpectrum, SpectrumSpec, normalize_ground, to_lattice

__all__ = [
    "RateResult",
    "max_det_shift",
    "feasible_shift",
    "rate_n",
    "rate_sweep",
    "brute_force_mdew",
    "binomial_rate_2level",
    "BRUTE_FORCE_LIMIT",
]

BRUTE_FORCE_LIMIT = 10**5
# the full-space enumeration in the oracle gets its own, looser guard
BRUTE_FORCE_FULL_LIMIT = 10**6


@dataclass(frozen=True)
class RateResult:
    n: int
    shift: int
    unit: Fraction

    @property
    def work_total(self) -> Fraction:
        return self.shift * self.unit

    @property
    def rate(self) -> Fraction:
        return self.work_total / self.n


def _count_arrays(ls: LatticeSpectrum, n: int, limit: int):
    occ = np.array(shell_counts(ls, n, "occupied", limit).counts, dtype=object)
    full = np.array(shell_counts(ls, n, "full", limit).counts, dtype=object)
    return occ, full


def feasible_shift(ls: LatticeSpectrum, n: int, shift: int, limit: int = ARRAY_LIMIT) -> bool:
    """Check the shell-capacity criterion for one shift."""
    if shift < 0:
        return False
    occ, full = _count_arrays(ls, n, limit)
    ts = np.nonzero(occ)[0]
    if ts[0] - shift < 0:
        return False
    return bool(np.all(occ[ts] <= full[ts - shift]))


def max_det_shift(ls: LatticeSpectrum, n: int, limit: int = ARRAY_LIMIT) -> int:
    """Largest s >= 0 passing the shell-capacity criterion on n copies."""
    occ, full = _count_arrays(ls, n, limit)
    ts = np.nonzero(occ)[0]
    occ_t = occ[ts]
    # shells below the ground do not exist, so s <= lowest occupied total
    for s in range(int(ts[0]), 0, -1):
        if np.all(occ_t <= full[ts - s]):
            return s
    return 0


def _lattice(s: SpectrumSpec | LatticeSpectrum) -> LatticeSpectrum:
    if isinstance(s, LatticeSpectrum):
        return s
    return to_lattice(normalize_ground(s))


def rate_n(s: SpectrumSpec | LatticeSpectrum, n: int, limit: int = ARRAY_LIMIT) -> RateResult:
    ls = _lattice(s)
    return RateResult(n, max_det_shift(ls, n, limit), ls.unit)


def rate_sweep(
    s: SpectrumSpec | LatticeSpectrum, n_from: int, n_to: int, limit: int = ARRAY_LIMIT
) -> list[RateResult]:
    if not 1 <= n_from <= n_to:
        raise ValueError(f"need 1 <= n_from <= n_to, got {n_from}..{n_to}")
    ls = _lattice(s)
    return [rate_n(ls, n, limit) for n in range(n_from, n_to + 1)]


def brute_force_mdew(s: SpectrumSpec, n: int, limit: int = BRUTE_FORCE_LIMIT) -> RateResult:
    """Oracle: enumerate basis strings and test every candidate work value.

    Works directly with rational energies; the lattice is used only to
    express the answer as an integer shift.
    """
    s = normalize_ground(s)
    occ_dim = s.occupied_dimension
    if occ_dim**n > limit:
        raise ResourceGuardError(f"{occ_dim}^{n} occupied strings exceed limit {limit}")
    full_dim = s.dimension
    if full_dim**n > BRUTE_FORCE_FULL_LIMIT:
        raise ResourceGuardError(f"{full_dim}^{n} basis strings exceed limit {BRUTE_FORCE_FULL_LIMIT}")

    occ_states = [lv.energy for lv in s.levels for _ in range(lv.occupied)]
    full_states = [lv.energy for lv in s.levels for _ in range(lv.degeneracy)]
    occ = Counter(sum(c, Fraction(0)) for c in itertools.product(occ_states, repeat=n))
    full = Counter(sum(c, Fraction(0)) for c in itertools.product(full_states, repeat=n))

    candidates = sorted({a - b for a in occ for b in full if a >= b}, reverse=True)
    unit = to_lattice(s).unit
    for w in candidates:
        if all(cnt <= full.get(e - w, 0) for e, cnt in occ.items()):
            return RateResult(n, int(w / unit), unit)
    raise AssertionError("zero work is always feasible")


def binomial_rate_2level(d1: int, delta1: int, n: int) -> Fraction:
    """Closed-form rate (in units of the excited energy) for a two-level system.

    Ground non-degenerate and empty, excited level of degeneracy ``d1`` with an
    occupied block of dimension ``delta1``.  Returns the largest k/n with
    C(n, k) * d1**n >= d1**k * delta1**n.
    """
    if not 1 <= delta1 <= d1 or n < 1:
        raise ValueError("need 1 <= delta1 <= d1 and n >= 1")
    best = 0
    for k in range(n + 1):
        if math.comb(n, k) * d1**n >= d1**k * delta1**n:
            best = k
    return Fraction(best, n)
