"""Analytic bounds and estimates for the deterministic work rate.

Exact quantities (lcm constants, lower bounds, diagonal ergotropy on exact
inputs) use Fractions.  Thermodynamic quantities of Gibbs-filtered states
use double precision and natural logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import (
    CltInapplicableError,
    FullSupportError,
    GroundOccupiedError,
    NoSignChangeError,
    SpectrumError,
)
from .protocol import DiagonalState
from .spectrum import LatticeSpectrum, SpectrumSpec, eps_min, normalize_ground

__all__ = [
    "LcmPlan",
    "LowerBounds",
    "SpectrumMoments",
    "CltEstimate",
    "BoundsReport",
    "lcm_plan",
    "lower_bounds",
    "harmonic_lower",
    "ergotropy_diagonal",
    "gibbs_filtered_state",
    "thermo_curves",
    "entropy_gap",
    "find_beta_roots",
    "solve_beta_star",
    "passive_energy_at_entropy",
    "total_ergotropy",
    "ergotropy_upper_bound",
    "spectrum_moments",
    "clt_estimate",
    "gaussian_shell_density",
    "bounds_report",
]

BETA_GRID = tuple(1e-4 * 2.0**k for k in range(24)) + (1e3,)


# ---------------------------------------------------------------- lcm bounds


@dataclass(frozen=True)
class LcmPlan:
    M_S: int
    K_i: Mapping[int, int]
    K_S: int
    e_frak: Fraction

    @property
    def n(self) -> int:
        return self.K_S + 1


def _require_empty_ground(ls: LatticeSpectrum) -> None:
    if ls.occupied[0] or ls.m[0] != 0:
        raise GroundOccupiedError("construction needs an unoccupied ground level at energy 0")


def lcm_plan(ls: LatticeSpectrum) -> LcmPlan:
    _require_empty_ground(ls)
    S = ls.occupied_set
    M = math.lcm(*(ls.m[i] for i in S))
    K = {i: M // ls.m[i] + ls.occupied[i] - 1 for i in S}
    K_S = sum(ls.occupied[i] * (K[i] - 1) for i in S)
    e_frak = 1 / sum(Fraction(ls.occupied[i]) / (ls.unit * ls.m[i]) for i in S)
    return LcmPlan(M, K, K_S, e_frak)


@dataclass(frozen=True)
class LowerBounds:
    lcm_lower: Fraction
    harmonic_lower: Fraction | None
    finite_n_lower: Fraction | None


def harmonic_lower(ls: LatticeSpectrum) -> Fraction:
    """(sum over occupied levels of 1/eps_i)^-1; only for non-degenerate blocks."""
    _require_empty_ground(ls)
    S = ls.occupied_set
    if any(ls.occupied[i] != 1 for i in S):
        raise SpectrumError("harmonic bound needs every occupied block to be one-dimensional")
    return 1 / sum(1 / (ls.unit * ls.m[i]) for i in S)


def lower_bounds(ls: LatticeSpectrum, n: int | None = None) -> LowerBounds:
    lp = lcm_plan(ls)
    per_block = lp.M_S * ls.unit
    lcm_lower = per_block / (lp.K_S + 1)
    try:
        harmonic = harmonic_lower(ls)
    except SpectrumError:
        harmonic = None
    finite = None
    if n is not None:
        if n < 1:
            raise ValueError("n must be positive")
        # repeating the construction on disjoint blocks; zero when n <= K_S
        finite = (n // (lp.K_S + 1)) * per_block / n
    return LowerBounds(lcm_lower, harmonic, finite)


# ---------------------------------------------------------------- ergotropy


def _basis_energies(s: SpectrumSpec) -> list[Fraction]:
    return [lv.energy for lv in s.levels for _ in range(lv.degeneracy)]


def ergotropy_diagonal(level_pops: Mapping[int, object], s: SpectrumSpec):
    """Mean energy minus the energy of the passive rearrangement.

    Each level's population is spread evenly over its occupied sublevels.
    Exact when the populations are Fractions.
    """
    total = sum(level_pops.values())
    exact = all(isinstance(p, (int, Fraction)) for p in level_pops.values())
    if any(p < 0 for p in level_pops.values()):
        raise ValueError("negative population")
    if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
        raise ValueError(f"populations sum to {total}, not 1")
    pops = []
    mean = 0
    for i, p in level_pops.items():
        if not p:
            continue
        if not 0 <= i < len(s.levels) or s.levels[i].occupied == 0:
            raise ValueError(f"population on level {i}, which has no occupied sublevels")
        d = s.levels[i].occupied
        pops.extend([p / d] * d)
        mean += p * s.levels[i].energy
    pops.sort(reverse=True)
    energies = _basis_energies(s)
    passive = sum(p * e for p, e in zip(pops, energies))
    return mean - passive


# ---------------------------------------------------------------- Gibbs states


def _weights(s: SpectrumSpec, filtered: bool):
    e = np.array([float(lv.energy) for lv in s.levels])
    w = np.array([lv.occupied if filtered else lv.degeneracy for lv in s.levels], dtype=float)
    keep = w > 0
    return e[keep], w[keep]


def _log_thermo(s: SpectrumSpec, beta: float, filtered: bool) -> tuple[float, float, float]:
    """(log Z, E, S) with energies measured from the lowest weighted level to avoid cancellation."""
    e, w = _weights(s, filtered)
    base = e.min()
    x = -beta * (e - base)
    log_z_shift = logsumexp(x, b=w)
    p = w * np.exp(x - log_z_shift)
    excess = float(np.dot(p, e - base))
    entropy = beta * excess + log_z_shift
    return log_z_shift - beta * base, base + excess, float(entropy)


def thermo_curves(s: SpectrumSpec, beta: float, filtered: bool) -> tuple[float, float, float]:
    """Return (Z, E, S), where S = beta*E + ln Z."""
    log_z, energy, entropy = _log_thermo(s, beta, filtered)
    return math.exp(log_z), energy, entropy


def gibbs_filtered_state(s: SpectrumSpec, beta: float) -> DiagonalState:
    """Thermal populations restricted to the occupied sublevels."""
    if beta < 0 or not math.isfinite(beta):
        raise ValueError("beta must be finite and non-negative")
    states = [(i, k) for i, lv in enumerate(s.levels) for k in range(lv.occupied)]
    if beta == 0:
        p = Fraction(1, len(states))
        return DiagonalState({(st,): p for st in states})
    base = float(eps_min(s))
    raw = [math.exp(-beta * (float(s.levels[i].energy) - base)) for i, _ in states]
    total = math.fsum(raw)
    return DiagonalState({(st,): r / total for st, r in zip(states, raw)})


def entropy_gap(s: SpectrumSpec, beta: float) -> float:
    """S of the filtered Gibbs state minus S of the full Gibbs state."""
    return _log_thermo(s, beta, True)[2] - _log_thermo(s, beta, False)[2]


def _check_support(s: SpectrumSpec) -> SpectrumSpec:
    s = normalize_ground(s)
    if s.full_support:
        raise FullSupportError("occupied support is the whole space; the bound is 0")
    return s


def find_beta_roots(s: SpectrumSpec, grid=BETA_GRID, xtol: float = 1e-12) -> list[float]:
    """All sign changes of the entropy gap on the grid, refined by Brent's method."""
    s = _check_support(s)
    betas = (0.0,) + tuple(grid)
    values = [entropy_gap(s, b) for b in betas]
    roots = []
    for (b0, f0), (b1, f1) in zip(zip(betas, values), zip(betas[1:], values[1:])):
        if f0 == 0 or f1 == 0:
            # exact zeros only appear once both entropies have underflowed
            continue
        if (f0 < 0) != (f1 < 0):
            roots.append(brentq(lambda b: entropy_gap(s, b), b0, b1, xtol=xtol, rtol=4 * np.finfo(float).eps))
    if not roots:
        raise NoSignChangeError(
            "entropy gap does not change sign on the scan grid",
            {"beta": list(betas), "gap": values},
        )
    return roots


def solve_beta_star(s: SpectrumSpec) -> float:
    """Fixed point where filtered and full Gibbs entropies coincide.

    With several roots, returns the one minimizing E_A - E_0.
    """
    s = _check_support(s)
    roots = find_beta_roots(s)
    return min(roots, key=lambda b: _log_thermo(s, b, True)[1] - _log_thermo(s, b, False)[1])


def passive_energy_at_entropy(s: SpectrumSpec, entropy: float) -> float:
    """Lowest energy over states of the full space with the given entropy.

    This is the full Gibbs state at that entropy, or 0 when the ground
    eigenspace alone can carry it.
    """
    s = normalize_ground(s)
    d0 = s.levels[0].degeneracy
    if entropy <= math.log(d0) + 1e-15:
        return 0.0
    top = math.log(s.dimension)
    if entropy >= top:
        return _log_thermo(s, 0.0, False)[1]

    def gap(b):
        return _log_thermo(s, b, False)[2] - entropy

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2
        if hi > 1e8:
            return 0.0
    beta = brentq(gap, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return _log_thermo(s, beta, False)[1]


def total_ergotropy(s: SpectrumSpec, beta: float) -> float:
    """Total ergotropy of the filtered Gibbs state at inverse temperature beta."""
    s = normalize_ground(s)
    _, energy, entropy = _log_thermo(s, beta, True)
    return energy - passive_energy_at_entropy(s, entropy)


def _large_beta_limit(s: SpectrumSpec) -> float:
    low = s.levels[min(s.occupied_set)]
    return float(low.energy) - passive_energy_at_entropy(s, math.log(low.occupied))


def ergotropy_upper_bound(s: SpectrumSpec) -> float:
    """Minimum total ergotropy over Gibbs-filtered states.

    The minimum sits at an entropy-matching root or, when the total ergotropy
    keeps decreasing, in the zero-temperature limit.  Full support gives 0.
    """
    s = normalize_ground(s)
    if s.full_support:
        return 0.0
    candidates = [_large_beta_limit(s)]
    try:
        for b in find_beta_roots(s):
            candidates.append(_log_thermo(s, b, True)[1] - _log_thermo(s, b, False)[1])
    except NoSignChangeError:
        pass
    return min(candidates)


# ---------------------------------------------------------------- CLT estimate


@dataclass(frozen=True)
class SpectrumMoments:
    mu0: float
    sigma0_sq: float
    mu_plus: float
    sigma_plus_sq: float
    dim: int
    occupied_dim: int


@dataclass(frozen=True)
class CltEstimate:
    value: float
    moments: SpectrumMoments
    note: str | None = None


def spectrum_moments(s: SpectrumSpec) -> SpectrumMoments:
    """Degeneracy-weighted mean and variance over the full and occupied spaces."""
    s = normalize_ground(s)

    def stats(weights):
        total = sum(weights)
        mean = sum(Fraction(w) * lv.energy for w, lv in zip(weights, s.levels)) / total
        second = sum(Fraction(w) * lv.energy**2 for w, lv in zip(weights, s.levels)) / total
        return mean, second - mean**2

    mu0, var0 = stats(s.degeneracies)
    mup, varp = stats(s.occupied)
    return SpectrumMoments(float(mu0), float(var0), float(mup), float(varp), s.dimension, s.occupied_dimension)


def clt_estimate(s: SpectrumSpec) -> CltEstimate:
    """Gaussian estimate of the asymptotic rate from the first two moments."""
    mo = spectrum_moments(s)
    if mo.occupied_dim == mo.dim:
        return CltEstimate(0.0, mo, note="full support: estimate degenerates to 0")
    if mo.sigma0_sq <= mo.sigma_plus_sq:
        raise CltInapplicableError(
            f"full variance {mo.sigma0_sq} does not exceed occupied variance {mo.sigma_plus_sq}"
        )
    value = mo.mu_plus - mo.mu0 + math.sqrt(2 * (mo.sigma0_sq - mo.sigma_plus_sq)) * math.sqrt(
        math.log(mo.dim / mo.occupied_dim)
    )
    return CltEstimate(value, mo)


def gaussian_shell_density(s: SpectrumSpec, n: int, x: float, which: str = "full") -> float:
    """Gaussian approximation of the shell count at per-copy energy x."""
    if n < 1:
        raise ValueError("n must be positive")
    mo = spectrum_moments(s)
    if which == "full":
        d, mu, var = mo.dim, mo.mu0, mo.sigma0_sq
    elif which == "occupied":
        d, mu, var = mo.occupied_dim, mo.mu_plus, mo.sigma_plus_sq
    else:
        raise ValueError("which must be 'full' or 'occupied'")
    if var <= 0:
        raise ValueError("zero variance: the shell distribution is a point mass")
    return float(d) ** n / n * math.sqrt(n / (2 * math.pi * var)) * math.exp(-n * (x - mu) ** 2 / (2 * var))


# ---------------------------------------------------------------- report


@dataclass(frozen=True)
class BoundsReport:
    eps_min_bound: Fraction
    ergotropy_bound: float
    beta_hat: float | None
    lcm_lower: Fraction | None
    harmonic_lower: Fraction | None
    clt_estimate: float | None
    notes: tuple[str, ...] = field(default=())


def bounds_report(s: SpectrumSpec) -> BoundsReport:
    from .spectrum import to_lattice

    s = normalize_ground(s)
    notes = []
    beta_hat = None
    if s.full_support:
        notes.append("full support: upper bound is 0 and the fixed point is undefined")
    else:
        try:
            beta_hat = solve_beta_star(s)
        except NoSignChangeError:
            notes.append("no entropy crossing: upper bound is the zero-temperature limit")
    if any(s.levels[i].occupied > 1 for i in s.occupied_set):
        notes.append("degenerate occupied block: the Gibbs-filtered bound may not be the tightest")
    lcm = harmonic = None
    if s.levels[0].occupied == 0:
        lb = lower_bounds(to_lattice(s))
        lcm, harmonic = lb.lcm_lower, lb.harmonic_lower
    else:
        notes.append("ground occupied: every rate is 0")
    try:
        clt = clt_estimate(s)
        clt_value = clt.value
        if clt.note:
            notes.append(clt.note)
    except CltInapplicableError as exc:
        clt_value = None
        notes.append(f"CLT estimate not applicable: {exc}")
    return BoundsReport(
        eps_min(s), ergotropy_upper_bound(s), beta_hat, lcm, harmonic, clt_value, tuple(notes)
    )
