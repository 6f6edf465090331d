"""Bounded-fluctuation protocols for arbitrary spectra.

The true spectrum is snapped onto a fine lattice with unit delta/d*, every
level split into non-degenerate sublevels just above it.  A deterministic
protocol on the snapped spectrum moves every occupied string by the same
amount, and on the true spectrum each per-copy work value stays within
2*delta of that amount.

Two ground conventions are offered.  ``"lifted"`` applies the snapping
formula to the ground as well, so a rational spectrum whose energies sit on
the lattice keeps all of its gaps.  ``"pinned"`` keeps the ground at zero,
unsplit.

Energies are exact Fractions throughout, so decimal inputs such as
"1.41421356" are represented without rounding.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import GroundOccupiedError, ResourceGuardError, SpectrumError
from .protocol import EXPLICIT_LIMIT, ProtocolTable, build_protocol, identity_protocol
from .rate import max_det_shift
from .spectrum import LatticeSpectrum, SpectrumSpec, normalize_ground, parse_energy

__all__ = [
    "ApproxPlan",
    "BandReport",
    "FluctuationSummary",
    "snap_to_lattice",
    "plan_bounded_fluctuation",
    "bounded_fluctuation_protocol",
    "verify_band",
]

log = logging.getLogger(__name__)

# n_min above this is reported with a warning
N_MIN_WARN = 1e6


@dataclass(frozen=True)
class ApproxPlan:
    delta: Fraction
    d_star: int
    snapped: LatticeSpectrum
    origin: tuple[tuple[int, int], ...]  # snapped level -> (true level, sublevel)
    source: SpectrumSpec
    ground: str = "lifted"
    c: float | None = None
    e_frak: Fraction | None = None
    A_const: float | None = None
    n_min: float | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def unit(self) -> Fraction:
        return self.snapped.unit

    @property
    def band(self) -> Fraction:
        return 4 * self.delta

    @property
    def level_map(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.origin)

    @property
    def w_target(self) -> float | None:
        if self.c is None:
            return None
        return max(self.c * float(self.e_frak) - 2 * float(self.delta), 0.0)

    def snapped_energies(self) -> tuple[Fraction, ...]:
        return self.snapped.energies

    def max_snap_error(self) -> Fraction:
        true = self.source.energies
        return max(abs(e - true[i]) for e, (i, _) in zip(self.snapped.energies, self.origin))


GROUND_MODES = ("lifted", "pinned")


def snap_to_lattice(rs: SpectrumSpec, delta, ground: str = "lifted") -> ApproxPlan:
    """Snap to unit delta/d*; level i splits into m = floor(eps_i/unit) + j + 1.

    With ``ground="pinned"`` the ground keeps m = 0 and its full degeneracy.
    """
    if ground not in GROUND_MODES:
        raise ValueError(f"ground must be one of {GROUND_MODES}")
    rs = normalize_ground(rs)
    delta = parse_energy(delta)
    if delta <= 0:
        raise SpectrumError("delta must be positive")
    gaps = [b - a for a, b in zip(rs.energies, rs.energies[1:])]
    if gaps and delta >= min(gaps):
        raise SpectrumError(f"delta {delta} must be below the smallest gap {min(gaps)}")
    d_star = max(rs.degeneracies)
    unit = delta / d_star

    m, deg, occ, origin = [], [], [], []
    first = 0
    if ground == "pinned":
        g = rs.levels[0]
        m, deg, occ, origin = [0], [g.degeneracy], [g.occupied], [(0, 0)]
        first = 1
    for i, lv in enumerate(rs.levels[first:], start=first):
        base = math.floor(lv.energy / unit)
        for j in range(lv.degeneracy):
            m.append(base + j + 1)
            deg.append(1)
            occ.append(1 if j < lv.occupied else 0)
            origin.append((i, j))
    snapped = LatticeSpectrum(unit, tuple(m), tuple(deg), tuple(occ))
    return ApproxPlan(delta, d_star, snapped, tuple(origin), rs, ground)


def plan_bounded_fluctuation(rs: SpectrumSpec, delta, c: float, ground: str = "lifted") -> ApproxPlan:
    """Snap and attach the constants of the bounded-fluctuation guarantee."""
    if not 0 <= c < 1:
        raise ValueError("c must lie in [0, 1)")
    plan = snap_to_lattice(rs, delta, ground)
    rs = plan.source
    if rs.levels[0].occupied:
        raise GroundOccupiedError("ground level is occupied; no work can be extracted")
    S = rs.occupied_set
    e_frak = 1 / sum(Fraction(rs.levels[i].occupied) / rs.levels[i].energy for i in S)
    k = plan.d_star * len(S)
    eps_max = float(rs.energies[-1])
    warnings = []
    if c == 0:
        A = 0.0
        n_min = 0.0
    else:
        log_a = math.log(c / (1 - c)) + math.log(k) + (k - 1) * math.log(plan.d_star * eps_max + 1)
        log_n = log_a - (k - 1) * math.log(float(plan.delta))
        A = math.exp(log_a) if log_a < 700 else math.inf
        n_min = math.exp(log_n) if log_n < 700 else math.inf
        if n_min > N_MIN_WARN:
            msg = f"guaranteed copy count n_min = {n_min:.3e} is far beyond direct computation"
            warnings.append(msg)
            log.warning(msg)
    return ApproxPlan(
        plan.delta, plan.d_star, plan.snapped, plan.origin, rs, plan.ground, c, e_frak, A, n_min,
        tuple(warnings),
    )


@dataclass(frozen=True)
class BandReport:
    passed: bool
    w_prime: Fraction
    delta: Fraction
    w_min: Fraction
    w_max: Fraction
    mean: Fraction | None
    method: str
    offending: tuple = ()

    @property
    def spread(self) -> Fraction:
        return self.w_max - self.w_min

    @property
    def margin(self) -> Fraction:
        """Distance left before the 2*delta band would be crossed."""
        return 2 * self.delta - max(self.w_max - self.w_prime, self.w_prime - self.w_min)


def _string_energy(energies, string) -> Fraction:
    return sum((energies[i] for i, _ in string), Fraction(0))


def _energy_envelope(ls: LatticeSpectrum, true_e: Sequence[Fraction], n: int, occupied: bool):
    """Min and max true energy of n-copy strings at each lattice total."""
    levels = [
        (ls.m[l], true_e[l]) for l in range(len(ls.m)) if (ls.occupied[l] if occupied else ls.degeneracy[l])
    ]
    lo: dict[int, Fraction] = {0: Fraction(0)}
    hi: dict[int, Fraction] = {0: Fraction(0)}
    for _ in range(n):
        nlo: dict[int, Fraction] = {}
        nhi: dict[int, Fraction] = {}
        for t in lo:
            for mi, e in levels:
                u = t + mi
                a, b = lo[t] + e, hi[t] + e
                if u not in nlo or a < nlo[u]:
                    nlo[u] = a
                if u not in nhi or b > nhi[u]:
                    nhi[u] = b
        lo, hi = nlo, nhi
    return lo, hi


def verify_band(
    pt: ProtocolTable,
    rs: SpectrumSpec,
    W_prime,
    delta,
    level_map: Sequence[int] | None = None,
) -> BandReport:
    """Check every per-copy work value on the true spectrum lies in W' +/- 2*delta.

    With an explicit map each transition is evaluated exactly.  Otherwise the
    per-shell extremes of true input and output energy give a conservative
    envelope that contains every possible transition of the shell plan.
    """
    rs = normalize_ground(rs)
    W_prime = parse_energy(W_prime)
    delta = parse_energy(delta)
    if level_map is None:
        if len(rs.levels) != len(pt.lattice.m):
            raise SpectrumError("level_map is needed when the level counts differ")
        level_map = range(len(rs.levels))
    true_e = [rs.levels[i].energy for i in level_map]
    n = pt.n
    tol = 2 * delta

    if pt.explicit_map is not None:
        works = []
        offending = []
        for src, dst in pt.explicit_map:
            w = (_string_energy(true_e, src) - _string_energy(true_e, dst)) / n
            works.append(w)
            if abs(w - W_prime) > tol and len(offending) < 20:
                offending.append((src, dst, w))
        mean = sum(works, Fraction(0)) / len(works)
        passed = not offending and abs(mean - W_prime) <= tol
        return BandReport(passed, W_prime, delta, min(works), max(works), mean, "explicit", tuple(offending))

    in_lo, in_hi = _energy_envelope(pt.lattice, true_e, n, occupied=True)
    out_lo, out_hi = _energy_envelope(pt.lattice, true_e, n, occupied=False)
    w_min = w_max = None
    offending = []
    for tr in pt.shell_plan:
        if tr.target not in out_lo:
            raise SpectrumError(f"shell plan targets the empty shell {tr.target}")
        lo = (in_lo[tr.source] - out_hi[tr.target]) / n
        hi = (in_hi[tr.source] - out_lo[tr.target]) / n
        w_min = lo if w_min is None else min(w_min, lo)
        w_max = hi if w_max is None else max(w_max, hi)
        if (W_prime - lo > tol or hi - W_prime > tol) and len(offending) < 20:
            offending.append((tr.source, tr.target, lo, hi))
    # every transition lies in the band, so any mean does too
    passed = not offending
    return BandReport(passed, W_prime, delta, w_min, w_max, None, "shell envelope", tuple(offending))


@dataclass(frozen=True)
class FluctuationSummary:
    n: int
    shift: int
    w_prime: Fraction  # per copy, on the snapped spectrum
    positive: bool
    band: BandReport


def bounded_fluctuation_protocol(
    plan: ApproxPlan, n: int, emit_explicit: bool | None = None, limit: int = EXPLICIT_LIMIT
) -> tuple[ProtocolTable, FluctuationSummary]:
    """Best deterministic protocol on the snapped lattice, certified on the true spectrum.

    ``emit_explicit=None`` builds the explicit map whenever it fits the guard.
    When no positive shift exists the identity protocol is returned and the
    summary is flagged.
    """
    ls = plan.snapped
    if plan.source.levels[0].occupied:
        raise GroundOccupiedError("ground level is occupied; no work can be extracted")
    occupied_total = sum(ls.occupied) ** n
    if emit_explicit is None:
        emit_explicit = occupied_total <= limit
    elif emit_explicit and occupied_total > limit:
        raise ResourceGuardError(f"explicit map would have {occupied_total} rows (limit {limit})")
    shift = max_det_shift(ls, n)
    if shift == 0:
        pt = identity_protocol(ls, n, emit_explicit)
    else:
        pt = build_protocol(ls, n, shift, emit_explicit, limit)
    w_prime = pt.work / n
    report = verify_band(pt, plan.source, w_prime, plan.delta, plan.level_map)
    return pt, FluctuationSummary(n, shift, w_prime, shift > 0, report)
