"""Exact energy spectra and their integer lattice form.

A spectrum is a list of distinct energy levels, each with a degeneracy and
the dimension of the occupied block inside that eigenspace.  Only those
dimensions matter for deterministic extraction, so the concrete sub-basis of
an occupied block is never stored.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import SpectrumError

__all__ = [
    "LevelSpec",
    "SpectrumSpec",
    "LatticeSpectrum",
    "parse_energy",
    "parse_spectrum",
    "spectrum_to_dict",
    "normalize_ground",
    "to_lattice",
    "eps_min",
    "dominates",
    "rational_gcd",
]


def parse_energy(value) -> Fraction:
    """Parse an energy exactly.

    Accepts ints, Fractions, decimal strings ("0.1", "-2.5e-1") and ratio
    strings ("2/3").  Floats go through their shortest repr, so ``0.1``
    becomes 1/10 rather than the binary expansion.
    """
    if isinstance(value, bool):
        raise SpectrumError(f"not an energy: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SpectrumError(f"non-finite energy: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpectrumError(f"cannot parse energy {value!r}") from exc
    raise SpectrumError(f"unsupported energy type {type(value).__name__}")


@dataclass(frozen=True)
class LevelSpec:
    energy: Fraction
    degeneracy: int = 1
    occupied: int = 0

    def __post_init__(self):
        object.__setattr__(self, "energy", parse_energy(self.energy))
        if not isinstance(self.degeneracy, int) or self.degeneracy < 1:
            raise SpectrumError(f"degeneracy must be a positive integer, got {self.degeneracy!r}")
        if not isinstance(self.occupied, int) or self.occupied < 0:
            raise SpectrumError(f"occupied must be a non-negative integer, got {self.occupied!r}")
        if self.occupied > self.degeneracy:
            raise SpectrumError(
                f"occupied dimension {self.occupied} exceeds degeneracy {self.degeneracy}"
            )


@dataclass(frozen=True)
class SpectrumSpec:
    """Validated spectrum.  ``shift`` is the energy removed by ground normalization."""

    levels: tuple[LevelSpec, ...]
    shift: Fraction = Fraction(0)
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "shift", parse_energy(self.shift))
        if not levels:
            raise SpectrumError("spectrum needs at least one level")
        for lo, hi in zip(levels, levels[1:]):
            if hi.energy <= lo.energy:
                raise SpectrumError(
                    f"energies must be strictly increasing ({lo.energy} then {hi.energy})"
                )
        if not any(lv.occupied for lv in levels):
            raise SpectrumError("occupied set is empty")

    @classmethod
    def build(
        cls,
        energies: Iterable,
        degeneracy: Sequence[int] | None = None,
        occupied: Sequence[int] | None = None,
        label: str | None = None,
    ) -> "SpectrumSpec":
        """Convenience constructor from parallel lists (not normalized)."""
        energies = [parse_energy(e) for e in energies]
        degeneracy = list(degeneracy) if degeneracy is not None else [1] * len(energies)
        occupied = list(occupied) if occupied is not None else list(degeneracy)
        if not len(energies) == len(degeneracy) == len(occupied):
            raise SpectrumError("energies, degeneracy and occupied must have equal length")
        return cls(
            tuple(LevelSpec(e, d, o) for e, d, o in zip(energies, degeneracy, occupied)),
            label=label,
        )

    @property
    def energies(self) -> tuple[Fraction, ...]:
        return tuple(lv.energy for lv in self.levels)

    @property
    def degeneracies(self) -> tuple[int, ...]:
        return tuple(lv.degeneracy for lv in self.levels)

    @property
    def occupied(self) -> tuple[int, ...]:
        return tuple(lv.occupied for lv in self.levels)

    @property
    def occupied_set(self) -> tuple[int, ...]:
        return tuple(i for i, lv in enumerate(self.levels) if lv.occupied > 0)

    @property
    def dimension(self) -> int:
        return sum(self.degeneracies)

    @property
    def occupied_dimension(self) -> int:
        return sum(self.occupied)

    @property
    def is_normalized(self) -> bool:
        return self.levels[0].energy == 0

    @property
    def full_support(self) -> bool:
        return self.occupied == self.degeneracies

    def with_occupied(self, occupied: Sequence[int]) -> "SpectrumSpec":
        if len(occupied) != len(self.levels):
            raise SpectrumError("occupied vector length mismatch")
        levels = tuple(LevelSpec(lv.energy, lv.degeneracy, o) for lv, o in zip(self.levels, occupied))
        return SpectrumSpec(levels, self.shift, self.label)


@dataclass(frozen=True)
class LatticeSpectrum:
    """Spectrum written as ``unit * m[i]`` with non-negative integers ``m``."""

    unit: Fraction
    m: tuple[int, ...]
    degeneracy: tuple[int, ...]
    occupied: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "unit", parse_energy(self.unit))
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "degeneracy", tuple(int(x) for x in self.degeneracy))
        object.__setattr__(self, "occupied", tuple(int(x) for x in self.occupied))
        if self.unit <= 0:
            raise SpectrumError("lattice unit must be positive")
        if not len(self.m) == len(self.degeneracy) == len(self.occupied):
            raise SpectrumError("lattice vectors have different lengths")
        if not self.m or self.m[0] < 0:
            raise SpectrumError("lattice positions must be non-negative")
        if any(b <= a for a, b in zip(self.m, self.m[1:])):
            raise SpectrumError("lattice positions must be strictly increasing")
        for d, o in zip(self.degeneracy, self.occupied):
            if d < 1 or not 0 <= o <= d:
                raise SpectrumError("invalid degeneracy/occupied pair on lattice")
        if not any(self.occupied):
            raise SpectrumError("occupied set is empty")

    @property
    def energies(self) -> tuple[Fraction, ...]:
        return tuple(self.unit * k for k in self.m)

    @property
    def occupied_set(self) -> tuple[int, ...]:
        return tuple(i for i, o in enumerate(self.occupied) if o > 0)

    @property
    def m_max(self) -> int:
        return self.m[-1]

    def to_spectrum(self) -> SpectrumSpec:
        return SpectrumSpec.build(self.energies, self.degeneracy, self.occupied)


def parse_spectrum(text: str) -> SpectrumSpec:
    """Read the JSON spectrum format and return a ground-normalized spectrum.

    Expected shape::

        {"label": "optional", "levels": [
            {"energy": "0", "degeneracy": 1, "occupied": 0}, ...]}

    JSON numbers are read as exact decimals, never as binary floats.
    """
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise SpectrumError(f"malformed spectrum file: {exc}") from exc
    if not isinstance(doc, dict) or "levels" not in doc:
        raise SpectrumError("spectrum file must be an object with a 'levels' array")
    raw_levels = doc["levels"]
    if not isinstance(raw_levels, list):
        raise SpectrumError("'levels' must be an array")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise SpectrumError("'label' must be a string")
    levels = []
    for k, entry in enumerate(raw_levels):
        if not isinstance(entry, dict) or "energy" not in entry:
            raise SpectrumError(f"level {k} must be an object with an 'energy' field")
        unknown = set(entry) - {"energy", "degeneracy", "occupied"}
        if unknown:
            raise SpectrumError(f"level {k} has unknown fields {sorted(unknown)}")
        deg = entry.get("degeneracy", 1)
        occ = entry.get("occupied", 0)
        if isinstance(deg, bool) or not isinstance(deg, int):
            raise SpectrumError(f"level {k}: degeneracy must be an integer")
        if isinstance(occ, bool) or not isinstance(occ, int):
            raise SpectrumError(f"level {k}: occupied must be an integer")
        levels.append(LevelSpec(parse_energy(entry["energy"]), deg, occ))
    return normalize_ground(SpectrumSpec(tuple(levels), label=label))


def spectrum_to_dict(s: SpectrumSpec) -> dict:
    """Inverse of :func:`parse_spectrum` (energies include any recorded shift)."""
    doc = {
        "levels": [
            {"energy": str(lv.energy + s.shift), "degeneracy": lv.degeneracy, "occupied": lv.occupied}
            for lv in s.levels
        ]
    }
    if s.label is not None:
        doc["label"] = s.label
    return doc


def normalize_ground(s: SpectrumSpec) -> SpectrumSpec:
    """Shift energies so the ground level sits at zero; the shift accumulates."""
    e0 = s.levels[0].energy
    if e0 == 0:
        return s
    levels = tuple(LevelSpec(lv.energy - e0, lv.degeneracy, lv.occupied) for lv in s.levels)
    return SpectrumSpec(levels, s.shift + e0, s.label)


def rational_gcd(values: Iterable[Fraction]) -> Fraction:
    """Largest positive rational g with every value an integer multiple of g.

    Zeros are ignored; returns 0 when all values are zero.
    """
    vals = [Fraction(v) for v in values if v != 0]
    if not vals:
        return Fraction(0)
    den = math.lcm(*(v.denominator for v in vals))
    num = math.gcd(*(v.numerator * (den // v.denominator) for v in vals))
    return Fraction(num, den)


def to_lattice(s: SpectrumSpec) -> LatticeSpectrum:
    if not s.is_normalized:
        raise SpectrumError("to_lattice needs a ground-normalized spectrum")
    unit = rational_gcd(s.energies) or Fraction(1)
    m = tuple(int(e / unit) for e in s.energies)
    return LatticeSpectrum(unit, m, s.degeneracies, s.occupied)


def eps_min(s: SpectrumSpec) -> Fraction:
    return min(s.levels[i].energy for i in s.occupied_set)


def dominates(a: SpectrumSpec, b: SpectrumSpec) -> bool:
    """True when the support of ``a`` fits inside that of ``b`` level by level."""
    if a.energies != b.energies or a.degeneracies != b.degeneracies:
        raise SpectrumError("dominates() needs spectra with identical levels and degeneracies")
    return all(x <= y for x, y in zip(a.occupied, b.occupied))
