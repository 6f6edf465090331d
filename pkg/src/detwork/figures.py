"""Tables behind the standard figures (data only, no rendering)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bounds import clt_estimate, ergotropy_upper_bound, gaussian_shell_density, lower_bounds
from .errors import CltInapplicableError, GroundOccupiedError
from .formatting import csv_text, fmt_decimal, fmt_rational
from .rate import rate_n
from .shellcount import shell_counts
from .spectrum import SpectrumSpec, normalize_ground, to_lattice

__all__ = ["Table", "figure_data", "r100_table", "rates_vs_n_table", "gaussians_table"]


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_csv(self) -> str:
        return csv_text(self.header, self.rows)


def _clt_or_blank(s: SpectrumSpec) -> str:
    try:
        return fmt_decimal(clt_estimate(s).value)
    except CltInapplicableError:
        return ""


def _grid(start: Fraction, stop: Fraction, step: Fraction) -> list[Fraction]:
    if step <= 0:
        raise ValueError("step must be positive")
    out = []
    k = 0
    while start + k * step <= stop:
        out.append(start + k * step)
        k += 1
    return out


def r100_table(eps2_from, eps2_to, step, n: int = 100) -> Table:
    """Rate at fixed n across eps2 for levels (0, 1, eps2), upper two occupied."""
    rows = []
    for eps2 in _grid(Fraction(eps2_from), Fraction(eps2_to), Fraction(step)):
        s = SpectrumSpec.build([0, 1, eps2], [1, 1, 1], [0, 1, 1])
        ls = to_lattice(s)
        r = rate_n(ls, n)
        floor_bound = lower_bounds(ls, n).finite_n_lower
        rows.append((
            fmt_rational(eps2),
            str(r.shift),
            fmt_rational(r.rate),
            fmt_decimal(r.rate),
            fmt_rational(floor_bound),
            fmt_decimal(ergotropy_upper_bound(s)),
            _clt_or_blank(s),
        ))
    header = ("eps2", "shift", "R_n", "R_n_decimal", "lcm_floor_lower", "upper_bound", "clt")
    return Table(header, tuple(rows))


def rates_vs_n_table(s: SpectrumSpec, n_max: int, n_min: int = 1) -> Table:
    s = normalize_ground(s)
    ls = to_lattice(s)
    try:
        lcm = fmt_rational(lower_bounds(ls).lcm_lower)
    except GroundOccupiedError:
        lcm = "0"
    upper = fmt_decimal(ergotropy_upper_bound(s))
    clt = _clt_or_blank(s)
    rows = []
    for n in range(n_min, n_max + 1):
        r = rate_n(ls, n)
        rows.append((str(n), fmt_rational(r.rate), fmt_decimal(r.rate), lcm, upper, clt))
    return Table(("n", "R_n", "R_n_decimal", "lcm_lower", "upper_bound", "clt"), tuple(rows))


def gaussians_table(s: SpectrumSpec, n: int) -> Table:
    """Exact shell counts against their Gaussian estimates at per-copy energy x.

    ``gaussian_per_shell`` rescales the density by the lattice spacing unit so
    it is directly comparable with a single shell count.
    """
    s = normalize_ground(s)
    ls = to_lattice(s)
    rows = []
    for which in ("full", "occupied"):
        counts = shell_counts(ls, n, which)
        for t, c in counts.nonzero():
            x = Fraction(t) * ls.unit / n
            g = gaussian_shell_density(s, n, float(x), which)
            rows.append((
                which, str(t), fmt_rational(x), fmt_decimal(x), str(c), fmt_decimal(g), fmt_decimal(g * float(ls.unit))
            ))
    header = ("which", "t", "x", "x_decimal", "exact_count", "gaussian_estimate", "gaussian_per_shell")
    return Table(header, tuple(rows))


def figure_data(kind: str, **params) -> Table:
    if kind == "r100":
        return r100_table(params["eps2_from"], params["eps2_to"], params["step"], params.get("n", 100))
    if kind == "rates_vs_n":
        return rates_vs_n_table(params["spectrum"], params["n_max"], params.get("n_min", 1))
    if kind == "gaussians":
        return gaussians_table(params["spectrum"], params["n"])
    raise ValueError(f"unknown figure kind {kind!r}")
