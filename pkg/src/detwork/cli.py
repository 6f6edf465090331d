"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 invalid spectrum,
3 resource guard, 4 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .approx import bounded_fluctuation_protocol, plan_bounded_fluctuation
from .bounds import bounds_report, gibbs_filtered_state, lcm_plan, lower_bounds
from .errors import (
    DetworkError,
    InvariantViolation,
    ResourceGuardError,
    SpectrumError,
)
from .figures import Table, figure_data
from .formatting import csv_text, emit, fmt_decimal, fmt_rational, kv_text
from .protocol import (
    ProtocolTable,
    build_protocol,
    lcm_protocol,
    simulate_tpm,
    tensor_power_state,
    uniform_state,
    verify_protocol,
)
from .rate import max_det_shift, rate_sweep
from .shellcount import shell_counts
from .spectrum import SpectrumSpec, parse_energy, parse_spectrum, to_lattice

__all__ = ["RunConfig", "run", "main", "build_parser", "figure_data"]

EXIT_OK, EXIT_USAGE, EXIT_SPECTRUM, EXIT_GUARD, EXIT_INVARIANT = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    spectrum: str | None = None
    output: str | None = None
    options: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _n_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}")
    a = int(m.group(1))
    b = int(m.group(2)) if m.group(2) else a
    if not 1 <= a <= b:
        raise argparse.ArgumentTypeError(f"need 1 <= A <= B, got {text!r}")
    return a, b


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _energy(text: str) -> Fraction:
    try:
        return parse_energy(text)
    except SpectrumError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="detwork", description="Exact rates and protocols for deterministic work extraction.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, spectrum=True):
        if spectrum:
            sp.add_argument("--spectrum", required=True, help="spectrum JSON file")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    sp = sub.add_parser("rate", help="finite-n rates as CSV")
    common(sp)
    sp.add_argument("--n-range", type=_n_range, default=(1, 12), help="N or A..B (default 1..12)")

    sp = sub.add_parser("counts", help="shell counts as CSV")
    common(sp)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--weight", choices=("full", "occupied"), default="full")

    sp = sub.add_parser("bounds", help="analytic bounds as key/value text")
    common(sp)
    sp.add_argument("--n", type=_positive_int, default=None, help="also report the finite-n lower bound")

    sp = sub.add_parser("protocol", help="build a protocol file")
    common(sp)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=_positive_int, help="number of copies")
    group.add_argument("--lcm", action="store_true", help="use the lcm construction")
    sp.add_argument("--shift", type=int, default=None, help="lattice shift (default: maximal)")
    sp.add_argument("--emit-mapping", action="store_true", help="include the explicit basis map")

    sp = sub.add_parser("simulate", help="two-point-measurement work law of a protocol")
    common(sp)
    sp.add_argument("--protocol", required=True, help="protocol JSON file with an explicit map")
    sp.add_argument("--beta", type=float, default=None, help="Gibbs-filtered input (default: uniform)")

    sp = sub.add_parser("approx", help="bounded-fluctuation plan and band report")
    common(sp)
    sp.add_argument("--delta", type=_energy, required=True)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--confidence", type=float, default=0.5, help="c in [0, 1)")
    sp.add_argument("--ground", choices=("lifted", "pinned"), default="lifted")
    sp.add_argument("--protocol-out", default=None, help="also write the protocol file here")
    sp.add_argument("--emit-mapping", action="store_true")

    sp = sub.add_parser("figure", help="figure data tables as CSV")
    fig = sp.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    f = fig.add_parser("r100")
    common(f, spectrum=False)
    f.add_argument("--eps2-from", type=_energy, default=Fraction("1.1"))
    f.add_argument("--eps2-to", type=_energy, default=Fraction(3))
    f.add_argument("--step", type=_energy, default=Fraction("0.1"))
    f.add_argument("--n", type=_positive_int, default=100)
    f = fig.add_parser("rates_vs_n")
    common(f)
    f.add_argument("--n-max", type=_positive_int, default=30)
    f = fig.add_parser("gaussians")
    common(f)
    f.add_argument("--n", type=_positive_int, default=20)
    return p


def _load_spectrum(path: str) -> SpectrumSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpectrumError(f"cannot read spectrum file: {exc}") from exc
    return parse_spectrum(text)


def _rate_csv(s: SpectrumSpec, n_from: int, n_to: int) -> str:
    rows = [
        (r.n, r.shift, fmt_rational(r.work_total), fmt_rational(r.rate), fmt_decimal(r.rate))
        for r in rate_sweep(s, n_from, n_to)
    ]
    return csv_text(("n", "shift", "work_total", "rate", "rate_decimal"), rows)


def _both(x) -> tuple[str, str]:
    if x is None:
        return "", ""
    if isinstance(x, Fraction):
        return fmt_rational(x), fmt_decimal(x)
    return fmt_decimal(x), fmt_decimal(x)


def _bounds_kv(s: SpectrumSpec, n: int | None) -> str:
    rep = bounds_report(s)
    pairs = [("label", s.label or ""), ("ground_shift", fmt_rational(s.shift))]
    for key, value in (
        ("eps_min_bound", rep.eps_min_bound),
        ("lcm_lower", rep.lcm_lower),
        ("harmonic_lower", rep.harmonic_lower),
    ):
        exact, dec = _both(value)
        pairs += [(key, exact), (key + "_decimal", dec)]
    if rep.lcm_lower is not None:
        ls = to_lattice(s)
        lp = lcm_plan(ls)
        pairs += [("M_S", lp.M_S), ("K_S", lp.K_S), ("lcm_n", lp.n), ("e_frak", fmt_rational(lp.e_frak))]
        if n is not None:
            exact, dec = _both(lower_bounds(ls, n).finite_n_lower)
            pairs += [("finite_n", n), ("finite_n_lower", exact), ("finite_n_lower_decimal", dec)]
    pairs += [
        ("ergotropy_bound", fmt_decimal(rep.ergotropy_bound)),
        ("beta_hat", fmt_decimal(rep.beta_hat)),
        ("clt_estimate", fmt_decimal(rep.clt_estimate)),
    ]
    pairs += [(f"note.{k}", note) for k, note in enumerate(rep.notes)]
    return kv_text(pairs)


def _protocol_json(pt: ProtocolTable) -> str:
    """Canonical protocol file: one shell transition or map row per line."""
    doc = pt.to_dict()
    rows = doc.pop("explicit_map", None)
    plan = doc.pop("shell_plan")
    head = json.dumps(doc, sort_keys=True)[1:-1]
    parts = ["{" + head + ","]
    parts.append('"shell_plan":[')
    parts.append(",\n".join(json.dumps(e, sort_keys=True) for e in plan))
    if rows is None:
        parts.append("]}")
    else:
        parts.append('],\n"explicit_map":[')
        parts.append(",\n".join(json.dumps(r, separators=(",", ":")) for r in rows))
        parts.append("]}")
    return "\n".join(parts) + "\n"


def _protocol(s: SpectrumSpec, opts: dict) -> str:
    ls = to_lattice(s)
    emit_map = opts.get("emit_mapping", False)
    if opts.get("lcm"):
        _, pt = lcm_protocol(ls, emit_explicit=emit_map)
        if not emit_map and pt.explicit_map is not None:
            pt = ProtocolTable(pt.n, pt.shift, pt.lattice, pt.shell_plan, None, pt.note)
    else:
        n = opts["n"]
        shift = opts.get("shift")
        if shift is None:
            shift = max_det_shift(ls, n)
        pt = build_protocol(ls, n, shift, emit_map)
    summary = verify_protocol(pt, s)
    if not summary.deterministic or summary.w_min != pt.work:
        raise InvariantViolation("constructed protocol failed verification")
    return _protocol_json(pt)


def _simulate(s: SpectrumSpec, opts: dict) -> str:
    with open(opts["protocol"], encoding="utf-8") as fh:
        pt = ProtocolTable.from_dict(json.load(fh))
    base = uniform_state(s) if opts.get("beta") is None else gibbs_filtered_state(s, opts["beta"])
    state = tensor_power_state(base, pt.n)
    dist = simulate_tpm(state, pt, s)
    pairs = [
        ("n", pt.n),
        ("deterministic", str(dist.deterministic).lower()),
        ("mean", fmt_decimal(dist.mean)),
        ("variance", fmt_decimal(dist.variance)),
        ("atoms", len(dist.atoms)),
    ]
    for k, (w, p) in enumerate(dist.atoms):
        pairs.append((f"atom.{k}", f"{fmt_rational(w)} {fmt_decimal(p)}"))
    return kv_text(pairs)


def _approx(s: SpectrumSpec, opts: dict) -> tuple[str, str | None]:
    plan = plan_bounded_fluctuation(s, opts["delta"], opts["confidence"], opts["ground"])
    emit_map = True if opts.get("emit_mapping") else None
    pt, summ = bounded_fluctuation_protocol(plan, opts["n"], emit_explicit=emit_map)
    band = summ.band
    pairs = [
        ("delta", fmt_rational(plan.delta)),
        ("ground", plan.ground),
        ("d_star", plan.d_star),
        ("unit", fmt_rational(plan.unit)),
        ("snapped_m", " ".join(map(str, plan.snapped.m))),
        ("max_snap_error", fmt_decimal(plan.max_snap_error())),
        ("e_frak", fmt_decimal(plan.e_frak)),
        ("A_const", fmt_decimal(plan.A_const)),
        ("n_min", fmt_decimal(plan.n_min)),
        ("w_target", fmt_decimal(plan.w_target)),
        ("n", summ.n),
        ("shift", summ.shift),
        ("positive_shift", str(summ.positive).lower()),
        ("w_prime", fmt_rational(summ.w_prime)),
        ("w_prime_decimal", fmt_decimal(summ.w_prime)),
        ("band_method", band.method),
        ("band_passed", str(band.passed).lower()),
        ("w_min", fmt_decimal(band.w_min)),
        ("w_max", fmt_decimal(band.w_max)),
        ("spread", fmt_decimal(band.spread)),
        ("band_2delta_margin", fmt_decimal(band.margin)),
        ("band_4delta", fmt_decimal(plan.band)),
    ]
    if band.mean is not None:
        pairs.append(("mean_uniform", fmt_decimal(band.mean)))
    pairs += [(f"warning.{k}", w) for k, w in enumerate(plan.warnings)]
    proto = None
    if opts.get("protocol_out"):
        if not opts.get("emit_mapping") and pt.explicit_map is not None:
            pt = ProtocolTable(pt.n, pt.shift, pt.lattice, pt.shell_plan, None, pt.note)
        proto = _protocol_json(pt)
    return kv_text(pairs), proto


def _figure(cfg: RunConfig) -> Table:
    opts = cfg.options
    kind = opts["kind"]
    if kind == "r100":
        return figure_data("r100", eps2_from=opts["eps2_from"], eps2_to=opts["eps2_to"], step=opts["step"], n=opts["n"])
    s = _load_spectrum(cfg.spectrum)
    if kind == "rates_vs_n":
        return figure_data("rates_vs_n", spectrum=s, n_max=opts["n_max"])
    return figure_data("gaussians", spectrum=s, n=opts["n"])


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the process exit status."""
    try:
        opts = cfg.options
        if cfg.subcommand == "figure":
            emit(_figure(cfg).to_csv(), cfg.output)
            return EXIT_OK
        s = _load_spectrum(cfg.spectrum)
        if cfg.subcommand == "rate":
            text = _rate_csv(s, *opts["n_range"])
        elif cfg.subcommand == "counts":
            counts = shell_counts(to_lattice(s), opts["n"], opts["weight"])
            text = csv_text(("t", "count"), ((t, str(c)) for t, c in counts.nonzero()))
        elif cfg.subcommand == "bounds":
            text = _bounds_kv(s, opts.get("n"))
        elif cfg.subcommand == "protocol":
            text = _protocol(s, opts)
        elif cfg.subcommand == "simulate":
            text = _simulate(s, opts)
        elif cfg.subcommand == "approx":
            text, proto = _approx(s, opts)
            if proto is not None:
                emit(proto, opts["protocol_out"])
        else:
            raise UsageError(f"unknown subcommand {cfg.subcommand!r}")
        emit(text, cfg.output)
        return EXIT_OK
    except SpectrumError as exc:
        _report(exc)
        return EXIT_SPECTRUM
    except ResourceGuardError as exc:
        _report(exc)
        return EXIT_GUARD
    except InvariantViolation as exc:
        _report(exc)
        return EXIT_INVARIANT
    except (UsageError, DetworkError, OSError, ValueError, KeyError) as exc:
        _report(exc)
        return EXIT_USAGE


def _report(exc: BaseException) -> None:
    print(f"detwork: error: {exc}", file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _report(exc)
        return EXIT_USAGE
    opts = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "spectrum", "out")}
    if ns.subcommand == "protocol" and ns.lcm and ns.shift is not None:
        _report(UsageError("--shift cannot be combined with --lcm"))
        return EXIT_USAGE
    if ns.subcommand == "approx" and not 0 <= ns.confidence < 1:
        _report(UsageError("--confidence must lie in [0, 1)"))
        return EXIT_USAGE
    cfg = RunConfig(ns.subcommand, getattr(ns, "spectrum", None), ns.out, opts)
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
