"""Deterministic extraction protocols as basis-permutation tables.

A protocol on n copies shifts every occupied shell down by the same number
of lattice units.  It is stored as a shell plan (how many states leave each
shell) and, when small enough, as an explicit injection between basis
strings.  A basis string is a tuple of ``(level, sublevel)`` pairs.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import (
    GroundOccupiedError,
    InfeasibleShiftError,
    InvariantViolation,
    ProtocolError,
    ResourceGuardError,
)
from .rate import feasible_shift
from .shellcount import shell_counts
from .spectrum import LatticeSpectrum, SpectrumSpec, parse_energy

__all__ = [
    "BasisString",
    "ShellTransition",
    "ProtocolTable",
    "DiagonalState",
    "WorkDistribution",
    "WorkSupport",
    "build_protocol",
    "identity_protocol",
    "lcm_protocol",
    "verify_protocol",
    "simulate_tpm",
    "tensor_power_state",
    "uniform_state",
    "occupied_strings",
    "EXPLICIT_LIMIT",
]

EXPLICIT_LIMIT = 10**6
STATE_LIMIT = 10**6

BasisString = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ShellTransition:
    source: int
    count: int
    target: int


@dataclass(frozen=True)
class ProtocolTable:
    n: int
    shift: int
    lattice: LatticeSpectrum
    shell_plan: tuple[ShellTransition, ...]
    explicit_map: tuple[tuple[BasisString, BasisString], ...] | None = None
    note: str | None = field(default=None, compare=False)

    @property
    def unit(self) -> Fraction:
        return self.lattice.unit

    @property
    def work(self) -> Fraction:
        return self.shift * self.lattice.unit

    @property
    def rate(self) -> Fraction:
        return self.work / self.n

    def to_dict(self) -> dict:
        doc = {
            "n": self.n,
            "shift": self.shift,
            "unit": str(self.unit),
            "work": str(self.work),
            "lattice": {
                "m": list(self.lattice.m),
                "degeneracy": list(self.lattice.degeneracy),
                "occupied": list(self.lattice.occupied),
            },
            "shell_plan": [
                {"input_energy": tr.source, "count": str(tr.count), "output_energy": tr.target}
                for tr in self.shell_plan
            ],
        }
        if self.explicit_map is not None:
            doc["explicit_map"] = [
                [[list(p) for p in src], [list(p) for p in dst]] for src, dst in self.explicit_map
            ]
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ProtocolTable":
        try:
            lat = doc["lattice"]
            lattice = LatticeSpectrum(
                parse_energy(doc["unit"]), tuple(lat["m"]), tuple(lat["degeneracy"]), tuple(lat["occupied"])
            )
            plan = tuple(
                ShellTransition(int(e["input_energy"]), int(e["count"]), int(e["output_energy"]))
                for e in doc["shell_plan"]
            )
            explicit = doc.get("explicit_map")
            if explicit is not None:
                explicit = tuple(
                    (tuple(tuple(p) for p in src), tuple(tuple(p) for p in dst)) for src, dst in explicit
                )
            return cls(int(doc["n"]), int(doc["shift"]), lattice, plan, explicit)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed protocol document: {exc}") from exc


def _level_states(ls: LatticeSpectrum, occupied: bool) -> list[tuple[int, int]]:
    dims = ls.occupied if occupied else ls.degeneracy
    return [(i, k) for i, d in enumerate(dims) for k in range(d)]


def occupied_strings(ls: LatticeSpectrum, n: int) -> Iterator[BasisString]:
    """All occupied n-copy strings in lexicographic order."""
    return itertools.product(_level_states(ls, True), repeat=n)


def _energy(ls: LatticeSpectrum, string: BasisString) -> int:
    return sum(ls.m[i] for i, _ in string)


def _full_strings_at(ls: LatticeSpectrum, n: int, total: int) -> Iterator[BasisString]:
    """Full-space strings with lattice energy ``total``, in lexicographic order."""
    states = _level_states(ls, False)
    # reach[k] has bit e set when k copies can sum to e
    reach = [1]
    for _ in range(n):
        prev = reach[-1]
        nxt = 0
        for mi in set(ls.m):
            nxt |= prev << mi
        reach.append(nxt)

    prefix: list[tuple[int, int]] = []

    def walk(left: int, remaining: int):
        if left == 0:
            if remaining == 0:
                yield tuple(prefix)
            return
        for state in states:
            rest = remaining - ls.m[state[0]]
            if rest >= 0 and (reach[left - 1] >> rest) & 1:
                prefix.append(state)
                yield from walk(left - 1, rest)
                prefix.pop()

    yield from walk(n, total)


def _plan_from_counts(ls: LatticeSpectrum, n: int, shift: int) -> tuple[ShellTransition, ...]:
    occ = shell_counts(ls, n, "occupied")
    return tuple(ShellTransition(t, c, t - shift) for t, c in occ.nonzero())


def _occupied_total(ls: LatticeSpectrum, n: int) -> int:
    return sum(ls.occupied) ** n


def build_protocol(
    ls: LatticeSpectrum,
    n: int,
    shift: int,
    emit_explicit: bool = False,
    limit: int = EXPLICIT_LIMIT,
) -> ProtocolTable:
    """Shell plan for a feasible shift, with an optional explicit injection.

    Inside each shell, occupied strings in lexicographic order are sent to the
    lexicographically first free strings of the target shell.
    """
    if not feasible_shift(ls, n, shift):
        raise InfeasibleShiftError(f"shift {shift} violates shell capacity at n={n}")
    plan = _plan_from_counts(ls, n, shift)
    explicit = None
    if emit_explicit:
        if _occupied_total(ls, n) > limit:
            raise ResourceGuardError(
                f"explicit map would have {_occupied_total(ls, n)} rows (limit {limit})"
            )
        by_shell: dict[int, list[BasisString]] = defaultdict(list)
        for string in occupied_strings(ls, n):
            by_shell[_energy(ls, string)].append(string)
        rows = []
        for t in sorted(by_shell):
            sources = by_shell[t]
            targets = itertools.islice(_full_strings_at(ls, n, t - shift), len(sources))
            rows.extend(zip(sources, targets))
        explicit = tuple(rows)
    return ProtocolTable(n, shift, ls, plan, explicit)


def identity_protocol(ls: LatticeSpectrum, n: int, emit_explicit: bool = False) -> ProtocolTable:
    plan = _plan_from_counts(ls, n, 0)
    explicit = None
    if emit_explicit:
        if _occupied_total(ls, n) > EXPLICIT_LIMIT:
            raise ResourceGuardError("explicit identity map too large")
        explicit = tuple((s, s) for s in occupied_strings(ls, n))
    return ProtocolTable(n, 0, ls, plan, explicit)


def lcm_protocol(
    ls: LatticeSpectrum, emit_explicit: bool = True, limit: int = EXPLICIT_LIMIT
) -> tuple[int, ProtocolTable]:
    """Explicit lcm construction: n = K_S + 1 copies, work M_S * unit.

    Every occupied string contains some symbol (a, b) at least K_a times.
    With a the smallest such level and b the smallest such sublevel,
    M_S / m_a copies of (a, b) are sent to the ground state (0, 0).  For a
    degenerate block several position choices are kept per string and a
    bipartite matching picks an injective assignment.
    """
    from .bounds import lcm_plan  # local import keeps module dependencies one-way

    if ls.m[0] != 0:
        raise ProtocolError("lcm construction needs the ground at lattice position 0")
    if ls.occupied[0]:
        raise GroundOccupiedError("ground level is occupied; no deterministic work is possible")

    occ_levels = ls.occupied_set
    if len(occ_levels) == 1 and ls.occupied[occ_levels[0]] <= ls.degeneracy[0]:
        j = occ_levels[0]
        shift = ls.m[j]
        explicit = None
        if emit_explicit:
            explicit = tuple((((j, k),), ((0, k),)) for k in range(ls.occupied[j]))
        plan = _plan_from_counts(ls, 1, shift)
        return 1, ProtocolTable(1, shift, ls, plan, explicit, note="single occupied level")

    lp = lcm_plan(ls)
    n = lp.K_S + 1
    shift = lp.M_S
    plan = _plan_from_counts(ls, n, shift)
    if not emit_explicit or _occupied_total(ls, n) > limit:
        if not feasible_shift(ls, n, shift):
            raise InvariantViolation("lcm shift fails the shell-capacity criterion")
        return n, ProtocolTable(n, shift, ls, plan, None, note="shell plan only")

    rows = _lcm_injection(ls, n, lp.M_S, lp.K_i)
    pt = ProtocolTable(n, shift, ls, plan, rows)
    summary = verify_protocol(pt, ls.to_spectrum())
    if not summary.deterministic or summary.values[0][0] != pt.work:
        raise InvariantViolation("lcm construction produced a non-deterministic table")
    return n, pt


def _lcm_injection(ls: LatticeSpectrum, n: int, M: int, K: Mapping[int, int]):
    sources: list[BasisString] = []
    candidates: list[list[BasisString]] = []
    for string in occupied_strings(ls, n):
        mult = Counter(string)
        a, b = min(sym for sym, c in mult.items() if c >= K[sym[0]])
        q = M // ls.m[a]
        positions = [p for p, sym in enumerate(string) if sym == (a, b)]
        options = []
        for chosen in itertools.islice(itertools.combinations(positions, q), ls.occupied[a]):
            out = list(string)
            for p in chosen:
                out[p] = (0, 0)
            options.append(tuple(out))
        sources.append(string)
        candidates.append(options)

    # non-degenerate blocks give a single option each, which is already injective
    if all(len(opts) == 1 for opts in candidates):
        rows = tuple((src, opts[0]) for src, opts in zip(sources, candidates))
        if len({dst for _, dst in rows}) != len(rows):
            raise InvariantViolation("first-occurrence rule is not injective")
        return rows

    index: dict[BasisString, int] = {}
    rows_idx, cols_idx = [], []
    for r, opts in enumerate(candidates):
        for out in opts:
            rows_idx.append(r)
            cols_idx.append(index.setdefault(out, len(index)))
    graph = csr_matrix(
        (np.ones(len(rows_idx), dtype=np.int8), (rows_idx, cols_idx)), shape=(len(sources), len(index))
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.any(match < 0):
        raise InvariantViolation("Hall condition failed in the lcm injection")
    targets = [None] * len(index)
    for out, c in index.items():
        targets[c] = out
    return tuple((src, targets[match[r]]) for r, src in enumerate(sources))


@dataclass(frozen=True)
class WorkSupport:
    """Distinct work values with the number of occupied strings producing each."""

    values: tuple[tuple[Fraction, int], ...]

    @property
    def deterministic(self) -> bool:
        return len(self.values) == 1

    @property
    def states(self) -> int:
        return sum(c for _, c in self.values)

    @property
    def w_min(self) -> Fraction:
        return self.values[0][0]

    @property
    def w_max(self) -> Fraction:
        return self.values[-1][0]


def _level_energies(pt: ProtocolTable, s: SpectrumSpec, level_map: Sequence[int] | None):
    if level_map is None:
        if len(s.levels) != len(pt.lattice.m):
            raise ProtocolError("spectrum and protocol have different numbers of levels")
        level_map = range(len(s.levels))
    return [s.levels[j].energy for j in level_map]


def _check_explicit(pt: ProtocolTable) -> None:
    ls = pt.lattice
    rows = pt.explicit_map
    srcs = [a for a, _ in rows]
    dsts = [b for _, b in rows]
    if len(set(srcs)) != len(srcs):
        raise ProtocolError("explicit map lists an input string twice")
    if len(set(dsts)) != len(dsts):
        dup = next(b for b, c in Counter(dsts).items() if c > 1)
        raise ProtocolError(f"explicit map is not injective: {dup} is hit twice")
    for src, dst in rows:
        if len(src) != pt.n or len(dst) != pt.n:
            raise ProtocolError("basis string length differs from n")
        for i, k in src:
            if not (0 <= i < len(ls.m) and 0 <= k < ls.occupied[i]):
                raise ProtocolError(f"input {src} leaves the occupied subspace")
        for i, k in dst:
            if not (0 <= i < len(ls.m) and 0 <= k < ls.degeneracy[i]):
                raise ProtocolError(f"output {dst} is not a basis string")
    if len(rows) != _occupied_total(ls, pt.n):
        raise ProtocolError(
            f"explicit map covers {len(rows)} of {_occupied_total(ls, pt.n)} occupied strings"
        )


def _check_plan(pt: ProtocolTable) -> None:
    occ = shell_counts(pt.lattice, pt.n, "occupied")
    full = shell_counts(pt.lattice, pt.n, "full")
    seen = {}
    for tr in pt.shell_plan:
        if tr.source - tr.target != pt.shift:
            raise ProtocolError(f"shell {tr.source} does not move by the protocol shift")
        if tr.count > full[tr.target]:
            raise ProtocolError(
                f"shell {tr.source} sends {tr.count} states into shell {tr.target} of size {full[tr.target]}"
            )
        seen[tr.source] = seen.get(tr.source, 0) + tr.count
    if seen != occ.as_dict():
        raise ProtocolError("shell plan does not cover the occupied shells exactly")


def verify_protocol(
    pt: ProtocolTable, s: SpectrumSpec, level_map: Sequence[int] | None = None
) -> WorkSupport:
    """Recompute every transition's work on ``s``.

    ``level_map[i]`` names the level of ``s`` that protocol level ``i`` stands
    for; by default levels correspond one to one.  A table without an
    explicit map can only be checked on the spectrum it was built for.
    """
    _check_plan(pt)
    energies = _level_energies(pt, s, level_map)
    if pt.explicit_map is not None:
        _check_explicit(pt)
        tally: Counter = Counter()
        for src, dst in pt.explicit_map:
            w = sum((energies[i] for i, _ in src), Fraction(0)) - sum(
                (energies[i] for i, _ in dst), Fraction(0)
            )
            tally[w] += 1
        return WorkSupport(tuple(sorted(tally.items())))

    scaled = [pt.unit * mi for mi in pt.lattice.m]
    base = energies[0]
    if any(e - base != x for e, x in zip(energies, scaled)):
        raise ProtocolError("shell-only protocol can only be verified on its own lattice")
    return WorkSupport(((pt.work, sum(tr.count for tr in pt.shell_plan)),))


@dataclass(frozen=True)
class DiagonalState:
    """Populations of energy basis states (single copy or n-copy strings).

    Keys are basis strings: tuples of ``(level, sublevel)`` pairs.  Exact
    Fractions are kept exact; floats are checked to 1e-12.
    """

    populations: Mapping[BasisString, object]

    def __post_init__(self):
        pops = dict(self.populations)
        if not pops:
            raise ValueError("empty state")
        if any(p < 0 for p in pops.values()):
            raise ValueError("negative population")
        total = sum(pops.values())
        exact = all(isinstance(p, (int, Fraction)) for p in pops.values())
        if (exact and total != 1) or (not exact and abs(total - 1) > 1e-12):
            raise ValueError(f"populations sum to {total}, not 1")
        lengths = {len(k) for k in pops}
        if len(lengths) != 1:
            raise ValueError("basis strings of different lengths")
        object.__setattr__(self, "populations", pops)

    @property
    def copies(self) -> int:
        return len(next(iter(self.populations)))

    def support(self) -> list[BasisString]:
        return sorted(k for k, p in self.populations.items() if p > 0)

    def respects(self, ls: LatticeSpectrum | SpectrumSpec) -> bool:
        occ = ls.occupied
        return all(k < occ[i] for string in self.support() for i, k in string)

    def level_populations(self) -> dict[int, object]:
        """Single-copy marginal summed per level (copy 1 only)."""
        out: dict[int, object] = defaultdict(int)
        for string, p in self.populations.items():
            out[string[0][0]] += p
        return dict(out)


def uniform_state(s: SpectrumSpec | LatticeSpectrum) -> DiagonalState:
    """Maximally mixed state on the occupied subspace of one copy."""
    states = [(i, k) for i, d in enumerate(s.occupied) for k in range(d)]
    p = Fraction(1, len(states))
    return DiagonalState({(st,): p for st in states})


def tensor_power_state(base: DiagonalState, n: int, limit: int = STATE_LIMIT) -> DiagonalState:
    if n < 1:
        raise ValueError("n must be positive")
    items = [(k, p) for k, p in sorted(base.populations.items()) if p]
    if len(items) ** n > limit:
        raise ResourceGuardError(f"{len(items)}^{n} product strings exceed limit {limit}")
    pops = {}
    for combo in itertools.product(items, repeat=n):
        key = tuple(x for k, _ in combo for x in k)
        pops[key] = math.prod((p for _, p in combo), start=1)
    return DiagonalState(pops)


@dataclass(frozen=True)
class WorkDistribution:
    atoms: tuple[tuple[object, object], ...]
    mean: object
    variance: object

    @property
    def deterministic(self) -> bool:
        return len(self.atoms) == 1


def simulate_tpm(
    state: DiagonalState,
    pt: ProtocolTable,
    s: SpectrumSpec,
    level_map: Sequence[int] | None = None,
) -> WorkDistribution:
    """Work law of the two-point measurement for a diagonal input state."""
    if pt.explicit_map is None:
        raise ProtocolError("simulation needs an explicit map")
    if state.copies != pt.n:
        raise ProtocolError(f"state has {state.copies} copies, protocol expects {pt.n}")
    energies = _level_energies(pt, s, level_map)
    image = dict(pt.explicit_map)
    law: dict = defaultdict(int)
    for string, p in state.populations.items():
        if not p:
            continue
        if string not in image:
            raise ProtocolError(f"populated string {string} is outside the protocol domain")
        dst = image[string]
        w = sum((energies[i] for i, _ in string), Fraction(0)) - sum(
            (energies[i] for i, _ in dst), Fraction(0)
        )
        law[w] += p
    atoms = tuple(sorted(law.items()))
    mean = sum(w * p for w, p in atoms)
    variance = sum(p * (w - mean) ** 2 for w, p in atoms)
    return WorkDistribution(atoms, mean, variance)
