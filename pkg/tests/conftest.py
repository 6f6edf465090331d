import random
from fractions import Fraction

import pytest

from detwork.spectrum import SpectrumSpec

DEFAULT_SEED = 20240611


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=DEFAULT_SEED, help="seed for randomized spectra")


@pytest.fixture(scope="session")
def seed(request):
    return request.config.getoption("--seed")


def random_spectrum(rng: random.Random, max_dim: int = 4, m_max: int = 6) -> SpectrumSpec:
    """Rational spectrum with total dimension <= max_dim, lattice positions <= m_max, empty ground."""
    n_levels = rng.randint(2, min(4, max_dim))
    m = [0] + sorted(rng.sample(range(1, m_max + 1), n_levels - 1))
    deg = [1] * n_levels
    for _ in range(rng.randint(0, max_dim - n_levels)):
        deg[rng.randrange(n_levels)] += 1
    occ = [0] + [rng.randint(0, d) for d in deg[1:]]
    if not any(occ):
        k = rng.randrange(1, n_levels)
        occ[k] = rng.randint(1, deg[k])
    unit = Fraction(rng.choice([1, 1, 2, 3]), rng.choice([1, 2, 3, 5]))
    return SpectrumSpec.build([unit * x for x in m], deg, occ)


def random_spectra(seed: int, count: int = 100):
    rng = random.Random(seed)
    return [random_spectrum(rng) for _ in range(count)]


@pytest.fixture(scope="session")
def spectra100(seed):
    return random_spectra(seed, 100)


def spec(energies, occupied=None, degeneracy=None):
    energies = list(energies)
    degeneracy = degeneracy or [1] * len(energies)
    occupied = occupied if occupied is not None else [0] + list(degeneracy[1:])
    return SpectrumSpec.build(energies, degeneracy, occupied)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
