import pytest
from hypothesis import given, settings, strategies as st

from detwork.errors import ResourceGuardError
from detwork.shellcount import naive_shell_counts, shell_counts
from detwork.spectrum import LatticeSpectrum, to_lattice

from oracles import enumerate_counts, poly_power

L023 = LatticeSpectrum(1, (0, 2, 3), (1, 1, 1), (0, 1, 1))


def test_full_two_copies():
    assert shell_counts(L023, 2, "full").as_dict() == {0: 1, 2: 2, 3: 2, 4: 1, 5: 2, 6: 1}


def test_occupied_three_copies():
    assert shell_counts(L023, 3, "occupied").as_dict() == {6: 1, 7: 3, 8: 3, 9: 1}


def test_single_copy_is_degeneracy():
    ls = LatticeSpectrum(1, (0, 1, 4), (2, 3, 1), (0, 2, 1))
    c = shell_counts(ls, 1, "full")
    assert [c[k] for k in ls.m] == [2, 3, 1]
    assert shell_counts(ls, 1, "occupied").as_dict() == {1: 2, 4: 1}


def test_naive_degenerate_example():
    ls = LatticeSpectrum(1, (0, 1), (1, 2), (0, 2))
    assert naive_shell_counts(ls, 2, "occupied").as_dict() == {2: 4}


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("weight", ["full", "occupied"])
def test_matches_naive_on_three_level(n, weight):
    assert shell_counts(L023, n, weight) == naive_shell_counts(L023, n, weight)


lattices = st.integers(2, 4).flatmap(
    lambda k: st.tuples(
        st.lists(st.integers(1, 9), min_size=k - 1, max_size=k - 1, unique=True),
        st.lists(st.integers(1, 3), min_size=k, max_size=k),
        st.lists(st.integers(0, 3), min_size=k, max_size=k),
    )
)


@settings(max_examples=60, deadline=None)
@given(lattices, st.integers(1, 12))
def test_matches_sparse_polynomial_oracle(data, n):
    ms, deg, occ = data
    m = (0,) + tuple(sorted(ms))
    occ = [min(o, d) for o, d in zip(occ, deg)]
    if not any(occ):
        occ[-1] = 1
    ls = LatticeSpectrum(1, m, tuple(deg), tuple(occ))
    for weight, w in (("full", deg), ("occupied", occ)):
        got = shell_counts(ls, n, weight)
        assert got.as_dict() == {t: c for t, c in poly_power(m, w, n).items() if c}
        assert got.total == sum(w) ** n
        assert len(got) == n * m[-1] + 1


def test_occupied_never_exceeds_full():
    ls = LatticeSpectrum(1, (0, 1, 3, 4), (1, 2, 3, 1), (0, 1, 3, 1))
    for n in (1, 4, 9):
        occ, full = shell_counts(ls, n, "occupied"), shell_counts(ls, n, "full")
        assert all(o <= f for o, f in zip(occ.counts, full.counts))


def test_symmetric_spectrum_has_symmetric_counts():
    ls = LatticeSpectrum(1, (0, 1, 2), (2, 3, 2), (0, 1, 1))
    for n in (3, 8):
        c = shell_counts(ls, n, "full").counts
        assert c == c[::-1]


def test_support_window():
    ls = LatticeSpectrum(1, (0, 2, 5), (1, 1, 1), (0, 1, 1))
    occ = shell_counts(ls, 4, "occupied")
    assert occ.support() == range(8, 21)


def test_large_exact_counts():
    ls = LatticeSpectrum(1, (0, 1), (1, 1), (0, 1))
    from math import comb
    c = shell_counts(ls, 300, "full")
    assert c[150] == comb(300, 150)


def test_resource_guard():
    with pytest.raises(ResourceGuardError):
        shell_counts(L023, 50, "full", limit=100)
    with pytest.raises(ResourceGuardError):
        naive_shell_counts(L023, 20, "full")


def test_naive_agrees_with_oracle_on_random(spectra100):
    for s in spectra100[:30]:
        ls = to_lattice(s)
        for n in (1, 2, 3):
            for weight, w in (("full", ls.degeneracy), ("occupied", ls.occupied)):
                expect = enumerate_counts(ls.m, w, n)
                assert naive_shell_counts(ls, n, weight).as_dict() == dict(expect)
