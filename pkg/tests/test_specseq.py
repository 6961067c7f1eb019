from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from logdgla.core import Truncation
from logdgla.fixtures import abelian, gl2, mixed, standard_fixtures
from logdgla.linalg import SparseMatrix
from logdgla.specseq import (
    DoubleComplex,
    check_convergence,
    check_degeneration,
    direct_sum,
    e_page,
    from_model,
    kernel_dprime_description,
    page_to_json,
    random_double_complex,
    spectral_sequence,
    staircase,
    total_cohomology,
)

GOLDEN = Path(__file__).parent / "golden"
ONE = SparseMatrix(1, 1, [{0: Fraction(1)}])
T22 = Truncation(2, 2)


def d1_fixture() -> DoubleComplex:
    """Two classes joined by a vertical arrow: E_1 keeps both and d_1 kills them."""
    return DoubleComplex({(0, 0): 1, (0, 1): 1}, {}, {(0, 0): ONE})


def test_from_model_dimensions():
    assert from_model(abelian(1, "1/2"), T22).dims == {(0, 0): 9, (1, 0): 9, (0, 1): 9, (1, 1): 9}
    assert from_model(abelian(1, 0), T22).dims[(1, 0)] == 6


@pytest.mark.parametrize("name", sorted(standard_fixtures()))
def test_model_invariants(name):
    assert all(from_model(standard_fixtures()[name], T22).check().values())


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        DoubleComplex({(0, 0): 1, (1, 0): 2}, {(0, 0): ONE})


def test_e1_examples():
    assert e_page(from_model(abelian(1, "1/2"), T22), 1).dims == {}
    e1 = e_page(from_model(abelian(1, 0), T22), 1)
    assert e1.dims == {(0, 0): 3, (0, 1): 3}


def test_row_isomorphism_kills_row():
    # d1 is an isomorphism on row q=0; the class c on row 1 survives
    dc = DoubleComplex({(0, 0): 1, (1, 0): 1, (0, 1): 1}, {(0, 0): ONE}, {(0, 0): ONE})
    assert dc.check() == {"d1d1": True, "d2d2": True, "anticommute": True}
    pages = spectral_sequence(dc)
    assert pages[1].dims == {(0, 1): 1}
    assert all(p.dims == pages[2].dims for p in pages[2:])
    assert total_cohomology(dc) == {0: 0, 1: 1}


def test_total_cohomology_trivial_cases():
    dc = DoubleComplex({(0, 0): 2, (1, 0): 1, (0, 1): 3})
    assert total_cohomology(dc) == {0: 2, 1: 4}
    assert check_degeneration(dc, 0)
    arrow = DoubleComplex({(0, 0): 1, (1, 0): 1}, {(0, 0): ONE})
    assert total_cohomology(arrow) == {0: 0, 1: 0}


def test_pinned_d1():
    rep = check_convergence(d1_fixture())
    pages = spectral_sequence(d1_fixture())
    assert pages[1].dims == {(0, 0): 1, (0, 1): 1}
    assert pages[1].differentials[(0, 0)].to_dense() == [[1]]
    assert pages[2].dims == {}
    assert rep.ok and rep.nonzero_differentials == [1]


def test_pinned_d2():
    st = staircase(2)
    pages = spectral_sequence(st)
    assert pages[2].dims == {(1, 0): 1, (0, 2): 1}
    assert pages[2].target((1, 0)) == (0, 2)
    assert pages[2].differentials[(1, 0)].to_dense() == [[1]]
    assert pages[3].dims == {}
    assert not check_degeneration(st, 2)
    assert check_degeneration(st, 3)
    assert check_convergence(st).ok


def test_longer_staircase_reaches_d3():
    rep = check_convergence(staircase(3, (2, 0)))
    assert rep.ok and 3 in rep.nonzero_differentials


def test_too_small_r_max_reports_failure():
    rep = check_convergence(staircase(2), r_max=1)
    assert not rep.stabilized and not rep.ok


def test_direct_sum_adds_cohomology():
    dc = direct_sum([staircase(2), d1_fixture(), DoubleComplex({(1, 1): 2})])
    assert total_cohomology(dc) == {0: 0, 1: 0, 2: 2}


def test_random_complexes_converge():
    for seed in range(50):
        dc = random_double_complex(seed)
        assert all(dc.check().values())
        assert max(dc.dims.values()) <= 6
        rep = check_convergence(dc)
        assert rep.ok, seed


def test_random_generator_is_deterministic():
    a, b = random_double_complex(3), random_double_complex(3)
    assert a.dims == b.dims and a.d1 == b.d1 and a.d2 == b.d2


@pytest.mark.parametrize("name", sorted(standard_fixtures()))
def test_model_fixtures_converge(name):
    assert check_convergence(from_model(standard_fixtures()[name], T22)).ok


def test_kernel_description_examples():
    k = kernel_dprime_description(abelian(1, 0), 0, T22)
    assert k.match and k.dim == 3
    assert {key[5] for f in k.predicted for key, _ in f.items()} == {(0,), (1,), (2,)}
    assert kernel_dprime_description(abelian(1, 0), 1, T22).dim == 3
    for q in range(2):
        half = kernel_dprime_description(abelian(1, "1/2"), q, T22)
        assert half.match and half.dim == 0
    mix = kernel_dprime_description(mixed(1, (0,), ("1/2",)), 0, T22)
    assert mix.match and {key[0] for f in mix.kernel for key, _ in f.items()} == {0}


@pytest.mark.parametrize("model", [*standard_fixtures().values(), gl2(2, 2), mixed(2, (0, 0), ("1/2", 0))])
def test_kernel_matches_prediction(model):
    for q in range(model.d + 1):
        assert kernel_dprime_description(model, q, Truncation(2, 1)).match


@pytest.mark.parametrize("model", [abelian(1, 0), abelian(2, 0, 0), abelian(2, "1/3", 0), abelian(1, "1/2")])
def test_e1_concentrated_in_p0_when_all_directions_are_branches(model):
    e1 = e_page(from_model(model, Truncation(2, 1)), 1)
    assert all(p == 0 for p, _ in e1.dims)


def test_nontrivial_characters_kill_first_column():
    e1 = e_page(from_model(abelian(2, "1/3", "1/2"), Truncation(1, 1)), 1)
    assert all(p != 0 for p, _ in e1.dims)


def test_half_character_model_golden():
    dc = from_model(abelian(1, "1/2"), T22)
    got = {
        "degenerate_from": [r for r in range(4) if check_degeneration(dc, r)],
        "pages": [page_to_json(p) for p in spectral_sequence(dc)],
    }
    expected = json.loads((GOLDEN / "specseq_half_character.json").read_text())
    assert got == expected
