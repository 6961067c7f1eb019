from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from logdgla.axioms import check_axioms
from logdgla.core import ConfigurationError, PreconditionError, Truncation, restrict_to_stratum
from logdgla.fixtures import abelian, gl2, mixed, standard_fixtures
from logdgla.logforms import (
    LogForm,
    Term,
    basis_keys,
    bracket,
    dprime,
    dsecond,
    dtotal,
    is_admissible,
    normal_form,
    random_form,
    residue,
    residue_m,
)

T = LogForm.term


def test_normal_form_merges_and_cancels():
    m = abelian(1, 0)
    t = Term(Fraction(1, 2), (1,), (0,), (), (), (), 0)
    u = Term(Fraction(1, 3), (1,), (0,), (), (), (), 0)
    f = LogForm(m, [t, u])
    assert [x.coeff for x in f] == [Fraction(5, 6)]
    assert not LogForm(m, [t, Term(-t.coeff, *t.key[4:], (), (), (), 0)])
    s = LogForm(m, [Term(1, (2,), (0,), (), (), (), 0), Term(1, (0,), (1,), (), (), (), 0)])
    r = LogForm(m, [Term(1, (0,), (1,), (), (), (), 0), Term(1, (2,), (0,), (), (), (), 0)])
    assert s.items() == r.items()
    assert normal_form(normal_form(s)) == s


def test_dprime_examples():
    m = abelian(1, "1/3")
    assert dprime(T(m, 1, a=(2,))) == T(m, "7/3", a=(2,), I=(0,))
    k0 = abelian(1, 0)
    assert not dprime(T(k0, 1, b=(3,)))
    flat = abelian(2)
    assert dprime(T(flat, 1, a=(1, 1))) == T(flat, 1, a=(0, 1), J=(0,)) + T(flat, 1, a=(1, 0), J=(1,))


def test_dsecond_examples():
    m = abelian(1, "1/2")
    assert dsecond(T(m, 1, b=(1,))) == T(m, 1, K=(0,))
    assert not dsecond(T(m, 1, a=(1,)))
    m2 = abelian(2, "1/2")
    assert dsecond(T(m2, 1, b=(0, 1), I=(0,))) == T(m2, -1, I=(0,), K=(1,))


def test_bracket_examples():
    g = gl2(1, 1)
    e12, e21 = T(g, 1, v="E12"), T(g, 1, v="E21")
    assert bracket(e12, e21) == T(g, 1, a=(1,), v="E11") - T(g, 1, a=(1,), v="E22")
    log12, log21 = T(g, 1, I=(0,), v="E12"), T(g, 1, I=(0,), v="E21")
    assert not bracket(log12, log21)
    odd = log12 + T(g, 2, a=(1,), I=(0,), v="E21")
    assert not bracket(odd, odd)


def test_bracket_needs_structure():
    m = abelian(1, 0)
    from logdgla.core import ModelConfig, ValueModule

    bare = ModelConfig(1, 1, ValueModule(m.values.names, m.values.characters, None))
    with pytest.raises(ConfigurationError):
        bracket(T(bare, 1), T(bare, 1))


def test_residue_examples():
    m = mixed(1, (0,), ("1/2",))
    res = residue(T(m, 1, I=(0,), v="mu0"), 0)
    stratum = restrict_to_stratum(m, [0])
    assert res == T(stratum, 1, v="mu0")
    assert not residue(T(m, 1, a=(1,), I=(0,), v="mu0"), 0)
    assert not residue(T(m, 1, I=(0,), v="mu1"), 0)
    with pytest.raises(PreconditionError):
        residue(T(m, 1), 1)


def test_residue_m_examples():
    m = abelian(2, 0, 0)
    f = T(m, 1, I=(0, 1))
    # ascending order removes dz_0/z_0 from the front, then dz_1/z_1
    assert residue_m(f, [0, 1]) == T(restrict_to_stratum(m, [0, 1]), 1)
    assert residue_m(T(m, 1, a=(0, 0), I=(0, 1)) * -1, [1, 0]) == T(restrict_to_stratum(m, [0, 1]), -1)
    g = T(m, 3, b=(0, 2), I=(0,), K=(1,))
    assert residue_m(g, [0]) == residue(g, 0)
    with pytest.raises(PreconditionError):
        residue_m(f, [])


def test_admissibility_examples():
    m = mixed(1, (0,), ("1/2",))
    assert is_admissible(T(m, 1, I=(0,), v="mu1"))
    assert not is_admissible(T(m, 1, I=(0,), v="mu0"))
    assert is_admissible(T(m, 1, a=(1,), I=(0,), v="mu0"))


def test_random_form_contract():
    m = abelian(2, "1/3", 0)
    assert random_form(m, 1, 1, 2, 7) == random_form(m, 1, 1, 2, 7)
    for s in range(30):
        assert is_admissible(random_form(m, 1, 0, 2, s))
    c = random_form(m, 0, 0, 0, 3)
    assert c.bidegree() == (0, 0) and all(not any(k[4]) and not any(k[5]) for k, _ in c.items())
    with pytest.raises(PreconditionError):
        random_form(m, 3, 0, 1, 0)


def test_json_round_trip():
    g = gl2(2, 2)
    f = random_form(g, 1, 1, 2, 11, max_terms=5)
    assert LogForm.from_json(g, f.to_json()) == f
    assert all(isinstance(t["coeff"], str) and "/" in t["coeff"] for t in f.to_json())


@pytest.mark.parametrize("name", sorted(standard_fixtures()))
def test_axioms_on_fixtures(name):
    rep = check_axioms(standard_fixtures()[name], samples=150, seed=1)
    assert rep.passed, rep.as_dict()


def test_axioms_with_smooth_directions_and_two_carries():
    assert check_axioms(gl2(3, 2), samples=100, seed=2).passed
    assert check_axioms(mixed(3, (0, 0), (0, "1/2"), ("1/3", 0)), samples=100, seed=3).passed
    assert check_axioms(abelian(2), samples=50, seed=4).passed


def test_carry_brackets_exercised():
    # the gl2 fixture must really produce carry monomials in random brackets
    g = gl2(1, 1)
    e12, e21 = g.values.index("E12"), g.values.index("E21")
    rng = random.Random(0)
    hits = 0
    for s in range(100):
        x = random_form(g, rng.randint(0, 1), rng.randint(0, 1), 2, 2 * s)
        y = random_form(g, rng.randint(0, 1), rng.randint(0, 1), 2, 2 * s + 1)
        vx = {k[0] for k, _ in x.items()}
        vy = {k[0] for k, _ in y.items()}
        if (e12 in vx and e21 in vy) or (e21 in vx and e12 in vy):
            hits += bool(bracket(x, y))
    assert hits > 5


def _ambient_samples(m, n):
    rng = random.Random(5)
    for s in range(n):
        yield random_form(m, rng.randint(0, m.d), rng.randint(0, m.d), 2, s, admissible=False, max_terms=6)


@pytest.mark.parametrize("model", [abelian(2, 0, 0), mixed(3, (0, 0), (0, "1/2"), ("1/3", 0)), gl2(3, 2), abelian(1, 0)])
def test_residue_morphism(model):
    for f in _ambient_samples(model, 60):
        for size in (1, 2):
            for S in itertools.combinations(range(model.l), size):
                assert residue_m(dtotal(f), S) == dtotal(residue_m(f, S)) * (-1) ** len(S)


@pytest.mark.parametrize("model", [abelian(2, 0, 0), mixed(2, (0, 0), ("1/2", 0)), gl2(2, 2)])
def test_admissible_forms_have_no_residue(model):
    rng = random.Random(9)
    for s in range(60):
        f = random_form(model, rng.randint(0, model.d), rng.randint(0, model.d), 2, s)
        assert all(not residue(f, i) for i in range(model.l))


def test_basis_keys_admissible_count():
    # d=1, l=1, kappa=0, T=(2,2): log terms need a >= 1, so 2 * 3 keys in degree (1, 0)
    m = abelian(1, 0)
    assert len(basis_keys(m, 1, 0, Truncation(2, 2))) == 6
    assert len(basis_keys(m, 1, 0, Truncation(2, 2), admissible=False)) == 9
