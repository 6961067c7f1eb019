from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from logdgla.core import (
    Character,
    ConfigurationError,
    ModelConfig,
    PreconditionError,
    ValueModule,
    char_sum,
    format_rational,
    restrict_to_stratum,
    stratum_maps,
    to_rational,
    validate_value_module,
)
from logdgla.fixtures import abelian, gl2, gl2_values, mixed


def test_to_rational_accepts_exact_inputs():
    assert to_rational("3/6") == Fraction(1, 2)
    assert to_rational(" -2 ") == Fraction(-2)
    assert to_rational(Fraction(4, 3)) == Fraction(4, 3)
    assert to_rational(5) == 5


@pytest.mark.parametrize("bad", ["1/0", "abc", 0.5, True, None, "1/2/3"])
def test_to_rational_rejects(bad):
    with pytest.raises(ConfigurationError):
        to_rational(bad)


def test_format_rational_always_has_denominator():
    assert format_rational(Fraction(3)) == "3/1"
    assert format_rational(Fraction(-2, 4)) == "-1/2"


def test_character_range():
    Character.of("0", "1/2", "999/1000")
    with pytest.raises(ConfigurationError):
        Character.of("3/2")
    with pytest.raises(ConfigurationError):
        Character.of(1)
    with pytest.raises(ConfigurationError):
        Character.of("-1/3")


def test_char_sum_examples():
    assert char_sum(Character.of("1/3"), Character.of("2/3")) == (Character.of(0), (1,))
    assert char_sum(Character.of(0, 0), Character.of(0, 0)) == (Character.of(0, 0), (0, 0))
    assert char_sum(Character.of("1/3", 0), Character.of("1/3", "1/2")) == (Character.of("2/3", "1/2"), (0, 0))


def test_char_sum_length_mismatch():
    with pytest.raises(ConfigurationError):
        char_sum(Character.of(0), Character.of(0, 0))


kappas = st.lists(st.fractions(min_value=0, max_value=Fraction(11, 12), max_denominator=12), min_size=2, max_size=2)


def _acc(c1, c2, c3):
    s12, k12 = char_sum(c1, c2)
    s, k = char_sum(s12, c3)
    return s, tuple(x + y for x, y in zip(k12, k))


@given(kappas, kappas, kappas)
def test_char_sum_associative_with_carries(a, b, c):
    c1, c2, c3 = (Character(tuple(x)) for x in (a, b, c))
    assert char_sum(c1, c2) == char_sum(c2, c1)
    s_left = _acc(c1, c2, c3)
    s23, k23 = char_sum(c2, c3)
    s, k = char_sum(c1, s23)
    assert s_left == (s, tuple(x + y for x, y in zip(k23, k)))
    # carries record the integer part of the total exponent
    total = [x + y + z for x, y, z in zip(a, b, c)]
    assert list(s_left[1]) == [int(t) for t in total]


def test_abelian_and_gl2_validate():
    assert validate_value_module(abelian(1, "1/2").values).valid
    assert validate_value_module(gl2(1, 1).values).valid
    assert validate_value_module(gl2(2, 2).values).valid


def test_grading_violation_reported():
    vm = ValueModule.build(
        [("x", Character.of("1/3")), ("y", Character.of("1/3")), ("w", Character.of(0))],
        {("x", "y"): {"w": 1}, ("y", "x"): {"w": -1}},
    )
    rep = validate_value_module(vm)
    assert not rep.valid and rep.grading and not rep.antisymmetry


def test_perturbed_gl2_rejected():
    vm = gl2(1, 1).values
    table = {k: dict(v) for k, v in vm.structure.items()}
    e11, e12 = vm.index("E11"), vm.index("E12")
    table[(e11, e12)] = {e12: Fraction(2)}
    rep = validate_value_module(ValueModule(vm.names, vm.characters, table))
    assert rep.antisymmetry


def test_jacobi_failure_reported():
    # antisymmetric and graded, but [y, [u, x]] = u is not cancelled
    vm = ValueModule.build(
        [("x", Character.of(0)), ("y", Character.of(0)), ("u", Character.of(0))],
        {("x", "y"): {"u": 1}, ("y", "x"): {"u": -1}, ("x", "u"): {"x": 1}, ("u", "x"): {"x": -1}},
    )
    rep = validate_value_module(vm)
    assert not rep.antisymmetry and not rep.grading and rep.jacobi


def test_model_config_checks():
    with pytest.raises(ConfigurationError):
        ModelConfig(1, 2, abelian(2, 0, 0).values)
    with pytest.raises(ConfigurationError):
        ModelConfig(2, 1, abelian(2, 0, 0).values)


def test_restrict_examples():
    m = mixed(2, (0, 0), ("1/2", "1/3"))
    r = restrict_to_stratum(m, [0])
    assert (r.d, r.l) == (1, 1)
    assert r.values.names == ("mu0",) and r.values.characters == (Character.of(0),)
    empty = restrict_to_stratum(abelian(1, "1/2"), [0])
    assert len(empty.values) == 0 and empty.d == 0
    g = restrict_to_stratum(gl2(2, 2), [0, 1])
    assert g.values.names == ("E11", "E22")
    assert validate_value_module(g.values).valid
    with pytest.raises(PreconditionError):
        restrict_to_stratum(m, [])
    with pytest.raises(PreconditionError):
        restrict_to_stratum(m, [2])


def test_restrict_composes():
    m = ModelConfig(4, 3, gl2_values((("2/3", 0, "1/2"), ("1/3", 0, "1/2"))))
    for s1, s2 in (([0], [1]), ([1], [0]), ([2], [0, 1]), ([0, 2], [0])):
        step, coords, _ = stratum_maps(m, s1)
        inverse = {new: old for old, new in coords.items()}
        once = restrict_to_stratum(step, s2)
        direct = restrict_to_stratum(m, set(s1) | {inverse[i] for i in s2})
        assert once == direct
