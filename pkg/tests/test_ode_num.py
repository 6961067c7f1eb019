from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import special

from logdgla.core import PreconditionError
from logdgla.ode_num import (
    PolarSamples,
    SolveConfig,
    Term,
    apply_P_numeric,
    apply_P_terms,
    evaluate_terms,
    fourier_modes,
    mode_bound,
    parse_expression,
    radial_derivative,
    radial_reference,
    radial_solve,
    reconstruct,
    sample,
    solve,
    sup_on_disk,
)

GAUSS_MIX = [Term(1, 0, 0, 1.0), Term(0.3, 1, 0, 2.0), Term(0.7j, 0, 2, 1.5), Term(1, 3, 1, 0.5)]


def test_polar_samples_validation():
    r = np.linspace(0.1, 1.0, 4)
    with pytest.raises(ValueError):
        PolarSamples(1.0, r, np.zeros((4, 6)))
    with pytest.raises(ValueError):
        PolarSamples(1.0, r[::-1], np.zeros((4, 8)))
    with pytest.raises(ValueError):
        PolarSamples(1.0, r, np.full((4, 8), np.nan))
    s = PolarSamples(1.0, r, np.ones((4, 8)))
    assert PolarSamples.from_json(s.to_json()).values.tolist() == s.values.tolist()


def test_modes_of_simple_functions():
    a = np.linspace(0, 1, 11)
    m = fourier_modes(sample(lambda z: z), 16)
    assert m.modes() == [1] and np.allclose(m.h(1, a), 1, atol=1e-12)
    m = fourier_modes(sample(lambda z: np.conj(z) ** 2), 16)
    assert m.modes() == [-2] and np.allclose(m.h(-2, a), 1, atol=1e-12)
    m = fourier_modes(sample(lambda z: np.exp(-abs(z) ** 2)), 16)
    assert m.modes() == [0] and np.allclose(m.h(0, a), np.exp(-a), atol=1e-12)
    assert not m.aliasing


def test_aliasing_warning():
    m = fourier_modes(sample(lambda z: z**15 + 0 * z, n_phi=32), 8)
    assert m.aliasing and m.tail


def test_radial_solve_examples():
    a = np.linspace(0, 1, 7)
    one = lambda x: np.ones_like(x)
    assert np.allclose(radial_solve(one, 1, 0.5, a), 2 / 3, atol=1e-14)
    assert np.allclose(radial_solve(one, -1, 0.5, a), 2, atol=1e-14)
    with pytest.raises(PreconditionError):
        radial_solve(one, 0, 1.0, a)
    with pytest.raises(PreconditionError):
        radial_solve(one, 0, 0.0, a)


@pytest.mark.parametrize("n, kappa", [(0, 0.5), (3, 0.25), (-2, 0.01), (0, 0.999)])
def test_radial_solve_matches_reference_quadrature(n, kappa):
    h = lambda x: np.exp(-x)
    for a in (0.0, 0.3, 1.0):
        fast = radial_solve(h, n, kappa, np.array([a]))[0]
        assert abs(fast - radial_reference(h, n, kappa, a)) < 1e-10
        if a:
            # closed form through the lower incomplete gamma function
            nu = n + kappa if n >= 0 else kappa
            exact = special.gammainc(nu, a) * special.gamma(nu) * a**-nu
            assert abs(fast - exact) < 1e-10 * max(1.0, abs(exact)) / 10


def test_derivative_identity():
    # w'(a) = int_0^1 t^nu h'(at) dt, against a centred difference of w
    h, hp = (lambda x: np.exp(-x) * np.cos(x)), (lambda x: -np.exp(-x) * (np.cos(x) + np.sin(x)))
    for n, kappa in ((0, 0.3), (2, 0.7), (-1, 0.5)):
        a = np.array([0.2, 0.5, 0.9])
        eps = 1e-5
        fd = (radial_solve(h, n, kappa, a + eps) - radial_solve(h, n, kappa, a - eps)) / (2 * eps)
        assert np.allclose(radial_derivative(hp, n, kappa, a), fd, atol=1e-8)


def test_reconstruct_trivial_cases():
    f = sample(lambda z: z)
    modes = fourier_modes(f, 8)
    g, tail = reconstruct(modes, {}, 0.5)
    assert not g.values.any() and tail < 1e-14
    w = np.full(len(f.r), 0.25)
    g, _ = reconstruct(modes, {1: w}, 0.5)
    assert np.allclose(g.values, 0.25 * f.points())


def test_linearity_example():
    f = sample(lambda z: z + np.conj(z))
    g, rep = solve(f, 0.5)
    expected = (2 / 3) * f.points() + 2 * np.conj(f.points())
    assert np.max(abs(g.values - expected)) < 1e-12
    assert rep.residual < 1e-10 and rep.bound_ok


def test_apply_P_examples():
    g = sample(lambda z: z**2)
    assert sup_on_disk(g, apply_P_numeric(g, 1 / 3).values - (7 / 3) * g.values, 1.0) < 1e-10
    c = sample(lambda z: np.full_like(z, 2.0))
    assert sup_on_disk(c, apply_P_numeric(c, 0.25).values - 0.5, 1.0) < 1e-12


@pytest.mark.parametrize("terms", [
    [Term(1, 1, 0)],
    [Term(2 - 1j, 0, 3)],
    [Term(1, 2, 3), Term(0.5j, 4, 0), Term(-1, 0, 0)],
    [Term(1, 5, 2), Term(1, 1, 6)],
])
@pytest.mark.parametrize("kappa", [0.5, 0.1, 0.9])
def test_manufactured_monomials(terms, kappa):
    f = sample(lambda z: apply_P_terms(terms, kappa, z))
    g, rep = solve(f, kappa)
    assert sup_on_disk(f, g.values - evaluate_terms(terms, f.points()), 0.9) < 1e-8


def test_gaussian_residual_and_runtime():
    f = sample(lambda z: evaluate_terms(GAUSS_MIX, z), n_r=256, n_phi=64)
    start = time.perf_counter()
    g, rep = solve(f, 0.5, SolveConfig(n_max=32))
    assert time.perf_counter() - start < 10
    assert rep.residual <= 1e-6
    assert rep.bound_ok and not rep.aliasing


@pytest.mark.parametrize("kappa", [1e-3, 0.01, 0.99, 1 - 1e-3])
def test_extreme_kappa_stays_finite(kappa):
    f = sample(lambda z: evaluate_terms(GAUSS_MIX, z))
    g, rep = solve(f, kappa)
    assert np.all(np.isfinite(g.values)) and math.isfinite(rep.residual)
    assert rep.residual < 1e-6


def test_mode_bound_uses_smaller_denominator():
    assert mode_bound(0, 0.3) == pytest.approx(0.3)
    assert mode_bound(0, 0.8) == pytest.approx(0.2)
    assert mode_bound(2, 0.5) == pytest.approx(1.5)
    assert mode_bound(-3, 0.4) == mode_bound(0, 0.4)


def test_parse_expression():
    terms = parse_expression([{"coeff": [1, 2], "a": 1}, {"coeff": 3, "b": 2, "gauss": 0.5}])
    assert terms == (Term(1 + 2j, 1, 0, 0.0), Term(3, 0, 2, 0.5))
    with pytest.raises(ValueError):
        parse_expression([{"a": -1}])
