import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e as He
from scipy import integrate, special

from fblab.core import SpaceTimeField, _target_grid, make_params
from fblab.errors import DomainError, ResolutionError
from fblab.kernels import (QuadratureRule, caloric, caloric_basis, caloric_fit, caloric_pointwise_bound,
                           exact_sample, halfspace, heat_kernel, ou_halfline_spectrum, random_bump_field,
                           slab_integral, spatial_gauss_integral, time_flat, weighted_poincare,
                           weiss_quadratic_invariance, zero)
from fblab.kernels.caloric import Polynomial

# -- heat kernel ------------------------------------------------------------


def test_heat_kernel_vanishes_forward():
    assert heat_kernel(np.array([0.3, -2.0]), 0.5) == 0.0
    assert heat_kernel(np.array([0.3]), 0.0) == 0.0


def test_heat_kernel_at_origin():
    assert heat_kernel(np.array([0.0]), -1.0) == pytest.approx((4 * math.pi) ** -0.5, rel=1e-15)


@pytest.mark.parametrize("t", [-4.0, -1.0, -1 / 16])
def test_heat_kernel_mass_against_adaptive_quadrature(t):
    mass, _ = integrate.quad(lambda x: float(heat_kernel(np.array([x]), t)), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-10)


@given(st.floats(-4.0, -1 / 16), st.integers(1, 2))
def test_gaussian_normalization_within_stated_error(t, n):
    rule = QuadratureRule()
    res = spatial_gauss_integral(lambda x: np.ones(len(x)), t, rule, n)
    assert abs(res.value - 1.0) <= res.err + 1e-13


def test_tail_bound_is_exposed_and_small():
    rule = QuadratureRule()
    for n in (1, 2, 3):
        assert 0 < rule.tail_bound(n) <= n * math.exp(-64)


# -- slab integral ------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3])
def test_slab_of_one_is_three(n):
    assert slab_integral(1.0, -4.0, -1.0, n=n).value == pytest.approx(3.0, abs=1e-6)


def test_slab_of_theta_is_fifteen_halves():
    assert slab_integral(time_flat(make_params(0.0)), -4.0, -1.0).value == pytest.approx(7.5, abs=1e-8)


def test_slab_of_unit_ball_indicator_against_erf_oracle():
    # per slice: ∫_{-1}^{1} G(x, t) dx = erf(1 / (2 sqrt(-t))); then adaptive quad in t
    oracle, _ = integrate.quad(lambda t: special.erf(1.0 / (2 * math.sqrt(-t))), -4.0, -1.0, epsabs=1e-13)
    indicator = lambda x, t: (np.abs(x[:, 0]) <= 1.0).astype(float)  # noqa: E731
    res = slab_integral(indicator, -4.0, -1.0, n=1, breaks=[[-1.0, 1.0]])
    assert res.value == pytest.approx(oracle, abs=1e-6)
    # without panel edges on the jumps the rule converges slowly, and says so
    rough = slab_integral(indicator, -4.0, -1.0, n=1)
    assert rough.err > 1e-3


def test_slab_rejects_forward_times():
    with pytest.raises(DomainError):
        slab_integral(1.0, -1.0, 0.5, n=1)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_slab_integral_is_linear(a, b):
    f = lambda x, t: np.sin(x[:, 0]) ** 2 - t  # noqa: E731
    g = lambda x, t: np.cos(3 * x[:, 0]) * t * t  # noqa: E731
    If = slab_integral(f, -4.0, -1.0, n=1).value
    Ig = slab_integral(g, -4.0, -1.0, n=1).value
    Ifg = slab_integral(lambda x, t: a * f(x, t) + b * g(x, t), -4.0, -1.0, n=1).value
    scale = max(1.0, abs(If), abs(Ig))
    assert abs(Ifg - a * If - b * Ig) <= 1e-12 * (abs(a) + abs(b)) * scale * 10


# -- caloric polynomials --------------------------------------------------------


def _terms(poly):
    return poly.terms()


def test_caloric_basis_degree2_n1():
    basis = caloric_basis(2, 1)
    assert [_terms(b) for b in basis] == [{(0, 0): 1.0}, {(0, 1): 1.0}, {(1, 0): 2.0, (0, 2): 1.0}]
    for b in basis:
        assert b.heat().is_zero(1e-14)


def test_caloric_basis_degree1_n3():
    basis = caloric_basis(1, 3)
    assert len(basis) == 4
    assert {tuple(sorted(_terms(b))) for b in basis} == {((0, 0, 0, 0),), ((0, 1, 0, 0),), ((0, 0, 1, 0),),
                                                         ((0, 0, 0, 1),)}


def _symbolic_caloric_dimension(degree, n):
    """dim ker H on polynomials of parabolic degree <= degree, by sympy linear algebra."""
    xs = sp.symbols(f"x1:{n + 1}")
    t = sp.Symbol("t")
    monos = []
    for k in range(degree // 2 + 1):
        for total in range(degree - 2 * k + 1):
            for mu in _compositions(total, n):
                monos.append(t ** k * sp.Mul(*[x ** a for x, a in zip(xs, mu)]))
    images = [sp.expand(sum(sp.diff(m, x, 2) for x in xs) - sp.diff(m, t)) for m in monos]
    targets = sorted({term for img in images for term in sp.Poly(img, *xs, t).monoms()}) if any(images) else []
    M = sp.zeros(len(targets), len(monos))
    for j, img in enumerate(images):
        if img == 0:
            continue
        poly = sp.Poly(img, *xs, t)
        for mono, c in zip(poly.monoms(), poly.coeffs()):
            M[targets.index(mono), j] = c
    return len(monos) - M.rank()


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@pytest.mark.parametrize("degree,n", [(3, 2), (2, 3), (4, 1)])
def test_caloric_basis_size_matches_symbolic_kernel(degree, n):
    basis = caloric_basis(degree, n)
    assert len(basis) == _symbolic_caloric_dimension(degree, n)
    # linearly independent: sample at random space-time points
    rng = np.random.default_rng(0)
    x = rng.normal(size=(200, n))
    t = rng.normal(size=200)
    A = np.concatenate([b.value(x, t) for b in basis], axis=-1)
    assert np.linalg.matrix_rank(A) == len(basis)


def test_caloric_basis_degree_limit():
    with pytest.raises(DomainError):
        caloric_basis(5, 1)


BOX = ((-1.0, 0.0), (-1.0, 1.0))


def test_caloric_fit_reproduces_caloric_polynomial():
    p = make_params(0.0, 1, 1)
    sol = caloric(p, {(0, 1): 0.7, (1, 0): 2.0, (0, 2): 1.0, (0, 0): -0.3})
    u = exact_sample(sol, BOX, (129, 65))
    X0 = ((0.1,), -0.2)
    P, curve = caloric_fit(u, X0, 2, [0.25, 0.5])
    T, X = u.mesh()
    np.testing.assert_allclose(P.value(X, T), u.values, atol=1e-10)
    assert np.max(curve.values) < 1e-10


def test_caloric_fit_of_halfspace_is_small():
    p = make_params(0.0, 1, 1)
    u = exact_sample(halfspace(p), BOX, (257, 129))
    P, curve = caloric_fit(u, ((0.0,), 0.0), 2, [0.25, 0.5])
    # independent least-squares oracle: the best caloric quadratic for α x₊² on the
    # same nodes; its size bounds what the fit may return
    assert np.max(np.abs(P.coeffs)) < 0.5 * p.alpha + 1e-12
    assert curve.values[0] <= p.alpha * 0.25 ** 2


def test_caloric_fit_recovers_perturbed_quadratic():
    p = make_params(0.0, 1, 1)
    box, shape = BOX, (257, 129)
    T_, X_ = _target_grid(box, shape)
    x = X_[..., 0]
    pert = 0.01 * (x * x + np.abs(T_)) ** 1.5 * np.sin(7 * x)
    u = SpaceTimeField(p, box, shape, (x * x + 2 * T_ + pert)[..., None])
    P, _ = caloric_fit(u, ((0.0,), 0.0), 2, [0.5, 1.0])
    got = _terms(P.simplified())
    want = {(0, 2): 1.0, (1, 0): 2.0}
    for key in set(got) | set(want):
        assert abs(got.get(key, 0.0) - want.get(key, 0.0)) <= 0.05


def test_caloric_fit_underdetermined():
    p = make_params(0.0, 1, 1)
    u = exact_sample(halfspace(p), BOX, (3, 3))
    with pytest.raises(ResolutionError):
        caloric_fit(u, ((0.0,), 0.0), 2, [0.1])


# -- exact solutions ------------------------------------------------------------


def test_exact_samples():
    p = make_params(0.0)
    h = exact_sample(halfspace(p), ((-1.0, 0.0), (0.0, 1.0)), (2, 2))
    np.testing.assert_array_equal(h.values[0, 1], [0.5, 0.0])
    th = exact_sample(time_flat(p), ((-2.0, -1.0), (0.0, 1.0)), (2, 2))
    np.testing.assert_array_equal(th.values[0, 0], [2.0, 0.0])
    z = exact_sample(zero(p), BOX, (3, 3))
    assert not np.any(z.values)


@given(st.floats(0.0, 0.9), st.floats(-3.0, -0.1), st.floats(-2, 2))
def test_time_flat_is_backward_self_similar(q, t, x):
    p = make_params(q)
    th = time_flat(p)
    v = th.value(np.array([[x]]), t)
    assert v[0, 0] == pytest.approx((-2 * t / p.kappa) ** (p.kappa / 2), rel=1e-12)
    assert th.value(np.array([[x]]), 0.5)[0, 0] == 0.0


def test_caloric_poly_must_be_caloric():
    with pytest.raises(DomainError):
        caloric(make_params(0.0, 1, 1), {(0, 2): 1.0})


# -- OU spectrum ------------------------------------------------------------------


def test_ou_spectrum_low_modes():
    vals = ou_halfline_spectrum(3)
    np.testing.assert_allclose(vals, [1.0, 3.0, 5.0], atol=1e-2)


def test_odd_hermite_oracle_for_third_mode():
    # He_5 is odd (Dirichlet at 0) and satisfies -y'' + x y' = 5 y
    c = np.zeros(6)
    c[5] = 1.0
    x = np.linspace(0.1, 5, 50)
    y, dy, d2y = He.hermeval(x, c), He.hermeval(x, He.hermeder(c)), He.hermeval(x, He.hermeder(c, 2))
    np.testing.assert_allclose(-d2y + x * dy, 5 * y, atol=1e-9)
    assert He.hermeval(0.0, c) == 0.0
    assert ou_halfline_spectrum(3)[2] == pytest.approx(5.0, abs=1e-2)


# -- appendix inequalities ----------------------------------------------------------


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 2))
def test_weighted_poincare_on_random_bumps(seed, n):
    w = random_bump_field(np.random.default_rng(seed), n, 2)
    assert weighted_poincare(w, -0.5, n).holds


class _Poly:
    def __init__(self, poly):
        self.poly = poly

    def value(self, x, t):
        return self.poly.value(x, t)

    def gradient(self, x, t):
        return self.poly.gradient(x, t)


@settings(max_examples=10)
@given(st.floats(-3.5, -1.0), st.floats(0.1, 0.9))
def test_caloric_pointwise_bound_on_basis(s, frac):
    t = s * (1 - frac)  # s < t < 0
    pts = np.linspace(-1, 1, 7)[:, None]
    for b in caloric_basis(2, 1):
        assert caloric_pointwise_bound(_Poly(b), s, t, pts).holds


class _Static:
    def __init__(self, w):
        self.w = w

    def value(self, x, t):
        return self.w.value(x)

    def gradient(self, x, t):
        return self.w.gradient(x)


@settings(max_examples=5)
@given(st.integers(0, 2 ** 31 - 1))
def test_weiss_quadratic_invariance(seed):
    p = _Poly(Polynomial.from_terms({(0, 2): 1.0, (1, 0): 2.0}, 1, np.array([1.0, 0.0])))
    w = random_bump_field(np.random.default_rng(seed), 1, 2, spread=1.0)
    lhs, rhs, err = weiss_quadratic_invariance(p, _Static(w), -1.0, -0.25, 2.0, 1)
    assert abs(lhs - rhs) <= err + 1e-10 * max(1.0, abs(rhs))
