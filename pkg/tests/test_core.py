import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fblab.core import (Cylinder, SpaceTimeField, SpaceTimePoint, apply_L, heat_residual, make_params,
                        parabolic_rescale, reaction)
from fblab.errors import DomainError, OutOfDomainError
from fblab.kernels import caloric, exact_sample, halfspace, time_flat

qs = st.floats(min_value=0.0, max_value=0.9)


# -- Params ---------------------------------------------------------------

def test_params_q0():
    p = make_params(0.0)
    assert p.kappa == 2.0 and p.alpha == 0.5
    assert (p.n, p.m) == (1, 2)


def test_params_q_half():
    p = make_params(0.5)
    assert p.kappa == 4.0
    assert p.alpha == pytest.approx(1 / 144, rel=1e-15)


@pytest.mark.parametrize("q", [1.0, -0.1, 1.5])
def test_params_rejects_exponent(q):
    with pytest.raises(DomainError, match="exponent out of range"):
        make_params(q)


@given(qs)
def test_alpha_makes_profile_solve_ode(q):
    # alpha x^kappa solves w'' = w^q on x > 0: alpha kappa (kappa-1) = alpha^q
    p = make_params(q)
    assert p.kappa * (1 - q) == pytest.approx(2.0, rel=1e-14)
    assert p.alpha ** (1 - q) * p.kappa * (p.kappa - 1) == pytest.approx(1.0, rel=1e-12)


# -- points and cylinders ---------------------------------------------------

@given(st.lists(st.floats(-10, 10), min_size=1, max_size=3), st.floats(-10, 10))
def test_parabolic_norm_nonnegative(x, t):
    P = SpaceTimePoint(tuple(x), t)
    assert P.parabolic_norm >= 0
    assert (P.parabolic_norm == 0) == (all(v == 0 for v in x) and t == 0)


def test_cylinder_time_ranges():
    c = SpaceTimePoint((0.0,), 1.0)
    assert Cylinder(c, 0.5, "lower").time_range == (0.75, 1.0)
    assert Cylinder(c, 0.5, "upper").time_range == (1.0, 1.25)
    assert Cylinder(c, 0.5, "full").time_range == (0.75, 1.25)
    lower = Cylinder(c, 0.5)
    assert lower.contains([0.1], 1.0) and not lower.contains([0.1], 0.75)
    with pytest.raises(DomainError):
        Cylinder(c, 0.0)


# -- SpaceTimeField -------------------------------------------------------

def test_field_rejects_nonfinite_and_size_mismatch():
    p = make_params(0.0)
    vals = np.zeros((3, 4, 2))
    vals[1, 1, 0] = np.nan
    with pytest.raises(DomainError):
        SpaceTimeField(p, ((0, 1), (0, 1)), (3, 4), vals)
    with pytest.raises(DomainError):
        SpaceTimeField(p, ((0, 1), (0, 1)), (3, 4), np.zeros(23))
    with pytest.raises(DomainError):
        SpaceTimeField(p, ((1, 0), (0, 1)), (3, 4), np.zeros(24))


def test_field_spacing_and_immutability():
    u = SpaceTimeField(make_params(0.0), ((-1, 0), (-1, 1)), (5, 9), np.zeros(90))
    assert u.dt == 0.25 and u.dx == 0.25
    with pytest.raises(ValueError):
        u.values[0, 0, 0] = 1.0


# -- parabolic_rescale ------------------------------------------------------

BOX1 = ((-1.0, 0.0), (-1.0, 1.0))


def test_rescale_identity():
    u = exact_sample(time_flat(make_params(0.0)), BOX1, (9, 17))
    v = parabolic_rescale(u, (0.0, 0.0), 1.0)
    np.testing.assert_array_equal(v.values, u.values)


def test_rescale_halfspace_is_fixed():
    p = make_params(0.0)
    h = halfspace(p)
    u = exact_sample(h, BOX1, (33, 65))
    box = ((-1.0, 0.0), (-0.5, 0.5))
    v = parabolic_rescale(u, (0.0, 0.0), 0.5, box, (9, 17))
    ref = exact_sample(h, box, (9, 17))
    # multilinear interpolation of a C^{1,1} profile: error O(dx²)
    assert np.max(np.abs(v.values - ref.values)) < 0.5 * u.dx ** 2 / 0.25


def test_rescale_time_flat_is_fixed():
    p = make_params(0.0)
    th = time_flat(p)
    u = exact_sample(th, BOX1, (33, 9))
    v = parabolic_rescale(u, (0.0, 0.0), 0.5, ((-4.0, 0.0), (-1.0, 1.0)), (9, 9))
    ref = exact_sample(th, ((-4.0, 0.0), (-1.0, 1.0)), (9, 9))
    np.testing.assert_allclose(v.values, ref.values, atol=1e-12)


def test_rescale_out_of_domain_names_corner():
    u = exact_sample(time_flat(make_params(0.0)), BOX1, (5, 5))
    with pytest.raises(OutOfDomainError, match="corner"):
        parabolic_rescale(u, (0.0, 0.0), 2.0, ((-1.0, 0.0), (-1.0, 1.0)), (3, 3))


@given(st.sampled_from([0.5, 0.75, 1.0]), st.sampled_from([0.5, 0.8, 1.0]))
def test_rescale_composition(r, s):
    p = make_params(0.0)
    u = exact_sample(time_flat(p), ((-1.0, 0.0), (-1.0, 1.0)), (65, 65))
    target = ((-1.0, 0.0), (-1.0, 1.0))
    once = parabolic_rescale(u, (0.0, 0.0), r * s, target, (9, 9))
    mid = parabolic_rescale(u, (0.0, 0.0), r)
    twice = parabolic_rescale(mid, (0.0, 0.0), s, target, (9, 9))
    # theta = -t is linear in t, so interpolation is exact up to round-off
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


# -- apply_L and heat_residual ----------------------------------------------

def test_L_annihilates_halfspace():
    p = make_params(0.0)
    errs = []
    for N in (32, 64):
        u = exact_sample(halfspace(p), ((-1.0, -0.5), (-1.0, 1.0)), (5, N + 1))
        L = apply_L(u)
        errs.append(np.max(np.abs(L.values[L.valid])))
    # centered differences are exact on quadratics; the kink sits where x = 0
    assert max(errs) < 1e-12


@given(st.floats(0.0, 2 * math.pi))
def test_L_annihilates_rotated_halfspace(angle):
    p = make_params(0.0, 2, 1)
    nu = [math.cos(angle), math.sin(angle)]
    u = exact_sample(halfspace(p, nu=nu), ((-1.0, -0.5), (-1.0, 1.0), (-1.0, 1.0)), (3, 41, 41))
    L = apply_L(u)
    # the kink cells carry an O(dx) error (one-sided curvature jump times |x|)
    assert np.max(np.abs(L.values[L.valid])) <= 2 * p.alpha * u.dx * math.sqrt(2) * 2


def test_L_of_theta_vanishes():
    p = make_params(0.0)
    u = exact_sample(time_flat(p), ((-2.0, -1.0), (-1.0, 1.0)), (11, 9))
    L = apply_L(u)
    assert np.max(np.abs(L.values[L.valid])) < 1e-12


def test_L_of_x1_is_minus_x1():
    p = make_params(0.0, 1, 1)
    u = exact_sample(caloric(p, {(0, 1): 1.0}), ((-1.0, 0.0), (-1.0, 1.0)), (5, 9))
    L = apply_L(u)
    T, X = u.mesh()
    np.testing.assert_allclose(L.values[L.valid][:, 0], -X[..., 0][L.valid], atol=1e-12)


def test_heat_residual_of_halfspace_away_from_kink():
    p = make_params(0.0)
    u = exact_sample(halfspace(p), ((-1.0, -0.5), (-1.0, 1.0)), (5, 65))
    r = heat_residual(u)
    T, X = u.mesh()
    away = r.valid & (np.abs(X[..., 0]) > 2 * u.dx)
    assert np.max(np.abs(r.values[away])) < 1e-12


def test_heat_residual_of_theta_q0_is_roundoff():
    u = exact_sample(time_flat(make_params(0.0)), ((-2.0, -1.0), (-1.0, 1.0)), (9, 9))
    r = heat_residual(u)
    assert np.max(np.abs(r.values[r.valid])) < 1e-12


def test_heat_residual_of_theta_converges_first_order():
    p = make_params(0.5)
    errs = []
    for nt in (17, 33, 65):
        u = exact_sample(time_flat(p), ((-2.0, -1.0), (-1.0, 1.0)), (nt, 9))
        r = heat_residual(u)
        errs.append(np.max(np.abs(r.values[r.valid])))
    assert errs[0] > 1.8 * errs[1] > 3.2 * errs[2]


def test_heat_residual_of_positive_caloric_polynomial():
    p = make_params(0.0, 1, 1)
    P = caloric(p, {(0, 0): 3.0, (0, 2): 1.0, (1, 0): 2.0})  # 3 + x² + 2t > 0 on the box
    u = exact_sample(P, ((-1.0, 0.0), (-1.0, 1.0)), (9, 17))
    r = heat_residual(u)
    np.testing.assert_allclose(r.values[r.valid], -reaction(u.values, 0.0)[r.valid], atol=1e-10)


def test_reaction_zero_at_zero():
    u = np.array([[0.0, 0.0], [3.0, 4.0]])
    out = reaction(u, 0.0)
    assert np.all(out[0] == 0.0)
    np.testing.assert_allclose(out[1], [0.6, 0.8], rtol=1e-15)
    np.testing.assert_allclose(reaction(u, 0.5), [[0.0, 0.0], [3 / math.sqrt(5), 4 / math.sqrt(5)]])


@given(qs, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_operators_return_finite_fields(q, a, b):
    p = make_params(q, 1, 2)
    P = caloric(p, {(0, 1): a, (0, 0): b, (1, 0): 2.0, (0, 2): 1.0})
    u = exact_sample(P, ((-1.0, 0.0), (-1.0, 1.0)), (5, 9))
    for out in (apply_L(u), heat_residual(u)):
        assert np.all(np.isfinite(out.values))
