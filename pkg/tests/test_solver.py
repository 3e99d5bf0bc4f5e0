import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fblab.core import ball_mesh, make_params, sample_on_ball
from fblab.errors import DomainError, ShapeError
from fblab.functionals import elliptic_M
from fblab.kernels import exact_sample, halfspace, time_flat
from fblab.solver import (DescentConfig, SolverConfig, convergence_study, minimize_elliptic, nonincrease_defect,
                          solve_cauchy, subsample_time, uniqueness_decay_check)

BOX = ((-1.0, 0.0), (-1.0, 1.0))


# -- configuration contracts ------------------------------------------------------


def test_unknown_scheme_rejected():
    with pytest.raises(DomainError):
        SolverConfig(scheme="rk4")


def test_explicit_needs_parabolic_step():
    p = make_params(0.0)
    h = halfspace(p)
    with pytest.raises(DomainError, match="explicit"):
        solve_cauchy(h, SolverConfig(scheme="explicit", bc=h), BOX, (33, 33))
    u = solve_cauchy(h, SolverConfig(scheme="explicit", bc=h), ((-0.1, 0.0), (-1.0, 1.0)), (201, 17))
    assert np.all(np.isfinite(u.values))


def test_imex_limits_step_to_dx():
    h = halfspace(make_params(0.0))
    with pytest.raises(DomainError, match="dt <= dx"):
        solve_cauchy(h, SolverConfig(bc=h), BOX, (5, 33))


# -- exact-solution oracles ------------------------------------------------------------


def test_zero_data_stays_zero():
    p = make_params(0.3)
    u = solve_cauchy(np.zeros((17, 2)), SolverConfig(), BOX, (17, 17), p)
    assert not np.any(u.values)


@pytest.mark.parametrize("q,kind", [(0.0, "h"), (0.5, "theta")])
def test_error_bounded_by_dx2_plus_dt(q, kind):
    p = make_params(q)
    sol = halfspace(p) if kind == "h" else time_flat(p)
    study = convergence_study(sol, (-4.0, -1.0), (-1.0, 1.0), cells=16, levels=3)
    # C(dx² + dt) with the constant measured by the harness staying O(1)
    assert study.constant < 3.0
    assert study.passes(1.7)


def test_implicit_scheme_keeps_halfspace_exactly_for_q0():
    p = make_params(0.0)
    h = halfspace(p)
    u = solve_cauchy(h, SolverConfig(scheme="implicit_euler", bc=h), BOX, (33, 65))
    ref = exact_sample(h, BOX, (33, 65))
    assert np.max(np.abs(u.values - ref.values)) < 1e-12


def test_solver_is_deterministic():
    p = make_params(0.5)
    th = time_flat(p)
    runs = [solve_cauchy(th, SolverConfig(bc=th), ((-2.0, -1.0), (-1.0, 1.0)), (33, 33)) for _ in range(2)]
    assert runs[0].values.tobytes() == runs[1].values.tobytes()


@settings(max_examples=15)
@given(st.floats(0.0, 0.9), st.lists(st.tuples(st.floats(-0.8, 0.8), st.floats(0.0, 1.0)), min_size=1,
                                     max_size=4))
def test_nonnegative_scalar_data_stays_nonnegative(q, bumps):
    p = make_params(q, 1, 1)
    x = np.linspace(-1, 1, 33)
    data = sum(a * np.exp(-20 * (x - c) ** 2) for c, a in bumps)[:, None]
    u = solve_cauchy(data, SolverConfig(), BOX, (17, 33), p)
    assert np.min(u.values) >= 0.0


# -- elliptic minimizer -----------------------------------------------------------------


def test_zero_trace_gives_zero_minimizer():
    p = make_params(0.0)
    res = minimize_elliptic(lambda x: np.zeros((len(x), 2)), p)
    assert res.energy == 0.0 and not np.any(res.field.values)


@pytest.mark.parametrize("q", [0.0, 0.5])
def test_descent_energy_is_monotone(q):
    p = make_params(q, 2, 2)
    mesh = ball_mesh(2, 16, 32)
    res = minimize_elliptic(lambda x: 1.1 * p.alpha * np.maximum(x[:, :1], 0) ** p.kappa * [1.0, 0.0], p,
                            mesh=mesh)
    assert np.all(np.diff(res.history) <= 1e-15 * abs(res.history[0]))


def test_halfspace_trace_does_not_beat_halfspace_energy_at_two_resolutions():
    p = make_params(0.0)

    def trace(x):
        return p.alpha * np.maximum(x[:, :1], 0.0) ** 2 * np.array([1.0, 0.0])

    M_h = 1.0 / 6.0  # ∫₀¹ (αkx)² + 2αx² dx - κα² at α = 1/2, κ = 2
    values = []
    for rings in (64, 128):
        mesh = ball_mesh(1, rings)
        res = minimize_elliptic(trace, p, mesh=mesh, config=DescentConfig())
        values.append(elliptic_M(res.field, p.q))
    assert values[0] <= M_h + 1e-3 and values[1] <= M_h + 1e-3
    assert abs(values[0] - values[1]) < 1e-3


def test_descent_accepts_source_term():
    p = make_params(0.0, 1, 1)
    mesh = ball_mesh(1, 32)
    g = sample_on_ball(lambda x: -np.ones((len(x), 1)), mesh)
    res = minimize_elliptic(lambda x: np.zeros((len(x), 1)), p, source=g, mesh=mesh)
    # J = ∫ |v'|² + 2|v| - 2v >= 0 with zero trace, so the minimizer is 0
    assert np.max(np.abs(res.field.values)) < 1e-6


# -- forward uniqueness curve -------------------------------------------------------------


def test_uniqueness_curve_of_identical_fields_is_zero():
    u = exact_sample(halfspace(make_params(0.0)), BOX, (9, 17))
    c = uniqueness_decay_check(u, u, (-1.0, 0.0))
    assert not np.any(c.values)


def test_uniqueness_curve_for_different_data_is_reported():
    p = make_params(0.0)
    u = exact_sample(halfspace(p), BOX, (9, 17))
    v = exact_sample(time_flat(p), BOX, (9, 17))
    c = uniqueness_decay_check(u, v, (-1.0, 0.0))
    assert len(c) == 8 and np.all(np.isfinite(c.values)) and c.values[-1] > 0


def test_uniqueness_curve_rejects_mismatched_grids():
    p = make_params(0.0)
    u = exact_sample(halfspace(p), BOX, (9, 17))
    v = exact_sample(halfspace(p), BOX, (9, 9))
    with pytest.raises(ShapeError):
        uniqueness_decay_check(u, v, (-1.0, 0.0))


def test_twin_runs_nonincreasing_within_discretization():
    p = make_params(0.0, 1, 1)
    h = halfspace(p)
    x = np.linspace(-1, 1, 129)
    data = h.value(x[:, None], -1.0) + 0.05 * np.exp(-40 * (x[:, None] - 0.4) ** 2)
    a = solve_cauchy(data, SolverConfig(bc=h), BOX, (65, 129), p)
    b = solve_cauchy(data, SolverConfig(bc=h), BOX, (129, 129), p)
    curve = uniqueness_decay_check(a, subsample_time(b, 2), (-1.0, 0.0))
    dx = 2 / 128
    assert nonincrease_defect(curve) <= (dx * dx + dx) ** 2
