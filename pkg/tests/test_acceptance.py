"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary under "acceptance criteria".
"""
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from fbl1_minimal import read_fbl1, write_fbl1
from fblab.cli import decode_snapshot, encode_snapshot, load_snapshot, save_snapshot
from fblab.core import SpaceTimeField, SpaceTimePoint, make_params
from fblab.core import _target_grid
from fblab.errors import ContractError
from fblab.fbanalysis import (classify_point, epiperimetric_test, extract_fb, growth_fit, is_free_boundary_point,
                              nondegeneracy_fit)
from fblab.functionals import (Cutoff, HalfspaceFit, almgren_curve, energy_constants, weiss, weiss_curve)
from fblab.kernels import (caloric, caloric_basis, caloric_pointwise_bound, exact_sample, halfspace,
                           ou_halfline_spectrum, random_bump_field, slab_integral, time_flat, weighted_poincare,
                           weiss_quadratic_invariance)
from fblab.kernels.caloric import Polynomial
from fblab.solver import (SolverConfig, convergence_study, nonincrease_defect, solve_cauchy, subsample_time,
                          uniqueness_decay_check)


def _elapsed(fn, repeat=1):
    best, out = math.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


# ---------------------------------------------------------------- 1


def test_01_constants(verdicts):
    c, secs = _elapsed(lambda: energy_constants(0.0), repeat=20)
    ok = abs(c.A_q - 3.75) <= 1e-10 and abs(c.M_theta - 7.5) <= 1e-10 and secs < 1e-3
    verdicts.record(1, "energy constants at q=0", ok,
                    f"A_q={c.A_q!r} M_theta={c.M_theta!r} time={secs * 1e6:.1f}us")
    assert ok


# ---------------------------------------------------------------- 2


def test_02_slab_integral_of_one(verdicts):
    vals = {}

    def run():
        for n in (1, 2):
            vals[n] = slab_integral(lambda x, t: np.ones(x.shape[:-1]), -4.0, -1.0, n=n).value

    _, secs = _elapsed(run)
    ok = all(abs(v - 3.0) <= 1e-6 for v in vals.values()) and secs < 1.0
    verdicts.record(2, "slab integral of 1 over (-4,-1)", ok,
                    " ".join(f"n={n}:{abs(v - 3):.1e}" for n, v in vals.items()) + f" time={secs:.3f}s")
    assert ok


# ---------------------------------------------------------------- 3


def test_03_weiss_of_halfspace(verdicts):
    radii = (0.125, 0.25, 0.5, 1.0)
    worst, spread = 0.0, 0.0

    def run():
        nonlocal worst, spread
        for n in (1, 2):
            h = halfspace(make_params(0.0, n, 2))
            vals = np.array([weiss(h, r).value for r in radii])
            worst = max(worst, float(np.max(np.abs(vals - 3.75))))
            spread = max(spread, float(np.ptp(vals)))

    _, secs = _elapsed(run)
    ok = worst <= 1e-2 and spread <= 2e-2 and secs < 10
    verdicts.record(3, "Weiss energy of h is 15/4 at dyadic radii", ok,
                    f"max|W-3.75|={worst:.2e} spread={spread:.2e} time={secs:.2f}s")
    assert ok


# ---------------------------------------------------------------- 4


def test_04_weiss_of_time_flat(verdicts):
    w0 = weiss(time_flat(make_params(0.0)), 1.0).value
    p = make_params(0.5)
    w5 = weiss(time_flat(p), 1.0).value
    target = energy_constants(p).M_theta
    ok = abs(w0 - 7.5) <= 1e-2 and abs(w5 - target) <= 1e-2
    verdicts.record(4, "Weiss energy of theta matches M_theta", ok,
                    f"q=0: {w0:.8f}; q=1/2: {w5:.8f} vs {target:.8f}")
    assert ok


# ---------------------------------------------------------------- 5


def test_05_ou_spectrum(verdicts):
    vals, secs = _elapsed(lambda: ou_halfline_spectrum(2, 2000, 12.0))
    ok = abs(vals[0] - 1) <= 1e-2 and abs(vals[1] - 3) <= 1e-2 and secs < 5
    verdicts.record(5, "half-line OU spectrum starts (1, 3)", ok,
                    f"lambda={vals[0]:.6f},{vals[1]:.6f} time={secs:.2f}s")
    assert ok


# ---------------------------------------------------------------- 6


def test_06_almgren(verdicts):
    radii = [0.125, 0.25, 0.5, 1.0]

    def run():
        p2 = make_params(0.0, 2, 1)
        prod = almgren_curve(caloric(p2, {(0, 1, 1): 1.0}, [1.0]), radii)
        p1 = make_params(0.0, 1, 1)
        mixed = almgren_curve(caloric(p1, {(0, 1): 1.0, (0, 2): 1.0, (1, 0): 2.0}, [1.0]), radii)
        return prod, mixed

    (prod, mixed), secs = _elapsed(run)
    err = float(np.max(np.abs(prod.values - 1.0)))
    defect = mixed.monotonicity_defect()
    ok = err <= 1e-3 and defect < 1e-3 and secs < 10
    verdicts.record(6, "Almgren frequency: x1x2 constant, x1+x1^2+2t nondecreasing", ok,
                    f"max|N-1|={err:.1e} defect={defect:.1e} N={np.round(mixed.values, 4).tolist()} "
                    f"time={secs:.2f}s")
    assert ok


# ---------------------------------------------------------------- 7


def test_07_solver_convergence(verdicts):
    lines, ok = [], True

    def run():
        nonlocal ok
        for q in (0.0, 0.5):
            p = make_params(q)
            for name, sol in (("h", halfspace(p)), ("theta", time_flat(p))):
                study = convergence_study(sol, (-4.0, -1.0), (-1.0, 1.0), cells=32, levels=3)
                ok &= study.passes(1.7)
                lines.append(f"{name}@q={q:g}:" + "/".join(f"{r:.2f}" for r in study.ratios))

    _, secs = _elapsed(run)
    ok = bool(ok) and secs < 120
    verdicts.record(7, "solver error halves (>=1.7x) under joint refinement", ok,
                    " ".join(lines) + f" time={secs:.1f}s")
    assert ok


# ------------------------------------------------------------- 8, 9


@pytest.fixture(scope="module")
def perturbed_field():
    """n=1, q=0 solve from half-space data plus a bump; the boundary keeps h."""
    p = make_params(0.0, 1, 2)
    h = halfspace(p)

    def data(x):
        return h.value(x, -1.0) + 0.05 * np.exp(-40 * (x[..., 0] - 0.4) ** 2)[..., None] * np.array([1.0, 0.0])

    N = 1024
    return solve_cauchy(data, SolverConfig(bc=h, scheme="implicit_euler"), ((-1.0, 0.0), (-1.0, 1.0)),
                        (N + 1, N + 1), p)


@pytest.fixture(scope="module")
def final_fb_point(perturbed_field):
    fb = extract_fb(perturbed_field)
    idx = fb.at_time(0.0)
    assert len(idx) == 1
    return fb.located[idx[0]]


RADII = 0.25 * 0.5 ** np.arange(6)[::-1]


def test_08_localized_weiss_monotone(verdicts, perturbed_field, final_fb_point):
    curve = weiss_curve(perturbed_field, RADII, final_fb_point, eta=Cutoff())
    drops = -np.diff(curve.totals)
    allowed = 3 * np.maximum(curve.errors[:-1], curve.errors[1:])
    ok = bool(np.all(drops <= allowed))
    worst = float(np.max(drops - allowed))
    verdicts.record(8, "localized Weiss + F nondecreasing on the solver field", ok,
                    f"point={final_fb_point.x[0]:+.4f} worst(drop-3err)={worst:.2e} "
                    f"W+F[0:3]={np.round(curve.totals[:3], 5).tolist()}")
    assert ok


def test_09_growth_and_nondegeneracy(verdicts, perturbed_field, final_fb_point):
    u, X0 = perturbed_field, final_fb_point
    label = classify_point(u, X0, radii=RADII).label
    fit = growth_fit(u, X0, RADII)
    c_hat = nondegeneracy_fit(u, X0, RADII)
    ok = label == "Regular" and abs(fit.exponent - 2.0) <= 0.1 and c_hat > 0 and fit.doubling_ok
    verdicts.record(9, "growth exponent, nondegeneracy and doubling at a Regular point", ok,
                    f"label={label} exponent={fit.exponent:.4f} c_hat={c_hat:.4f} "
                    f"doubling max ratio={float(np.max(fit.doubling_ratios)):.4f}")
    assert ok


# ---------------------------------------------------------------- 10


def test_10_classification(verdicts):
    p = make_params(0.0, 1, 2)
    regular = classify_point(halfspace(p), SpaceTimePoint((0.0,), 0.0))
    box, shape = ((-1.0, 0.25), (-1.0, 1.0)), (201, 65)
    T, X = _target_grid(box, shape)
    theta_field = SpaceTimeField(p, box, shape, time_flat(p).value(X, T))
    nonreg = classify_point(theta_field, SpaceTimePoint((0.0,), 0.0), radii=0.1 * 0.5 ** np.arange(5)[::-1])
    try:
        classify_point(time_flat(p), SpaceTimePoint((0.0,), -0.5))
        rejected = False
    except ContractError:
        rejected = True
    ok = (regular.label == "Regular" and nonreg.label == "NonRegular" and abs(nonreg.limit - 7.5) <= 0.1
          and rejected)
    verdicts.record(10, "Regular at the half-space point, NonRegular on theta", ok,
                    f"h: {regular.label} ({regular.limit:.5f}); theta: {nonreg.label} ({nonreg.limit:.5f}); "
                    f"theta at t<0 rejected={rejected}")
    assert ok


# ---------------------------------------------------------------- 11


def _descent_oracle(q, amplitude, cells):
    """Minimize the discrete 1-D energy of w >= 0 with w(-1)=0, w(1)=amplitude by L-BFGS-B; return M."""
    kappa = 2 / (1 - q)
    x = np.linspace(-1.0, 1.0, cells + 1)
    hx = x[1] - x[0]
    trap = np.ones(cells + 1)
    trap[[0, -1]] = 0.5
    g = 2 / (1 + q)

    def energy(w):
        full = np.concatenate([[0.0], w, [amplitude]])
        d = np.diff(full) / hx
        pos = np.maximum(full, 0.0)
        E = hx * np.sum(d * d) + g * hx * np.sum(trap * pos ** (1 + q))
        grad = np.zeros_like(full)
        grad[:-1] -= 2 * d
        grad[1:] += 2 * d
        grad += g * (1 + q) * hx * trap * pos ** q
        return E, grad[1:-1]

    w0 = amplitude * np.maximum(x[1:-1], 0.0) ** kappa
    res = minimize(energy, w0, jac=True, method="L-BFGS-B", bounds=[(0.0, None)] * len(w0),
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 100000, "maxcor": 30})
    return res.fun - kappa * amplitude ** 2


def test_11_epiperimetric(verdicts):
    parts, ok = [], True
    for q in (0.0, 0.5):
        p = make_params(q, 1, 2)
        for s in (0.95, 1.05):
            def trace(x, s=s):
                return s * p.alpha * np.maximum(x[..., 0], 0.0)[..., None] ** p.kappa * np.array([1.0, 0.0])

            res = epiperimetric_test(trace, HalfspaceFit([1.0], [1.0, 0.0], 0.0, "ball_L2"), p)
            cells = len(res.minimizer.field.mesh.nodes) - 1
            ref = _descent_oracle(q, s * p.alpha, 2 * cells)
            gap = abs(res.M_v - ref)
            good = res.eps_achieved is not None and res.eps_achieved > 0 and gap <= 1e-3
            ok &= good
            parts.append(f"q={q:g},s={s}:eps={res.eps_achieved} |M(v)-oracle|={gap:.1e}")
    verdicts.record(11, "epiperimetric improvement for (1 +- 0.05) h traces", ok, "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- 12


def test_12_appendix_identities(verdicts):
    t_start = time.perf_counter()
    detail = []

    # (a) twin solves differing only in dt; the curve should be nonincreasing up to
    # a defect that vanishes faster than the discretization scale
    p1 = make_params(0.0, 1, 1)
    h = halfspace(p1)

    def data(x):
        return h.value(x, -1.0) + 0.05 * np.exp(-40 * (x - 0.4) ** 2)

    defects, ok_a = [], True
    for N in (64, 128, 256):
        dx = 2 / N
        box = ((-1.0, 0.0), (-1.0, 1.0))
        a = solve_cauchy(data, SolverConfig(bc=h), box, (N // 2 + 1, N + 1), p1)
        b = solve_cauchy(data, SolverConfig(bc=h), box, (N + 1, N + 1), p1)
        curve = uniqueness_decay_check(a, subsample_time(b, 2), (-1.0, 0.0))
        d = nonincrease_defect(curve)
        defects.append(d)
        ok_a &= d <= (dx * dx + dx) ** 2
    ok_a &= all(c >= 2 * f for c, f in zip(defects[:-1], defects[1:]))
    detail.append("(a) defects " + "/".join(f"{d:.1e}" for d in defects))

    # (b) weighted Poincare on 20 seeded bump fields
    rng = np.random.default_rng(12)
    checks = [weighted_poincare(random_bump_field(rng, 2, 2), -0.5, 2) for _ in range(20)]
    ok_b = all(c.holds for c in checks)
    detail.append(f"(b) {sum(c.holds for c in checks)}/20")

    # (c) caloric pointwise bound on the basis through degree 2
    pts = rng.uniform(-1.0, 1.0, size=(16, 2))

    class Poly:
        def __init__(self, poly):
            self.poly = poly

        def value(self, x, t):
            return self.poly.value(x, t)

    basis = caloric_basis(2, 2)
    cal = [caloric_pointwise_bound(Poly(b), -1.0, -0.25, pts) for b in basis]
    ok_c = all(c.holds for c in cal)
    detail.append(f"(c) {sum(c.holds for c in cal)}/{len(cal)}")

    # (d) quadratic Weiss parts of p - u and u agree for p = x1^2 + 2t
    pq = Polynomial.from_terms({(0, 2, 0): 1.0, (1, 0, 0): 2.0}, 2, np.array([1.0, 0.0]))

    class Static:
        def __init__(self, w):
            self.w = w

        def value(self, x, t):
            return self.w.value(x)

        def gradient(self, x, t):
            return self.w.gradient(x)

    class PolyField(Poly):
        def gradient(self, x, t):
            return self.poly.gradient(x, t)

    ok_d, gaps = True, []
    for _ in range(3):
        w = random_bump_field(rng, 2, 2, spread=1.0)
        lhs, rhs, err = weiss_quadratic_invariance(PolyField(pq), Static(w), -1.0, -0.25, 2.0, 2)
        gaps.append(abs(lhs - rhs))
        ok_d &= abs(lhs - rhs) <= err + 1e-10 * max(1.0, abs(rhs))
    detail.append("(d) gaps " + "/".join(f"{g:.1e}" for g in gaps))

    secs = time.perf_counter() - t_start
    ok = bool(ok_a and ok_b and ok_c and ok_d and secs < 60)
    verdicts.record(12, "appendix identity suite", ok, " ".join(detail) + f" time={secs:.1f}s")
    assert ok


# ---------------------------------------------------------------- 13


def test_13_persistence(verdicts, tmp_path):
    p = make_params(0.5, 2, 3)
    u = exact_sample(time_flat(p), ((-1.0, -0.1), (-1.0, 1.0), (0.0, 2.0)), (5, 7, 6))
    u = SpaceTimeField(p, u.box, u.shape, u.values + np.linspace(0, 1, u.values.size).reshape(u.values.shape))
    path = tmp_path / "a.fbl"
    save_snapshot(u, path)
    back = load_snapshot(path)
    bit_identical = back.values.tobytes() == u.values.tobytes() and back.box == u.box and back.params == u.params

    # our writer -> their reader, and their writer -> our reader
    mine = tmp_path / "b.fbl"
    write_fbl1(mine, p.q, p.n, p.m, u.box, u.shape, u.values.ravel().tolist())
    theirs_reads = load_snapshot(mine)
    forward = theirs_reads.values.tobytes() == u.values.tobytes()
    ours_reads = read_fbl1(path)
    backward = (ours_reads["samples"] == u.values.ravel().tolist() and ours_reads["shape"] == list(u.shape)
                and ours_reads["box"] == [tuple(b) for b in u.box] and ours_reads["q"] == p.q)
    same_bytes = mine.read_bytes() == encode_snapshot(u) and decode_snapshot(mine.read_bytes()).shape == u.shape
    ok = bit_identical and forward and backward and same_bytes
    verdicts.record(13, "snapshot round trip and independent FBL1 implementation", ok,
                    f"round trip={bit_identical} minimal->lib={forward} lib->minimal={backward} "
                    f"bytes equal={same_bytes}")
    assert ok
