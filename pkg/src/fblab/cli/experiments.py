"""Named experiments. Each returns an Outcome; the runner writes its table."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..core import BallField, SpaceTimeField, SpaceTimePoint, ball_mesh, make_params
from ..errors import ContractError, DegenerateError, DomainError
from ..fbanalysis import (blowup_sequence, classify_point, epiperimetric_test, extract_fb, growth_fit,
                          is_free_boundary_point, nondegeneracy_fit, support_slab_check, time_derivative_decay,
                          vanishing_order)
from ..functionals import (Cutoff, HalfspaceFit, almgren_curve, dist_to_H, elliptic_M, energy_constants, weiss,
                           weiss_curve)
from ..kernels import (caloric, caloric_basis, caloric_pointwise_bound, exact_sample, halfspace, heat_kernel,
                       ou_halfline_spectrum, random_bump_field, slab_integral, time_flat,
                       weighted_poincare, weiss_quadratic_invariance)
from ..kernels.caloric import Polynomial
from ..solver import SolverConfig, solve_cauchy
from .config import ConfigError, ExperimentConfig
from .snapshot import decode_snapshot, encode_snapshot, load_snapshot


@dataclass
class Outcome:
    columns: list
    rows: list
    summary: str
    ok: bool = True
    failure: str = ""
    artifacts: list = field(default_factory=list)


def _scalar_expect(cfg, default=None):
    exp = cfg.run.get("expect")
    if exp is None:
        return default
    if len(exp) != 1:
        raise ConfigError("run.expect takes a single number for this experiment", cfg.line_of("run", "expect"))
    return exp[0]


def _profile(name, params, perturbation=0.05):
    if name == "halfspace":
        return halfspace(params)
    if name == "time_flat":
        return time_flat(params)
    if name == "zero":
        return lambda x, t=None: np.zeros(np.shape(x)[:-1] + (params.m,))
    if name == "perturbed_halfspace":
        h = halfspace(params)

        def data(x, t=None):
            t = -1.0 if t is None else t
            bump = perturbation * np.exp(-40 * (x[..., 0] - 0.4) ** 2)
            return h.value(x, t) + bump[..., None] * np.eye(params.m)[0]
        return data
    raise DomainError(f"unknown profile {name!r}")


def run_solver(cfg: ExperimentConfig) -> SpaceTimeField:
    s = cfg.solver
    params = cfg.params
    init_name = s["initial"]
    bc_name = s.get("bc", "halfspace" if init_name == "perturbed_halfspace" else init_name)
    box, shape = cfg.grid["box"], cfg.grid["shape"]
    initial = _profile(init_name, params, s.get("perturbation", 0.05))
    if init_name == "perturbed_halfspace":
        t_start = box[0][0]
        base = initial
        initial = lambda x: base(x, t_start)  # noqa: E731
    elif init_name == "zero":
        base = initial
        initial = lambda x: base(x)  # noqa: E731
    bc = _profile(bc_name, params)
    if bc_name == "zero":
        bc = None
    kwargs = {k: s[k] for k in ("dt", "scheme", "reaction_floor", "max_newton_iters", "linear_tol") if k in s}
    return solve_cauchy(initial, SolverConfig(bc=bc, **kwargs), box, shape, params)


def load_source(cfg: ExperimentConfig):
    src = cfg.run["source"]
    if src == "snapshot":
        return load_snapshot(cfg.io["input"])
    if src == "solve":
        return run_solver(cfg)
    return _profile(src, cfg.params)


def _point(cfg, u):
    pt = cfg.run.get("point")
    n = u.params.n
    if pt is None:
        t = u.box[0][1] if isinstance(u, SpaceTimeField) else 0.0
        return SpaceTimePoint(tuple([0.0] * n), t)
    return SpaceTimePoint(tuple(pt[:-1]), pt[-1])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- experiments --------------------------------------------------------------


def exp_constants(cfg, executor=None):
    p = cfg.params
    c = energy_constants(p)
    rule = cfg.quadrature
    ph = make_params(p.q, 1, p.m)
    W_h = weiss(halfspace(ph), 1.0, None, rule).value
    W_th = weiss(time_flat(ph), 1.0, None, rule).value
    tol = cfg.run.get("tolerance", 1e-8)
    rows = [("A_q", c.A_q, W_h, abs(c.A_q - W_h)), ("M_theta", c.M_theta, W_th, abs(c.M_theta - W_th))]
    ok = all(r[3] <= tol for r in rows)
    failure = "" if ok else f"closed form vs quadrature differ by {max(r[3] for r in rows):.3e} > {tol}"
    exp = cfg.run.get("expect")
    if exp is not None:
        if len(exp) != 2:
            raise ConfigError("constants: run.expect takes 'A_q M_theta'", cfg.line_of("run", "expect"))
        etol = cfg.run.get("tolerance", 1e-10)
        bad = [(name, val, e) for (name, val, _, _), e in zip(rows, exp) if abs(val - e) > etol]
        if bad:
            ok = False
            failure = "; ".join(f"{n}={v!r} expected {e!r}" for n, v, e in bad)
    summary = f"A_q={c.A_q:.10g} M_theta={c.M_theta:.10g} (q={p.q:g})"
    return Outcome(["quantity", "closed_form", "quadrature", "difference"], rows, summary, ok, failure)


def exp_solve(cfg, executor=None):
    u = run_solver(cfg)
    rows = []
    reference = cfg.solver.get("bc", cfg.solver["initial"])
    exact = None
    if cfg.solver["initial"] in ("halfspace", "time_flat") and reference == cfg.solver["initial"]:
        exact = _profile(reference, cfg.params)
    T, X = u.mesh()
    errs = None
    if exact is not None:
        errs = np.max(np.linalg.norm(u.values - exact.value(X, T), axis=-1).reshape(u.shape[0], -1), axis=1)
    sup = np.max(u.norm().reshape(u.shape[0], -1), axis=1)
    for k, t in enumerate(u.times):
        rows.append((float(t), float(sup[k]), None if errs is None else float(errs[k])))
    artifacts = []
    if "snapshot" in cfg.io:
        artifacts.append(cfg.io["snapshot"])
    ok, failure = True, ""
    expect = _scalar_expect(cfg)
    if expect is not None:
        if errs is None:
            raise ConfigError("run.expect (max error) needs an exact initial/bc profile", cfg.line_of("run", "expect"))
        if float(np.max(errs)) > expect:
            ok, failure = False, f"max error {float(np.max(errs)):.3e} > {expect:g}"
    summary = f"solved {u.shape[0] - 1} steps on {u.shape[1:]} nodes, sup|u|={float(sup[-1]):.6g}"
    if errs is not None:
        summary += f", max error vs exact {float(np.max(errs)):.3e}"
    out = Outcome(["t", "sup_abs_u", "max_error"], rows, summary, ok, failure, artifacts)
    out.field = u
    return out


def exp_weiss(cfg, executor=None):
    u = load_source(cfg)
    X0 = _point(cfg, u)
    eta = Cutoff() if cfg.run.get("cutoff") else None
    curve = weiss_curve(u, cfg.run["radii"], X0, cfg.quadrature, eta, executor)
    rows = [(r, v, c, v + c, e) for r, v, c, e in zip(curve.radii, curve.values, curve.corrections, curve.errors)]
    ok, fails = True, []
    expect = _scalar_expect(cfg)
    if expect is not None:
        tol = cfg.run.get("tolerance", 1e-2)
        worst = float(np.max(np.abs(curve.values - expect)))
        if worst > tol:
            ok = False
            fails.append(f"max |W - {expect:g}| = {worst:.3e} > {tol:g}")
    if cfg.run.get("monotone"):
        defect = curve.monotonicity_defect()
        allowed = 3 * float(np.max(curve.errors))
        if defect > allowed:
            ok = False
            fails.append(f"monotonicity defect {defect:.3e} > 3 x quadrature error {allowed:.3e}")
    summary = (f"W(r) in [{float(np.min(curve.totals)):.6g}, {float(np.max(curve.totals)):.6g}] "
               f"over {len(curve)} radii at {X0}")
    return Outcome(["r", "W", "F", "W_plus_F", "quad_error"], rows, summary, ok, "; ".join(fails))


def parse_terms(text: str, n: int) -> dict:
    """'x1 + x1^2 + 2*t' -> {(t_pow, x1_pow, ...): coefficient}."""
    terms = {}
    cleaned = text.replace(" ", "").replace("-", "+-")
    for chunk in filter(None, cleaned.split("+")):
        coef, exps = 1.0, [0] * (n + 1)
        for factor in chunk.split("*"):
            m = re.fullmatch(r"(t|x(\d+))(?:\^(\d+))?", factor.lstrip("-"))
            sign = -1.0 if factor.startswith("-") else 1.0
            if m:
                power = int(m.group(3) or 1)
                axis = 0 if m.group(1) == "t" else int(m.group(2))
                if not 0 <= axis <= n:
                    raise ValueError(f"variable {m.group(1)} outside n = {n}")
                exps[axis] += power
                coef *= sign
            else:
                coef *= float(factor)
        key = tuple(exps)
        terms[key] = terms.get(key, 0.0) + coef
    return terms


def exp_almgren(cfg, executor=None):
    p = cfg.params
    try:
        terms = parse_terms(cfg.run["terms"], p.n)
    except ValueError as exc:
        raise ConfigError(f"run.terms: {exc}", cfg.line_of("run", "terms")) from None
    try:
        h = caloric(p, terms, np.eye(p.m)[0])
    except DomainError as exc:
        raise ConfigError(f"run.terms: {exc}", cfg.line_of("run", "terms")) from None
    X0 = SpaceTimePoint(tuple(cfg.run["point"][:-1]), cfg.run["point"][-1]) if "point" in cfg.run else None
    curve = almgren_curve(h, cfg.run["radii"], X0, cfg.quadrature)
    rows = list(zip(curve.radii, curve.values))
    ok, fails = True, []
    tol = cfg.run.get("tolerance", 1e-3)
    expect = _scalar_expect(cfg)
    if expect is not None and float(np.max(np.abs(curve.values - expect))) > tol:
        ok = False
        fails.append(f"max |N - {expect:g}| = {float(np.max(np.abs(curve.values - expect))):.3e} > {tol:g}")
    if cfg.run.get("monotone") and curve.monotonicity_defect() >= tol:
        ok = False
        fails.append(f"frequency decreases by {curve.monotonicity_defect():.3e}")
    summary = f"N(r) in [{float(np.min(curve.values)):.6g}, {float(np.max(curve.values)):.6g}]"
    return Outcome(["r", "N"], rows, summary, ok, "; ".join(fails))


def exp_growth(cfg, executor=None):
    u = load_source(cfg)
    X0 = _point(cfg, u)
    fit = growth_fit(u, X0, cfg.run["radii"])
    rows = list(zip(fit.radii, fit.sups))
    ok, fails = True, []
    expect = _scalar_expect(cfg)
    if expect is not None and abs(fit.exponent - expect) > cfg.run.get("tolerance", 0.1):
        ok = False
        fails.append(f"growth exponent {fit.exponent:.4f} vs {expect:g}")
    if cfg.run.get("doubling") and not fit.doubling_ok:
        ok = False
        fails.append("doubling condition fails")
    summary = f"exponent={fit.exponent:.6g} C_hat={fit.C_hat:.6g} doubling={'ok' if fit.doubling_ok else 'fails'}"
    return Outcome(["r", "sup_abs_u"], rows, summary, ok, "; ".join(fails))


def exp_blowup(cfg, executor=None):
    u = load_source(cfg)
    X0 = _point(cfg, u)
    radii = np.sort(np.asarray(cfg.run["radii"]))[::-1]
    seq = blowup_sequence(u, X0, radii, cfg.run.get("time", -0.25))
    rows = list(zip(seq.radii[1:], seq.differences))
    rate = "none" if seq.rate is None else f"{seq.rate:.4g}"
    return Outcome(["r", "l1_difference"], rows, f"{len(rows)} consecutive differences, fitted rate {rate}")


def exp_classify(cfg, executor=None):
    u = load_source(cfg)
    radii = cfg.run.get("radii")
    if "point" in cfg.run or not isinstance(u, SpaceTimeField):
        points = [_point(cfg, u)]
    else:
        sample = extract_fb(u)
        idx = sample.at_time(u.box[0][1])
        points = [sample.located[i] for i in idx][:16]
        if not points:
            return Outcome(["t", "label"], [], "no free-boundary points at the final time", False,
                           "no free-boundary points to classify")

    def one(P):
        try:
            c = classify_point(u, P, cfg.quadrature, radii)
            return P, c.label, c.limit, c.band, c.A_q
        except (ContractError, DegenerateError, DomainError) as exc:
            return P, f"error: {exc}", None, None, None

    mapper = executor.map if executor is not None else map
    results = list(mapper(one, points))
    n = u.params.n
    rows = [tuple(P.x) + (P.t, label, lim, band, A) for P, label, lim, band, A in results]
    labels = [r[1] for r in results]
    ok, failure = True, ""
    want = cfg.run.get("expect_label")
    if want is not None and any(lb != want for lb in labels):
        ok, failure = False, f"labels {labels} != {want}"
    summary = ", ".join(f"{lb}" + (f" (W0+={lim:.6g})" if lim is not None else "") for _, lb, lim, _, _ in results)
    cols = [f"x{i + 1}" for i in range(n)] + ["t", "label", "weiss_limit", "band", "A_q"]
    return Outcome(cols, rows, summary, ok, failure)


def exp_epiperimetric(cfg, executor=None):
    p = cfg.params
    scale = cfg.run.get("scale", 1.05)
    rings = cfg.run.get("rings", 64 if p.n == 1 else 32)
    mesh = ball_mesh(p.n, rings, cfg.run.get("sectors", 72) if p.n == 2 else None)
    nu = np.eye(p.n)[-1]
    e = np.eye(p.m)[0]
    trace = lambda x: scale * p.alpha * np.maximum(x @ nu, 0.0)[..., None] ** p.kappa * e  # noqa: E731
    res = epiperimetric_test(trace, HalfspaceFit(nu, e, 0.0, "ball_L2"), p, mesh=mesh)
    rows = [(scale, res.M_c, res.M_v, res.M_h, res.eps_achieved, res.relative_improvement, res.closeness)]
    ok, failure = True, ""
    expect = _scalar_expect(cfg)
    if expect is not None and (res.eps_achieved is None or not res.eps_achieved > expect):
        ok, failure = False, f"eps_achieved={res.eps_achieved} not above {expect:g}"
    eps = "degenerate" if res.eps_achieved is None else f"{res.eps_achieved:.6g}"
    summary = f"M(c)={res.M_c:.8g} M(v)={res.M_v:.8g} M(h)={res.M_h:.8g} eps={eps}"
    return Outcome(["scale", "M_c", "M_v", "M_h", "eps_achieved", "relative_improvement", "closeness"], rows,
                   summary, ok, failure)


def exp_spectrum(cfg, executor=None):
    k = cfg.run["k"]
    vals = ou_halfline_spectrum(k, cfg.run.get("spectrum_grid", 2000), cfg.run.get("truncation", 12.0))
    rows = [(i + 1, v) for i, v in enumerate(vals)]
    ok, failure = True, ""
    exp = cfg.run.get("expect")
    if exp is not None:
        tol = cfg.run.get("tolerance", 1e-2)
        if len(exp) > len(vals):
            raise ConfigError("run.expect lists more eigenvalues than run.k", cfg.line_of("run", "expect"))
        bad = [(i + 1, vals[i], e) for i, e in enumerate(exp) if abs(vals[i] - e) > tol]
        if bad:
            ok, failure = False, "; ".join(f"lambda_{i}={v:.6g} expected {e:g}" for i, v, e in bad)
    return Outcome(["index", "eigenvalue"], rows, "eigenvalues " + " ".join(f"{v:.6g}" for v in vals), ok,
                   failure)


def exp_identities(cfg, executor=None):
    p = cfg.params
    n = p.n
    rng = np.random.default_rng(cfg.seed)
    t = cfg.run.get("time", -0.5)
    rows = []
    for i in range(cfg.run.get("fields", 20)):
        w = random_bump_field(rng, n, p.m)
        chk = weighted_poincare(w, t, n, cfg.quadrature)
        rows.append(("weighted_poincare", i, chk.lhs, chk.rhs, chk.err, chk.holds))
    pts = rng.uniform(-1.0, 1.0, size=(16, n))
    for i, poly in enumerate(caloric_basis(cfg.run.get("degree", 2), n)):
        chk = caloric_pointwise_bound(_PolyField(poly), -1.0, -0.25, pts, cfg.quadrature)
        rows.append(("caloric_pointwise_bound", i, chk.lhs, chk.rhs, chk.err, chk.holds))
    kappa = 2.0
    terms = {(0, 2) + (0,) * (n - 1): 1.0, (1,) + (0,) * n: 2.0}
    pq = _PolyField(Polynomial.from_terms(terms, n, np.eye(p.m)[0]))
    for i in range(3):
        w = random_bump_field(rng, n, p.m, spread=1.0)
        lhs, rhs, err = weiss_quadratic_invariance(pq, _Static(w), -1.0, -0.25, kappa, n, cfg.quadrature)
        rows.append(("weiss_invariance", i, lhs, rhs, err, abs(lhs - rhs) <= err + 1e-10 * max(1.0, abs(rhs))))
    bad = [f"{r[0]}[{r[1]}]" for r in rows if not r[5]]
    summary = f"{len(rows) - len(bad)}/{len(rows)} checks hold"
    return Outcome(["check", "index", "lhs", "rhs", "error", "holds"], rows, summary, not bad,
                   "failing: " + ", ".join(bad) if bad else "")


class _PolyField:
    def __init__(self, poly):
        self.poly = poly

    def value(self, x, t):
        return self.poly.value(x, t)

    def gradient(self, x, t):
        return self.poly.gradient(x, t)


class _Static:
    def __init__(self, w):
        self.w = w

    def value(self, x, t):
        return self.w.value(x)

    def gradient(self, x, t):
        return self.w.gradient(x)


def selftest_checks():
    """(module, name, callable -> bool) for the closed-form example suite."""
    p = make_params(0.0, 1, 2)
    p2 = make_params(0.0, 2, 2)
    h, th, h2 = halfspace(p), time_flat(p), halfspace(p2)

    def raises(fn, exc):
        try:
            fn()
        except exc:
            return True
        return False

    def snapshot_roundtrip():
        u = exact_sample(h, ((-1.0, 0.0), (-1.0, 1.0)), (5, 9))
        back = decode_snapshot(encode_snapshot(u))
        return back.values.tobytes() == u.values.tobytes() and back.box == u.box

    def truncated():
        data = encode_snapshot(exact_sample(h, ((-1.0, 0.0), (-1.0, 1.0)), (3, 5)))
        return raises(lambda: decode_snapshot(data[:-3]), ValueError)

    X0 = SpaceTimePoint((0.0,), 0.0)
    radii = 0.5 ** np.arange(1, 6)
    return [
        ("core", "kappa and alpha at q=0", lambda: p.kappa == 2.0 and abs(p.alpha - 0.5) < 1e-15),
        ("kernels", "heat kernel vanishes for t >= 0", lambda: float(heat_kernel(np.zeros(1), 0.0)) == 0.0),
        ("kernels", "slab integral of 1 over (-4,-1) is 3", lambda: abs(slab_integral(1.0, -4.0, -1.0, n=1).value - 3) < 1e-6),
        ("kernels", "OU half-line spectrum starts 1, 3",
         lambda: np.allclose(ou_halfline_spectrum(2), [1.0, 3.0], atol=1e-2)),
        ("solver", "zero data stays zero", lambda: float(np.max(np.abs(solve_cauchy(
            lambda x: np.zeros(x.shape[:-1] + (2,)), SolverConfig(), ((0.0, 0.1), (-1.0, 1.0)), (5, 17), p).values))) == 0.0),
        ("functionals", "A_q and M_theta at q=0", lambda: np.allclose(list(energy_constants(0.0).as_dict().values()), [3.75, 7.5], rtol=1e-12)),
        ("functionals", "W(h, r) = 15/4", lambda: all(abs(weiss(h, r).value - 3.75) < 1e-2 for r in (0.125, 0.5, 1.0))),
        ("functionals", "W(theta, 1) = 15/2", lambda: abs(weiss(th, 1.0).value - 7.5) < 1e-2),
        ("functionals", "frequency of x1 x2 is 1", lambda: abs(almgren_curve(
            caloric(p2, {(0, 1, 1): 1.0}, [1.0, 0.0]), [0.25, 0.5]).values - 1.0).max() < 1e-3),
        ("functionals", "distance of h to the half-space class is 0",
         lambda: dist_to_H(h2).relative_distance < 1e-6),
        ("functionals", "M(h) on the unit interval is 1/6",
         lambda: abs(elliptic_M(BallField(ball_mesh(1, 64), h.value(ball_mesh(1, 64).nodes, 0.0)), 0.0) - 1 / 6) < 1e-3),
        ("fbanalysis", "nondegeneracy constant of h is alpha", lambda: abs(nondegeneracy_fit(h, X0, radii) - p.alpha) < 1e-9),
        ("fbanalysis", "growth exponent of h is kappa", lambda: abs(growth_fit(h, X0, radii).exponent - 2.0) < 1e-9),
        ("fbanalysis", "vanishing order of h is kappa", lambda: vanishing_order(h, X0, radii) == 2),
        ("fbanalysis", "h is time independent", lambda: time_derivative_decay(h, X0, radii).time_independent),
        ("fbanalysis", "blow-ups of h coincide", lambda: np.max(blowup_sequence(h, X0, radii).differences) < 1e-12),
        ("fbanalysis", "origin is a free boundary point of h", lambda: is_free_boundary_point(h, X0)),
        ("fbanalysis", "h is Regular at the origin", lambda: classify_point(h, X0).label == "Regular"),
        ("fbanalysis", "theta has no free boundary", lambda: raises(
            lambda: classify_point(th, SpaceTimePoint((0.0,), -0.5)), ContractError)),
        ("fbanalysis", "support of h lies in the slab", lambda: support_slab_check(h, 1e-6).holds),
        ("fbanalysis", "trace of h is degenerate for the epiperimetric test", lambda: epiperimetric_test(
            lambda x: h.value(x, 0.0), HalfspaceFit([1.0], [1.0, 0.0], 0.0, "ball_L2"), p).degenerate),
        ("cli", "snapshot round trip is bit identical", snapshot_roundtrip),
        ("cli", "truncated snapshot is rejected", truncated),
    ]


def exp_selftest(cfg, executor=None):
    rows = []
    for module, name, fn in selftest_checks():
        try:
            status = "PASS" if fn() else "FAIL"
        except Exception as exc:  # a crash is a failed check, reported as such
            status = f"FAIL ({type(exc).__name__}: {exc})"
        rows.append((module, name, status))
    bad = [f"{m}: {n}" for m, n, s in rows if s != "PASS"]
    return Outcome(["module", "check", "status"], rows, f"{len(rows) - len(bad)}/{len(rows)} checks pass",
                   not bad, "failing: " + "; ".join(bad) if bad else "")


EXPERIMENT_FUNCS = {
    "constants": exp_constants, "solve": exp_solve, "weiss": exp_weiss, "almgren": exp_almgren,
    "growth": exp_growth, "blowup": exp_blowup, "classify": exp_classify, "epiperimetric": exp_epiperimetric,
    "spectrum": exp_spectrum, "identities": exp_identities, "selftest": exp_selftest,
}


def format_row(row) -> str:
    return ",".join(_fmt(v) for v in row)


__all__ = ["EXPERIMENT_FUNCS", "Outcome", "format_row", "load_source", "parse_terms", "run_solver",
           "selftest_checks"]
