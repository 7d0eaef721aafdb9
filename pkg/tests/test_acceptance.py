"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""
import time

import numpy as np
import pytest

from conftest import REF_LEFT, record_criterion
from manufactured import observed_orders
from contact_duct.errors import EllipticityError, SubsonicityError
from contact_duct.farfield import H, LeftState, solve_farfield
from contact_duct.gas import GasConstants
from contact_duct.grid import build_grid
from contact_duct.picard import PicardOptions, min_dy_phi, phi_l_nodes, run
from contact_duct.pipeline import RunConfig, run_pipeline
from contact_duct.transmission import assemble_coefficients, sym2_eigenvalues
from contact_duct.verify import asymptotic_deviation, check_rh, l2_norms, mesh_size

GC = GasConstants(1.4)
LEFT = LeftState(**REF_LEFT)
FINE = dict(nx=512, ny_top=64, ny_bot=64)
SIGMAS = (0.02, 0.01, 0.005)


def perturbed(sigma: float, **kw) -> RunConfig:
    """Both walls bent and bumped, every amplitude proportional to ``sigma``."""
    base = dict(omega_plus=sigma, omega_minus=0.5 * sigma, a_plus=0.5 * sigma, a_minus=-0.25 * sigma,
                sigma=sigma, **REF_LEFT)
    base.update(kw)
    return RunConfig(**base)


class CoefficientAudit:
    """Checks symmetry and the eigenvalue floor on every frozen iterate."""

    def __init__(self):
        self.steps = 0
        self.asym = 0.0
        self.lam = np.inf

    def __call__(self, step, phi, coeff):
        self.steps += 1
        self.asym = max(self.asym, float(np.abs(coeff.a[..., 0, 1] - coeff.a[..., 1, 0]).max()))
        lo, _ = sym2_eigenvalues(coeff.a)
        self.lam = min(self.lam, float(lo.min()))


@pytest.fixture(scope="module")
def sigma_sweep():
    runs, audits = [], []
    t0 = time.perf_counter()
    for s in SIGMAS:
        audit = CoefficientAudit()
        res = run_pipeline(perturbed(s, **FINE), write=False, on_step=audit)
        assert res.status == 0, res.message
        runs.append(res)
        audits.append(audit)
    return runs, audits, time.perf_counter() - t0


def test_criterion_01_flat_duct_exact(tmp_path):
    cfg = RunConfig(**REF_LEFT, **FINE)
    t0 = time.perf_counter()
    res = run_pipeline(cfg, tmp_path / "flat")
    elapsed = time.perf_counter() - t0
    g = res.grid
    d_phi = float(np.abs(res.picard.phi.values - phi_l_nodes(g, res.ff)).max())
    d_g = float(np.abs(res.solution.g_cd).max())
    L = LEFT
    d_U = max(float(np.abs(res.solution.top.states() - [L.u_top, 0, L.p, L.rho_top]).max()),
              float(np.abs(res.solution.bottom.states() - [L.u_bot, 0, L.p, L.rho_bot]).max()))
    dev = max(d_phi, d_g, d_U)
    ok = res.status == 0 and dev <= 1e-10 and elapsed <= 5.0
    record_criterion(1, "flat duct exact", ok,
                     f"max deviation {dev:.2e} (phi {d_phi:.1e}, g_cd {d_g:.1e}, U {d_U:.1e}) <= 1e-10; "
                     f"{elapsed:.2f} s <= 5 s at 512x128")
    assert ok


def test_criterion_02_far_field():
    omegas = (-0.02, -0.01, 0.0, 0.01, 0.02)
    sols = [solve_farfield(LEFT, w, 0.0, GC) for w in omegas]
    res = max(abs(H(s.p_r, s.omega, LEFT, GC)) for s in sols)
    zero = sols[2]
    exact0 = zero.p_r == LEFT.p and zero.omega_star == 0.0
    p = [s.p_r for s in sols]
    mono = all(b > a for a, b in zip(p, p[1:]))
    sub = all(st.u**2 < GC.gamma * st.p / st.rho for s in sols for st in (s.right_top, s.right_bottom))
    ok = res <= 1e-12 and exact0 and mono and sub
    record_criterion(2, "far-field consistency", ok,
                     f"max |H| {res:.1e} <= 1e-12; omega=0 exact {exact0}; p_r increasing {mono} "
                     f"({', '.join(f'{v:.8f}' for v in p)}); right state subsonic {sub}")
    assert ok


def test_criterion_03_coefficient_structure(sigma_sweep, ff_ref, gc):
    runs, audits, _ = sigma_sweep
    steps = sum(a.steps for a in audits)
    asym = max(a.asym for a in audits)
    lam = min(a.lam for a in audits)
    # an iterate outside the subsonic neighborhood must abort with a located diagnostic
    g = build_grid(10.0, 16, 4, 4, ff_ref)
    try:
        assemble_coefficients(g.field(0.05 * phi_l_nodes(g, ff_ref)), g, ff_ref, gc)
        aborts, msg = False, "no abort"
    except (SubsonicityError, EllipticityError) as exc:
        aborts, msg = "x=" in str(exc), str(exc)
    ok = asym == 0.0 and lam > 0 and aborts and steps > 0
    record_criterion(3, "coefficient structure", ok,
                     f"{steps} iterates audited; max |a12-a21| = {asym:.1e}; lambda = {lam:.5f} > 0; "
                     f"bad iterate aborts: {msg[:60]}")
    assert ok


def test_criterion_04_rankine_hugoniot():
    coarse = run_pipeline(perturbed(0.02, nx=256, ny_top=32, ny_bot=32), write=False)
    fine = run_pipeline(perturbed(0.02, **FINE), write=False)
    vals = []
    for r in (coarse, fine):
        c = {x.name: x for x in check_rh(r.solution, r.ff)}
        vals.append((c["rh_pressure_jump"].value, c["rh_normal_velocity"].value, c["rh_tangential_jump"].value))
    rp = vals[0][0] / vals[1][0]
    rn = vals[0][1] / vals[1][1]
    need = 0.5 * abs(LEFT.u_top - LEFT.u_bot)
    tang = min(vals[0][2], vals[1][2])
    ok = rp >= 3 and rn >= 3 and tang >= need
    record_criterion(4, "R-H conditions", ok,
                     f"pressure jump {vals[0][0]:.2e} -> {vals[1][0]:.2e} (x{rp:.2f}), normal velocity "
                     f"{vals[0][1]:.2e} -> {vals[1][1]:.2e} (x{rn:.2f}), both >= 3; tangential jump "
                     f"{tang:.4f} >= {need:.2f}")
    assert ok


def test_criterion_05_conservation(sigma_sweep):
    runs, _, _ = sigma_sweep
    worst = 0.0
    ok = True
    for r in runs:
        sol, ff = r.solution, r.ff
        h = mesh_size(sol)
        fb = np.trapezoid(sol.bottom.rho * sol.bottom.u, sol.bottom.y, axis=0)
        ft = np.trapezoid(sol.top.rho * sol.top.u, sol.top.y, axis=0)
        errs = (np.abs(fb / ff.m_bot - 1), np.abs(ft / ff.m_top - 1), np.abs((fb + ft) / (ff.m_bot + ff.m_top) - 1))
        e = max(float(x.max()) for x in errs)
        worst = max(worst, e / (10 * h**2))
        ok &= e <= 10 * h**2
    record_criterion(5, "column mass conservation", ok,
                     f"max relative flux error is {worst:.2e} of the 10 h^2 bound over all columns and sigma runs")
    assert ok


def test_criterion_06_transport_invariants(sigma_sweep):
    runs, _, _ = sigma_sweep
    worst = 0.0
    g = GC.gamma
    for r in runs:
        for lf, layer in ((r.solution.top, r.ff.layer_top), (r.solution.bottom, r.ff.layer_bot)):
            S = lf.p / lf.rho**g
            B = 0.5 * (lf.u**2 + lf.v**2) + g * lf.p / ((g - 1) * lf.rho)
            worst = max(worst, float(np.abs(S - layer.S).max()), float(np.abs(B - layer.B).max()))
    ok = worst <= 1e-12
    record_criterion(6, "entropy and Bernoulli per layer", ok, f"max |S-S0|, |B-B0| = {worst:.1e} <= 1e-12")
    assert ok


def test_criterion_07_sigma_linear(sigma_sweep):
    runs, _, elapsed = sigma_sweep
    sup, l2g, l2u = [], [], []
    for r in runs:
        sup.append(float(np.abs(r.picard.phi.values - phi_l_nodes(r.grid, r.ff)).max()))
        a, b = l2_norms(r.solution, r.ff)
        l2g.append(a)
        l2u.append(b)
    worst = 0.0
    for series in (sup, l2g, l2u):
        for a, b in zip(series, series[1:]):
            worst = max(worst, abs(a / b / 2.0 - 1.0))
    ok = worst <= 0.25 and elapsed <= 300
    fmt = lambda s: "/".join(f"{v:.3e}" for v in s)  # noqa: E731
    record_criterion(7, "sigma-linear stability", ok,
                     f"|phi-phi_l| {fmt(sup)}, |g_cd-w*eta| {fmt(l2g)}, |U-U0| {fmt(l2u)}; worst ratio error "
                     f"{worst:.3f} <= 0.25; sweep {elapsed:.1f} s <= 300 s")
    assert ok


def test_criterion_08_truncation():
    devs = []
    for R in (10, 20, 40):
        cfg = RunConfig(**REF_LEFT, omega_plus=0.01, a_plus=0.005, sigma=0.015, profile="lorentz",
                        R=R, nx=256 * R // 10, ny_top=32, ny_bot=32)
        r = run_pipeline(cfg, write=False)
        assert r.status == 0, r.message
        devs.append(asymptotic_deviation(r.solution, r.ff)[1])
    mono = all(b < a for a, b in zip(devs, devs[1:]))
    ok = mono and devs[-1] <= 0.5 * devs[0]
    record_criterion(8, "asymptotics and truncation", ok,
                     f"right-window deviation at R=10/20/40: {', '.join(f'{d:.2e}' for d in devs)}; "
                     f"decreasing {mono}; R=40 is {devs[-1] / devs[0]:.3f} of R=10 (<= 0.5)")
    assert ok


def test_criterion_09_uniqueness():
    ff = solve_farfield(LEFT, 0.02, 0.01, GC)
    cfg = perturbed(0.02, nx=256, ny_top=32, ny_bot=32)
    wp = cfg.walls()
    g = build_grid(cfg.R, cfg.nx, cfg.ny_top, cfg.ny_bot, ff)
    opts = PicardOptions()
    a = run(wp, ff, g, GC, PicardOptions(init="phi0"))
    b = run(wp, ff, g, GC, PicardOptions(init="phi_l"))
    d = float(np.abs(a.phi.values - b.phi.values).max())
    ok = d <= 10 * opts.tol_fp
    record_criterion(9, "uniqueness surrogate", ok,
                     f"phi_0 vs phi_l starts differ by {d:.1e} <= {10 * opts.tol_fp:.0e} "
                     f"({a.iterations} and {b.iterations} iterations)")
    assert ok


def test_criterion_10_manufactured_order():
    errs, orders = observed_orders((32, 64, 128))
    ok = min(orders) >= 1.8
    record_criterion(10, "manufactured-solution order", ok,
                     f"max errors {', '.join(f'{e:.2e}' for e in errs)}; observed orders "
                     f"{', '.join(f'{o:.3f}' for o in orders)} >= 1.8")
    assert ok


def test_criterion_11_invertibility(sigma_sweep):
    runs, _, _ = sigma_sweep
    m_star = []
    for r in runs:
        m_star.append(1.0 / min_dy_phi(r.picard.phi.values, r.grid))
    spread = (max(m_star) - min(m_star)) / min(m_star)
    ok = all(np.isfinite(m) and m > 0 for m in m_star) and spread <= 0.25
    record_criterion(11, "invertibility", ok,
                     f"min dy/dY = 1/m_* with m_* = {', '.join(f'{m:.5f}' for m in m_star)} over the sigma sweep; "
                     f"relative spread {spread:.2e} <= 0.25")
    assert ok
