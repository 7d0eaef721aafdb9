import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import REF_LEFT, bisect
from contact_duct.errors import DomainError, FarFieldError, SubsonicityError
from contact_duct.farfield import (H, LeftState, mass_flux_G, mass_flux_G_dp, perturbation_size,
                                   pressure_slope, probe_omega_range, solve_farfield)
from contact_duct.gas import GasConstants

GC = GasConstants(1.4)
LEFT = LeftState(**REF_LEFT)
G = 1.4

# frozen regression value for omega_plus = 0.01 on the reference upstream state
P_R_REF = 1.000836896376651


def downstream_oracle(omega, left=LEFT, g=G):
    """Common downstream pressure from total width conservation, solved by bisection."""
    layers = []
    for u, rho in ((left.u_top, left.rho_top), (left.u_bot, left.rho_bot)):
        S = left.p / rho**g
        B = 0.5 * u * u + g / (g - 1) * left.p / rho
        layers.append((rho * u, B, S))

    def widths(p):
        out = []
        for m, B, S in layers:
            rho = (p / S) ** (1 / g)
            u = math.sqrt(2 * (B - g / (g - 1) * p / rho))
            out.append(m / (rho * u))
        return out

    def excess(p):
        return sum(widths(p)) - (2.0 + omega)

    # subsonic branch: widths grow with p; stay below the smaller stagnation pressure
    p_hi = min(S * ((g - 1) * B / (g * S)) ** (g / (g - 1)) for _, B, S in layers) * (1 - 1e-9)
    p_lo = max(S * (2 * (g - 1) * B / (g * (g + 1) * S)) ** (g / (g - 1)) for _, B, S in layers) * (1 + 1e-9)
    p = bisect(excess, p_lo, p_hi)
    return p, widths(p)


@pytest.mark.parametrize("omega", [-0.02, -0.01, 0.01, 0.02, 0.1])
def test_pressure_matches_width_oracle(omega):
    ff = solve_farfield(LEFT, omega, 0.0, GC)
    p, (w_top, w_bot) = downstream_oracle(omega)
    assert ff.p_r == pytest.approx(p, rel=1e-12)
    assert ff.omega_star == pytest.approx(1.0 + omega - w_top, abs=1e-12)


def test_regression_value():
    assert solve_farfield(LEFT, 0.01, 0.0, GC).p_r == pytest.approx(P_R_REF, rel=1e-14)


def test_zero_width_change_is_exact():
    ff = solve_farfield(LEFT, 0.0, 0.0, GC)
    assert ff.p_r == LEFT.p and ff.omega_star == 0.0
    assert (ff.u_r_top, ff.u_r_bot, ff.rho_r_top, ff.rho_r_bot) == (0.5, 0.3, 1.0, 1.2)


def test_opposite_wall_shifts_move_interface_only():
    ff = solve_farfield(LEFT, 0.02, -0.02, GC)
    assert ff.p_r == LEFT.p and ff.omega_star == 0.02


def test_residual_and_conservation():
    ff = solve_farfield(LEFT, 0.015, 0.005, GC)
    assert abs(H(ff.p_r, ff.omega, LEFT, GC)) <= 1e-12
    for top in (True, False):
        L = ff.layer(top)
        st_ = ff.right_top if top else ff.right_bottom
        assert 0.5 * st_.u**2 + G / (G - 1) * st_.p / st_.rho == pytest.approx(L.B, rel=1e-13)
        assert st_.p / st_.rho**G == pytest.approx(L.S, rel=1e-13)
    assert ff.summary()["H_residual"] == pytest.approx(0.0, abs=1e-12)


def test_right_state_subsonic():
    ff = solve_farfield(LEFT, 0.02, 0.0, GC)
    for st_ in (ff.right_top, ff.right_bottom):
        assert st_.u**2 < G * st_.p / st_.rho


@given(st.lists(st.integers(-3000, 3000), min_size=2, max_size=5, unique=True))
@settings(max_examples=30, deadline=None)
def test_pressure_strictly_increasing(ticks):
    omegas = [1e-4 * t for t in sorted(ticks)]
    p = [solve_farfield(LEFT, w, 0.0, GC).p_r for w in omegas]
    assert all(b > a for a, b in zip(p, p[1:]))


def test_pressure_slope_matches_finite_difference():
    h = 1e-6
    fd = (solve_farfield(LEFT, 0.01 + h, 0.0, GC).p_r - solve_farfield(LEFT, 0.01 - h, 0.0, GC).p_r) / (2 * h)
    assert pressure_slope(0.01, LEFT, GC) == pytest.approx(fd, rel=1e-6)
    assert pressure_slope(0.01, LEFT, GC) > 0


def test_mass_flux_G_derivative():
    B, S = 3.625, 1.0
    h = 1e-7
    fd = (mass_flux_G(1 + h, B, S, GC) - mass_flux_G(1 - h, B, S, GC)) / (2 * h)
    assert mass_flux_G_dp(1.0, B, S, GC) == pytest.approx(fd, rel=1e-6)
    assert mass_flux_G(1.0, B, S, GC) == pytest.approx(0.5)
    with pytest.raises(DomainError, match="stagnation"):
        mass_flux_G(100.0, B, S, GC)


def test_omega_range_probe():
    lo, hi = probe_omega_range(LEFT, GC)
    assert -1.0 < lo < -0.5 and hi == 1.0
    with pytest.raises((FarFieldError, SubsonicityError)):
        solve_farfield(LEFT, lo - 0.01, 0.0, GC)


def test_left_state_validation():
    with pytest.raises(SubsonicityError, match="left state must be subsonic"):
        LeftState(1.5, 0.3, 1.0, 1.0, 1.2).validate(GC)
    with pytest.raises(DomainError):
        LeftState(0.3, 0.3, 1.0, 1.0, 1.2).validate(GC)
    with pytest.raises(DomainError):
        LeftState(0.5, 0.3, -1.0, 1.0, 1.2).validate(GC)


def test_perturbation_size_scales_with_omega():
    a = perturbation_size(solve_farfield(LEFT, 0.01, 0.0, GC))
    b = perturbation_size(solve_farfield(LEFT, 0.005, 0.0, GC))
    assert perturbation_size(solve_farfield(LEFT, 0.0, 0.0, GC)) == 0.0
    assert a / b == pytest.approx(2.0, rel=0.02)
