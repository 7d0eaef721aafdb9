"""Asymptotic two-layer states at both ends of the duct.

Upstream (``x -> -inf``) the flow is the prescribed two-layer state.  Far
downstream the duct width has changed by ``omega = omega_plus + omega_minus``;
each layer keeps its mass flux, Bernoulli constant and entropy, and both
layers share one pressure ``p_r``.  Eliminating the interface offset leaves a
scalar equation ``H(p_r, omega) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FarFieldError, SubsonicityError
from .gas import GasConstants, GasState, LayerInvariants, sound_speed

_H_TOL = 1e-14


@dataclass(frozen=True)
class LeftState:
    """Upstream state: two uniform horizontal layers at a common pressure."""

    u_top: float
    u_bot: float
    p: float
    rho_top: float
    rho_bot: float

    def validate(self, gc: GasConstants) -> None:
        if min(self.u_top, self.u_bot, self.p, self.rho_top, self.rho_bot) <= 0:
            raise DomainError("left state entries must all be positive")
        if self.u_top == self.u_bot:
            raise DomainError("left state needs distinct layer velocities (no contact otherwise)")
        for st in (self.top, self.bottom):
            if st.u >= sound_speed(st, gc):
                raise SubsonicityError("left state must be subsonic")

    @property
    def top(self) -> GasState:
        return GasState(self.u_top, 0.0, self.p, self.rho_top)

    @property
    def bottom(self) -> GasState:
        return GasState(self.u_bot, 0.0, self.p, self.rho_bot)

    @property
    def m_top(self) -> float:
        return self.rho_top * self.u_top

    @property
    def m_bot(self) -> float:
        return self.rho_bot * self.u_bot

    def layers(self, gc: GasConstants) -> tuple[LayerInvariants, LayerInvariants]:
        return (LayerInvariants.from_state(self.top, gc),
                LayerInvariants.from_state(self.bottom, gc))


@dataclass(frozen=True)
class FarFieldSolution:
    left: LeftState
    gc: GasConstants
    omega_plus: float
    omega_minus: float
    p_r: float
    u_r_top: float
    u_r_bot: float
    rho_r_top: float
    rho_r_bot: float
    omega_star: float
    layer_top: LayerInvariants = field(repr=False)
    layer_bot: LayerInvariants = field(repr=False)

    @property
    def omega(self) -> float:
        return self.omega_plus + self.omega_minus

    @property
    def m_top(self) -> float:
        return self.left.m_top

    @property
    def m_bot(self) -> float:
        return self.left.m_bot

    @property
    def right_top(self) -> GasState:
        return GasState(self.u_r_top, 0.0, self.p_r, self.rho_r_top)

    @property
    def right_bottom(self) -> GasState:
        return GasState(self.u_r_bot, 0.0, self.p_r, self.rho_r_bot)

    def layer(self, top: bool) -> LayerInvariants:
        return self.layer_top if top else self.layer_bot

    def summary(self) -> dict:
        return {
            "gamma": self.gc.gamma,
            "omega_plus": self.omega_plus,
            "omega_minus": self.omega_minus,
            "p_l": self.left.p,
            "p_r": self.p_r,
            "omega_star": self.omega_star,
            "u_r_top": self.u_r_top,
            "u_r_bot": self.u_r_bot,
            "rho_r_top": self.rho_r_top,
            "rho_r_bot": self.rho_r_bot,
            "m_top": self.m_top,
            "m_bot": self.m_bot,
            "H_residual": H(self.p_r, self.omega, self.left, self.gc),
        }


def mass_flux_G(p, B, S, gc: GasConstants):
    """Mass flux ``rho u`` of a horizontal layer at pressure ``p``."""
    g = gc.gamma
    rad = B - g / (g - 1.0) * (S * np.asarray(p, dtype=float) ** (g - 1.0)) ** (1.0 / g)
    if np.any(rad <= 0):
        raise DomainError("pressure exceeds stagnation pressure")
    out = (np.asarray(p) / S) ** (1.0 / g) * np.sqrt(2.0 * rad)
    return float(out) if np.ndim(out) == 0 else out


def mass_flux_G_dp(p, B, S, gc: GasConstants):
    """``dG/dp = rho (u**2 - c**2) / (gamma p u)``; negative on the subsonic branch."""
    g = gc.gamma
    rho = (p / S) ** (1.0 / g)
    u = math.sqrt(2.0 * (B - g / (g - 1.0) * (S * p ** (g - 1.0)) ** (1.0 / g)))
    return rho * (u * u - g * p / rho) / (g * p * u)


def _layer_pressure_limits(layer: LayerInvariants, gc: GasConstants) -> tuple[float, float]:
    """(sonic, stagnation) pressures of a layer; the subsonic range lies between."""
    g = gc.gamma
    p_sonic = layer.S * layer.critical_density(gc) ** g
    p_stag = layer.S * layer.stagnation_density(gc) ** g
    return float(p_sonic), float(p_stag)


def H(p, omega, left: LeftState, gc: GasConstants) -> float:
    top, bot = left.layers(gc)
    Gt = mass_flux_G(p, top.B, top.S, gc)
    Gb = mass_flux_G(p, bot.B, bot.S, gc)
    return Gb * (2.0 + omega - left.m_top / Gt) - left.m_bot


def H_dp(p, omega, left: LeftState, gc: GasConstants) -> float:
    top, bot = left.layers(gc)
    Gt = mass_flux_G(p, top.B, top.S, gc)
    Gb = mass_flux_G(p, bot.B, bot.S, gc)
    dGt = mass_flux_G_dp(p, top.B, top.S, gc)
    dGb = mass_flux_G_dp(p, bot.B, bot.S, gc)
    return dGb * (2.0 + omega - left.m_top / Gt) + Gb * left.m_top * dGt / Gt**2


def _solve_H(omega: float, left: LeftState, gc: GasConstants) -> float:
    top, bot = left.layers(gc)
    lims = [_layer_pressure_limits(L, gc) for L in (top, bot)]
    p_min = max(l[0] for l in lims) * (1.0 + 1e-12)
    p_max = min(l[1] for l in lims) * (1.0 - 1e-12)
    pl = left.p

    def h(p):
        return H(p, omega, left, gc)

    a, b = max(0.8 * pl, p_min), min(1.2 * pl, p_max)
    ha, hb = h(a), h(b)
    width = 0.2 * pl
    while ha * hb > 0:
        if a <= p_min and b >= p_max:
            raise FarFieldError(f"omega={omega:g} outside admissible range: no root of H in the subsonic range")
        width *= 2.0
        a, b = max(pl - width, p_min), min(pl + width, p_max)
        ha, hb = h(a), h(b)

    p = min(max(pl, a), b)
    for _ in range(200):
        hp = h(p)
        if abs(hp) <= _H_TOL:
            return p
        if hp * ha > 0:
            a, ha = p, hp
        else:
            b, hb = p, hp
        step = hp / H_dp(p, omega, left, gc)
        cand = p - step
        if not (a < cand < b):
            cand = 0.5 * (a + b)
        if abs(cand - p) <= 1e-16 * p:
            return cand
        p = cand
    raise FarFieldError("root search on H did not converge")


def solve_farfield(left: LeftState, omega_plus: float, omega_minus: float,
                   gc: GasConstants) -> FarFieldSolution:
    left.validate(gc)
    top, bot = left.layers(gc)
    omega = omega_plus + omega_minus
    g = gc.gamma

    if omega == 0.0:
        # H(p_l, 0) = 0 identically; keep the downstream state bit-identical
        p_r = left.p
        u_t, u_b, r_t, r_b = left.u_top, left.u_bot, left.rho_top, left.rho_bot
        omega_star = omega_plus
    else:
        p_r = _solve_H(omega, left, gc)
        r_t = (p_r / top.S) ** (1.0 / g)
        r_b = (p_r / bot.S) ** (1.0 / g)
        u_t = math.sqrt(2.0 * (top.B - g / (g - 1.0) * (top.S * p_r ** (g - 1.0)) ** (1.0 / g)))
        u_b = math.sqrt(2.0 * (bot.B - g / (g - 1.0) * (bot.S * p_r ** (g - 1.0)) ** (1.0 / g)))
        omega_star = 1.0 + omega_plus - left.m_top / mass_flux_G(p_r, top.B, top.S, gc)

    if not (-1.0 - omega_minus < omega_star < 1.0 + omega_plus):
        raise FarFieldError(f"interface offset {omega_star:g} leaves the downstream duct")
    for u, rho in ((u_t, r_t), (u_b, r_b)):
        if u * u >= g * p_r / rho:
            raise SubsonicityError("subsonicity lost at far field")

    return FarFieldSolution(
        left=left, gc=gc, omega_plus=omega_plus, omega_minus=omega_minus,
        p_r=p_r, u_r_top=u_t, u_r_bot=u_b, rho_r_top=r_t, rho_r_bot=r_b,
        omega_star=omega_star, layer_top=top, layer_bot=bot,
    )


def pressure_slope(omega: float, left: LeftState, gc: GasConstants) -> float:
    """``dp_r/domega = -dH/domega / dH/dp`` at the downstream solution."""
    ff = solve_farfield(left, omega, 0.0, gc)
    bot = ff.layer_bot
    Gb = mass_flux_G(ff.p_r, bot.B, bot.S, gc)
    return -Gb / H_dp(ff.p_r, omega, left, gc)


def _admissible(omega: float, left: LeftState, gc: GasConstants) -> bool:
    try:
        solve_farfield(left, omega, 0.0, gc)
    except (FarFieldError, SubsonicityError, DomainError):
        return False
    return True


def probe_omega_range(left: LeftState, gc: GasConstants, tol: float = 1e-4,
                      limit: float = 1.0) -> tuple[float, float]:
    """Bisect for the extent of admissible total width changes.

    Returns ``(omega_min, omega_max)`` resolved to ``tol``; an end that stays
    admissible up to ``limit`` is reported as ``+-limit``.
    """
    ends = []
    for sign in (-1.0, 1.0):
        if _admissible(sign * limit, left, gc):
            ends.append(sign * limit)
            continue
        ok, bad = 0.0, limit
        while bad - ok > tol:
            mid = 0.5 * (ok + bad)
            if _admissible(sign * mid, left, gc):
                ok = mid
            else:
                bad = mid
        ends.append(sign * ok)
    return ends[0], ends[1]


def perturbation_size(ff: FarFieldSolution) -> float:
    """``|U_r+ - U_l+| + |U_r- - U_l-| + |omega_*|`` with Euclidean state norms."""
    left = ff.left
    d_top = np.linalg.norm(ff.right_top.as_array() - left.top.as_array())
    d_bot = np.linalg.norm(ff.right_bottom.as_array() - left.bottom.as_array())
    return float(d_top + d_bot + abs(ff.omega_star))
