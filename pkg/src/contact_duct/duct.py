"""Duct walls, cutoffs, background potentials and boundary data.

Lagrangian coordinates ``(x, Y)`` with ``Y in [-m_bot, m_top]``; ``Y = 0`` is
the contact line.  The background potentials are linear in ``Y`` on each side:
``phi_l = Y/m`` upstream and ``phi_r = Y/(rho_r u_r) + omega_*`` downstream,
joined by ``phi_0 = (1 - eta) phi_l + eta phi_r``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SubsonicityError
from .farfield import FarFieldSolution
from .gas import GasConstants, LayerInvariants, flux_A

Func = Callable[[np.ndarray], np.ndarray]


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def _smoothstep_prime(t):
    inside = (t > 0.0) & (t < 1.0)
    return np.where(inside, 30.0 * t**2 * (1.0 - t) ** 2, 0.0)


def eta(x):
    """Quintic cutoff: 0 for x <= -1, 1 for x >= 1."""
    return _smoothstep((np.asarray(x, dtype=float) + 1.0) / 2.0)


def eta_prime(x):
    return 0.5 * _smoothstep_prime((np.asarray(x, dtype=float) + 1.0) / 2.0)


def chi0(Y, m_top: float, m_bot: float):
    """Decreasing blend in ``Y``: 1 below ``-m_bot/2``, 0 above ``m_top/2``."""
    a, b = -0.5 * m_bot, 0.5 * m_top
    return 1.0 - _smoothstep((np.asarray(Y, dtype=float) - a) / (b - a))


@dataclass(frozen=True)
class WallPerturbation:
    h_plus: Func
    h_minus: Func
    dh_plus: Func
    dh_minus: Func
    omega_plus: float
    omega_minus: float
    sigma: float

    @classmethod
    def flat(cls) -> "WallPerturbation":
        return cls.bump_family(0.0, 0.0, 0.0, 0.0, sigma=0.0)

    @classmethod
    def bump_family(cls, omega_plus: float, omega_minus: float, a_plus: float,
                    a_minus: float, width: float = 1.0, sigma: float | None = None,
                    profile: str = "gauss") -> "WallPerturbation":
        """``h_pm = pm1 pm omega_pm eta(x) + a_pm b(x/width)``.

        ``profile`` picks the bump ``b``: ``"gauss"`` is ``exp(-s**2)``,
        ``"lorentz"`` is ``1/(1+s**2)`` (algebraic decay).
        """
        if profile == "gauss":
            def b(x):
                return np.exp(-(np.asarray(x) / width) ** 2)

            def db(x):
                s = np.asarray(x) / width
                return -2.0 * s / width * np.exp(-s**2)
        elif profile == "lorentz":
            def b(x):
                return 1.0 / (1.0 + (np.asarray(x) / width) ** 2)

            def db(x):
                s = np.asarray(x) / width
                return -2.0 * s / width / (1.0 + s**2) ** 2
        else:
            raise ValueError(f"unknown bump profile {profile!r}")
        if sigma is None:
            sigma = max(abs(omega_plus), abs(omega_minus), abs(a_plus), abs(a_minus))
        return cls(
            h_plus=lambda x: 1.0 + omega_plus * eta(x) + a_plus * b(x),
            h_minus=lambda x: -1.0 - omega_minus * eta(x) + a_minus * b(x),
            dh_plus=lambda x: omega_plus * eta_prime(x) + a_plus * db(x),
            dh_minus=lambda x: -omega_minus * eta_prime(x) + a_minus * db(x),
            omega_plus=omega_plus, omega_minus=omega_minus, sigma=sigma,
        )

    @classmethod
    def from_tables(cls, top: str | Path, bottom: str | Path, omega_plus: float,
                    omega_minus: float, sigma: float) -> "WallPerturbation":
        """Walls from two-column ``x h(x)`` text files with increasing ``x``.

        The deviation from the asymptotic wall is interpolated by a cubic
        spline and taken as zero outside the tabulated range.
        """
        def load(path, base):
            data = np.loadtxt(path, ndmin=2)
            x, h = data[:, 0], data[:, 1]
            if np.any(np.diff(x) <= 0):
                raise ValueError(f"{path}: x column must be strictly increasing")
            spline = CubicSpline(x, h - base(x))
            dspline = spline.derivative()
            lo, hi = x[0], x[-1]

            def dev(s):
                s = np.asarray(s, dtype=float)
                return np.where((s >= lo) & (s <= hi), spline(np.clip(s, lo, hi)), 0.0)

            def ddev(s):
                s = np.asarray(s, dtype=float)
                return np.where((s >= lo) & (s <= hi), dspline(np.clip(s, lo, hi)), 0.0)
            return dev, ddev

        base_p = lambda x: 1.0 + omega_plus * eta(x)  # noqa: E731
        base_m = lambda x: -1.0 - omega_minus * eta(x)  # noqa: E731
        dev_p, ddev_p = load(top, base_p)
        dev_m, ddev_m = load(bottom, base_m)
        return cls(
            h_plus=lambda x: base_p(x) + dev_p(x),
            h_minus=lambda x: base_m(x) + dev_m(x),
            dh_plus=lambda x: omega_plus * eta_prime(x) + ddev_p(x),
            dh_minus=lambda x: -omega_minus * eta_prime(x) + ddev_m(x),
            omega_plus=omega_plus, omega_minus=omega_minus, sigma=sigma,
        )

    def g_plus(self, x):
        """Top-wall value of ``phi - phi_0``."""
        return self.h_plus(x) - 1.0 - eta(x) * self.omega_plus

    def g_minus(self, x):
        return self.h_minus(x) + 1.0 + eta(x) * self.omega_minus

    def constraint_report(self, R: float = 40.0, n: int = 8001, alpha: float = 0.5) -> dict:
        """Sampled sizes of the wall-smallness quantities; violations warn."""
        x = np.linspace(-R, R, n)
        dx = x[1] - x[0]
        out = {}
        for name, dev, ddev in (
            ("plus", self.g_plus, lambda s: self.dh_plus(s) - self.omega_plus * eta_prime(s)),
            ("minus", self.g_minus, lambda s: self.dh_minus(s) + self.omega_minus * eta_prime(s)),
        ):
            d, dd = np.asarray(dev(x)), np.asarray(ddev(x))
            out[f"H1_{name}"] = float(np.sqrt(np.trapezoid(d**2 + dd**2, dx=dx)))
        for name, h, dh, base in (("plus", self.h_plus, self.dh_plus, 1.0),
                                  ("minus", self.h_minus, self.dh_minus, -1.0)):
            w, dw = np.asarray(h(x)) - base, np.asarray(dh(x))
            holder = np.max(np.abs(np.diff(dw))) / dx**alpha
            out[f"C1a_{name}"] = float(np.max(np.abs(w)) + np.max(np.abs(dw)) + holder)
        out["min_width"] = float(np.min(self.h_plus(x) - self.h_minus(x)))
        for key in ("H1_plus", "H1_minus"):
            if out[key] > self.sigma * (1.0 + 1e-9):
                warnings.warn(f"wall constraint {key}={out[key]:.3g} exceeds sigma={self.sigma:.3g}")
        if max(abs(self.omega_plus), abs(self.omega_minus)) > self.sigma * (1.0 + 1e-12):
            warnings.warn("|omega_pm| exceeds sigma")
        if out["min_width"] <= 0:
            warnings.warn("walls cross: h_minus >= h_plus somewhere")
        return out


@dataclass(frozen=True)
class BackgroundPotentials:
    """Upstream, downstream and connecting potentials built from the far field."""

    ff: FarFieldSolution

    def slope(self, Y, downstream: bool):
        top = np.asarray(Y) >= 0
        if downstream:
            return np.where(top, 1.0 / (self.ff.rho_r_top * self.ff.u_r_top),
                            1.0 / (self.ff.rho_r_bot * self.ff.u_r_bot))
        return np.where(top, 1.0 / self.ff.m_top, 1.0 / self.ff.m_bot)

    def phi_l(self, x, Y):
        Y = np.asarray(Y, dtype=float)
        return np.broadcast_to(Y * self.slope(Y, False), np.broadcast_shapes(np.shape(x), Y.shape)).copy()

    def phi_r(self, x, Y):
        Y = np.asarray(Y, dtype=float)
        val = Y * self.slope(Y, True) + self.ff.omega_star
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(x), Y.shape)).copy()

    def phi_0(self, x, Y):
        e = eta(x)
        return (1.0 - e) * self.phi_l(x, Y) + e * self.phi_r(x, Y)

    def grad_phi_0(self, x, Y):
        """Exact gradient of ``phi_0``; the one-sided limit ``Y -> 0+`` at ``Y = 0``."""
        x = np.asarray(x, dtype=float)
        Y = np.asarray(Y, dtype=float)
        e = eta(x)
        gx = eta_prime(x) * (self.phi_r(x, Y) - self.phi_l(x, Y))
        gy = (1.0 - e) * self.slope(Y, False) + e * self.slope(Y, True)
        gx, gy = np.broadcast_arrays(gx, gy)
        return np.stack([gx, gy], axis=-1)

    def grad_phi_l(self, x, Y):
        Y = np.asarray(Y, dtype=float)
        gy = np.broadcast_to(self.slope(Y, False), np.broadcast_shapes(np.shape(x), Y.shape))
        return np.stack([np.zeros_like(gy), gy], axis=-1)


def source_F0(x, Y, ff: FarFieldSolution, gc: GasConstants | None = None):
    """``A(D phi_l) - A(D phi_0)`` using the layer invariants on the side of ``Y``."""
    gc = gc or ff.gc
    bg = BackgroundPotentials(ff)
    Y = np.asarray(Y, dtype=float)
    top = np.broadcast_to(Y >= 0, np.broadcast_shapes(np.shape(x), Y.shape))
    B = np.where(top, ff.layer_top.B, ff.layer_bot.B)
    S = np.where(top, ff.layer_top.S, ff.layer_bot.S)
    layer = LayerInvariants(B, S)
    try:
        return flux_A(bg.grad_phi_l(x, Y), layer, gc) - flux_A(bg.grad_phi_0(x, Y), layer, gc)
    except SubsonicityError as exc:
        raise SubsonicityError(f"sigma too large for connector: {exc}") from exc


def dirichlet_g(x, Y, wp: WallPerturbation, ff: FarFieldSolution):
    """Boundary data for ``psi = phi - phi_0`` extended to the whole strip."""
    c = chi0(Y, ff.m_top, ff.m_bot)
    return wp.g_minus(x) * c + wp.g_plus(x) * (1.0 - c)
