"""Polytropic gas relations in Lagrangian stream-potential variables.

A layer of the flow is described by its Bernoulli constant ``B`` and its
entropy constant ``S = p / rho**gamma``.  Given the gradient ``q = (q1, q2)``
of the stream potential, with ``q1 = v/u`` and ``q2 = 1/(rho u)``, the density
is the subsonic root of

    G(rho, q) = B rho**2 - gamma/(gamma-1) S rho**(gamma+1) - (1+q1**2)/(2 q2**2)

and the flux ``A(q) = (q1/(rho q2), S rho**gamma) = (v, p)`` closes the
momentum balance ``div A = 0``.

Every function here is vectorized: gradients are arrays whose last axis has
length two, and ``B``/``S`` broadcast against the leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, EllipticityError, SubsonicityError

_RHO_RTOL = 1e-13
_MAX_NEWTON = 200


@dataclass(frozen=True)
class GasConstants:
    gamma: float = 1.4

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise DomainError(f"adiabatic exponent must exceed 1, got {self.gamma}")


@dataclass(frozen=True)
class GasState:
    u: float
    v: float
    p: float
    rho: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.p, self.rho])


class Gradient(NamedTuple):
    q1: float
    q2: float


@dataclass(frozen=True)
class LayerInvariants:
    """Bernoulli and entropy constants carried by one layer."""

    B: float
    S: float

    def __post_init__(self):
        if np.any(np.asarray(self.B) <= 0) or np.any(np.asarray(self.S) <= 0):
            raise DomainError("layer invariants B and S must be positive")

    @classmethod
    def from_state(cls, state: GasState, gc: GasConstants) -> "LayerInvariants":
        return cls(B=bernoulli(state, gc), S=entropy(state, gc))

    def critical_density(self, gc: GasConstants):
        """Density maximizing ``rho -> G(rho, q)``; the sonic density of the layer."""
        g = gc.gamma
        return (2.0 * self.B * (g - 1.0) / (g * (g + 1.0) * self.S)) ** (1.0 / (g - 1.0))

    def stagnation_density(self, gc: GasConstants):
        g = gc.gamma
        return ((g - 1.0) * self.B / (g * self.S)) ** (1.0 / (g - 1.0))


def _check_thermo(p, rho):
    if np.any(np.asarray(p) <= 0) or np.any(np.asarray(rho) <= 0):
        raise DomainError("pressure and density must be positive")


def sound_speed(state: GasState, gc: GasConstants):
    _check_thermo(state.p, state.rho)
    return np.sqrt(gc.gamma * np.asarray(state.p) / np.asarray(state.rho))


def bernoulli(state: GasState, gc: GasConstants):
    _check_thermo(state.p, state.rho)
    g = gc.gamma
    speed2 = np.asarray(state.u) ** 2 + np.asarray(state.v) ** 2
    return 0.5 * speed2 + g * np.asarray(state.p) / ((g - 1.0) * np.asarray(state.rho))


def entropy(state: GasState, gc: GasConstants):
    _check_thermo(state.p, state.rho)
    return np.asarray(state.p) / np.asarray(state.rho) ** gc.gamma


def mach_number(state: GasState, gc: GasConstants):
    return np.hypot(state.u, state.v) / sound_speed(state, gc)


def is_subsonic(state: GasState, gc: GasConstants) -> bool:
    return bool(np.all(mach_number(state, gc) < 1.0))


def _split(q):
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 2:
        raise ValueError("gradient arrays need a trailing axis of length 2")
    return q[..., 0], q[..., 1]


def _scalar_or_array(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def G_residual(rho, q, layer: LayerInvariants, gc: GasConstants):
    """The density relation ``G(rho, q)``; zero at the physical density."""
    q1, q2 = _split(q)
    g = gc.gamma
    rho = np.asarray(rho, dtype=float)
    return (layer.B * rho**2 - g / (g - 1.0) * layer.S * rho ** (g + 1.0)
            - (1.0 + q1**2) / (2.0 * q2**2))


def density_from_gradient(q, layer: LayerInvariants, gc: GasConstants):
    """Subsonic density root of ``G(rho, q) = 0``.

    The root is bracketed in ``[rho_cr, rho_B]`` where ``G`` is strictly
    decreasing and concave, so Newton started at ``rho_B`` moves monotonically
    toward the root; a bisection fallback guards against roundoff stalls.
    """
    q1, q2 = _split(q)
    if np.any(q2 <= 0):
        raise DomainError("q2 = 1/(rho u) must be positive")
    g = gc.gamma
    k = g / (g - 1.0)
    shape = np.broadcast_shapes(q1.shape, np.shape(layer.B), np.shape(layer.S))
    B = np.broadcast_to(np.asarray(layer.B, dtype=float), shape).ravel()
    S = np.broadcast_to(np.asarray(layer.S, dtype=float), shape).ravel()
    kin = np.broadcast_to((1.0 + q1**2) / (2.0 * q2**2), shape).ravel()

    lo = (2.0 * B * (g - 1.0) / (g * (g + 1.0) * S)) ** (1.0 / (g - 1.0))
    hi = ((g - 1.0) * B / (g * S)) ** (1.0 / (g - 1.0))
    g_lo = B * lo**2 - k * S * lo ** (g + 1.0) - kin
    if np.any(g_lo <= 0):
        first = np.unravel_index(np.argmax(g_lo <= 0), shape) if shape else ()
        raise SubsonicityError(f"gradient outside subsonic regime (first failure at index {first})")

    rho = hi.copy()
    idx = np.arange(rho.size)
    for _ in range(_MAX_NEWTON):
        r = rho[idx]
        Ba, Sa = B[idx], S[idx]
        f = Ba * r**2 - k * Sa * r ** (g + 1.0) - kin[idx]
        df = 2.0 * Ba * r - k * (g + 1.0) * Sa * r**g
        # bracket invariant: G > 0 left of the root, G <= 0 right of it
        lo[idx] = np.where(f > 0, r, lo[idx])
        hi[idx] = np.where(f <= 0, r, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = r - f / df
        bad = ~np.isfinite(cand) | (cand < lo[idx]) | (cand > hi[idx])
        cand = np.where(bad, 0.5 * (lo[idx] + hi[idx]), cand)
        done = np.abs(cand - r) <= _RHO_RTOL * r
        rho[idx] = cand
        idx = idx[~done]
        if idx.size == 0:
            break
    else:
        raise SubsonicityError("density root iteration did not converge")
    return _scalar_or_array(rho.reshape(shape))


def reconstruct_state(q, layer: LayerInvariants, gc: GasConstants):
    """Primitive variables ``(u, v, p, rho)`` implied by a gradient."""
    q1, q2 = _split(q)
    rho = np.asarray(density_from_gradient(q, layer, gc))
    u = 1.0 / (rho * q2)
    v = q1 * u
    p = np.asarray(layer.S) * rho**gc.gamma
    return u, v, p, rho


def flux_A(q, layer: LayerInvariants, gc: GasConstants):
    """``A(q) = (q1/(rho q2), S rho**gamma)``, stacked on a trailing axis."""
    q1, q2 = _split(q)
    rho = np.asarray(density_from_gradient(q, layer, gc))
    A = np.stack([q1 / (rho * q2), np.asarray(layer.S) * rho**gc.gamma + 0.0 * q1], axis=-1)
    return A


def jacobian_from_state(u, v, rho, c2):
    """Closed-form ``D_q A`` at a reconstructed state; shape ``(..., 2, 2)``."""
    speed2 = u**2 + v**2
    denom = c2 - speed2
    if np.any(denom <= 0):
        raise EllipticityError("ellipticity lost: reconstructed state is not subsonic")
    J = np.empty(np.shape(u) + (2, 2))
    J[..., 0, 0] = u * (c2 - u**2) / denom
    off = -rho * c2 * u * v / denom
    J[..., 0, 1] = off
    J[..., 1, 0] = off
    J[..., 1, 1] = rho**2 * c2 * u * speed2 / denom
    return J


def flux_jacobian(q, layer: LayerInvariants, gc: GasConstants):
    """Symmetric positive definite ``D_q A`` evaluated at ``q``."""
    u, v, p, rho = reconstruct_state(q, layer, gc)
    c2 = gc.gamma * p / rho
    return jacobian_from_state(u, v, rho, c2)
