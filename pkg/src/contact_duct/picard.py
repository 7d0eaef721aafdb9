"""Fixed-point iteration ``phi -> psi(phi) + phi_0``.

Each step freezes the secant coefficients at the current iterate, solves the
linear transmission problem for ``psi = phi - phi_0`` and relaxes toward the
result.  Convergence needs both a small iterate change and a small weak
residual of ``div A(D phi) = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .duct import BackgroundPotentials, WallPerturbation, dirichlet_g
from .errors import DivergenceError
from .farfield import FarFieldSolution
from .gas import GasConstants, flux_A
from .grid import LagrangianGrid, NodeField
from .transmission import (CoefficientField, assemble_coefficients, assemble_system,
                           connector_source, layer_arrays, load_vector, solve)

log = logging.getLogger(__name__)


@dataclass
class PicardOptions:
    tol_fp: float = 1e-11
    tol_res: float = 1e-9
    tol_lin: float = 1e-12
    max_iter: int = 60
    theta: float = 1.0
    theta_min: float = 0.125
    init: str = "phi0"  # or "phi_l"


@dataclass
class IterationRecord:
    step: int
    delta: float
    residual: float
    lam_min: float
    lam_max: float
    theta: float
    cg_iterations: int
    km_norm: float


@dataclass
class PicardResult:
    phi: NodeField
    phi0: np.ndarray
    g: np.ndarray
    F0: np.ndarray
    history: list[IterationRecord] = field(default_factory=list)
    sigma: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def lam_min(self) -> float:
        return min(r.lam_min for r in self.history)

    @property
    def lam_max(self) -> float:
        return max(r.lam_max for r in self.history)

    @property
    def final_residual(self) -> float:
        return self.history[-1].residual

    def contraction_factor(self, transient: int = 1) -> float:
        """Median ratio of successive iterate changes, ignoring the roundoff floor."""
        d = np.array([r.delta for r in self.history])
        ratios = [d[k + 1] / d[k] for k in range(transient, len(d) - 1) if d[k] > 1e-13 and d[k + 1] > 1e-14]
        return float(np.median(ratios)) if ratios else 0.0

    def fitted_M(self) -> float:
        """Smallest ``M`` with every iterate inside the ``M sigma`` ball around ``phi_l``."""
        if self.sigma <= 0:
            return 0.0
        return max(r.km_norm for r in self.history) / self.sigma


def phi_l_nodes(grid: LagrangianGrid, ff: FarFieldSolution) -> np.ndarray:
    X, Y = grid.mesh()
    return BackgroundPotentials(ff).phi_l(X, Y)


def phi0_nodes(grid: LagrangianGrid, ff: FarFieldSolution) -> np.ndarray:
    X, Y = grid.mesh()
    return BackgroundPotentials(ff).phi_0(X, Y)


def km_norm(phi: np.ndarray, phi_l: np.ndarray, grid: LagrangianGrid) -> float:
    """Discrete C^1 size of ``phi - phi_l``, summed over the two layers."""
    d = phi - phi_l
    k = grid.interface_row
    total = 0.0
    for part in (d[: k + 1], d[k:]):
        dx = np.abs(np.diff(part, axis=1)) / grid.hx
        dy = np.abs(np.diff(part, axis=0)) / np.diff(grid.Y[: part.shape[0]]).max()
        total += np.abs(part).max() + dx.max() + dy.max()
    return float(total)


def residual_vector(phi: np.ndarray, grid: LagrangianGrid, ff: FarFieldSolution,
                    gc: GasConstants | None = None) -> np.ndarray:
    """``sum_cells int A(D phi) . grad N_m`` at every node (boundary rows included)."""
    gc = gc or ff.gc
    q = grid.quadrature_gradients(phi)
    return load_vector(flux_A(q, layer_arrays(grid, ff), gc), grid)


def nonlinear_residual(phi: NodeField | np.ndarray, grid: LagrangianGrid, ff: FarFieldSolution,
                       gc: GasConstants | None = None) -> float:
    """Max weak residual of ``div A(D phi) = 0`` over unconstrained nodes."""
    values = phi.values if isinstance(phi, NodeField) else phi
    r = residual_vector(values, grid, ff, gc)
    return float(np.abs(r[~grid.boundary_mask.ravel()]).max())


def run(wp: WallPerturbation, ff: FarFieldSolution, grid: LagrangianGrid,
        gc: GasConstants | None = None, opts: PicardOptions | None = None,
        on_step: Callable[[int, np.ndarray, CoefficientField], None] | None = None) -> PicardResult:
    """Iterate to a fixed point; ``on_step(step, phi, coeff)`` sees every frozen iterate."""
    gc = gc or ff.gc
    opts = opts or PicardOptions()
    X, Y = grid.mesh()
    phi0 = phi0_nodes(grid, ff)
    phil = phi_l_nodes(grid, ff)
    g = np.asarray(dirichlet_g(X, Y, wp, ff), dtype=float)
    F0 = connector_source(grid, ff, phi0, gc)
    tol_res = opts.tol_res * (ff.m_top + ff.m_bot)

    if opts.init == "phi0":
        phi = phi0.copy()
    elif opts.init == "phi_l":
        phi = phil.copy()
    else:
        raise ValueError(f"unknown initialization {opts.init!r}")
    fixed = grid.boundary_mask
    phi[fixed] = (phi0 + g)[fixed]

    result = PicardResult(phi=grid.field(phi, "phi"), phi0=phi0, g=g, F0=F0, sigma=wp.sigma)
    theta = opts.theta
    res_prev = nonlinear_residual(phi, grid, ff, gc)
    increases = 0
    for step in range(1, opts.max_iter + 1):
        coeff = assemble_coefficients(grid.field(phi), grid, ff, gc, phi0=phi0)
        if on_step is not None:
            on_step(step, phi, coeff)
        system = assemble_system(coeff, F0, g, grid)
        psi, info = solve(system, tol=opts.tol_lin, x0=phi - phi0)
        new = phi + theta * (psi.values + phi0 - phi)
        delta = float(np.abs(new - phi).max())
        res = nonlinear_residual(new, grid, ff, gc)
        rec = IterationRecord(step, delta, res, coeff.lam_min, coeff.lam_max, theta,
                              info.iterations, km_norm(new, phil, grid))
        result.history.append(rec)
        log.info("step %3d  delta %.3e  residual %.3e  lam_min %.4f  theta %.3f",
                 step, delta, res, coeff.lam_min, theta)
        phi = new
        if delta <= opts.tol_fp and res <= tol_res:
            break
        if res > res_prev and res > tol_res:
            increases += 1
            if increases >= 3:
                raise DivergenceError(
                    f"iteration diverged (sigma too large): residual rose 3 steps in a row to {res:.3e}")
            theta = max(0.5 * theta, opts.theta_min)
        else:
            increases = 0
        res_prev = res
    else:
        raise DivergenceError(f"iteration diverged (sigma too large): no convergence in {opts.max_iter} steps, "
                              f"last delta {delta:.3e}, residual {res:.3e}")
    result.phi = grid.field(phi, "phi", constrained=True)
    return result


def min_dy_phi(phi: np.ndarray, grid: LagrangianGrid) -> float:
    """Smallest ``d phi / dY`` over all Gauss points."""
    return float(grid.quadrature_gradients(phi)[..., 1].min())
