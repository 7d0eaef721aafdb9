"""Linear elliptic transmission problem on the truncated Lagrangian strip.

Solves ``sum_ij d_i(a_ij d_j psi) = div F`` with ``psi = g`` on the boundary,
in weak form with continuous bilinear elements.  Cells never straddle the
contact line, so coefficient jumps sit on element edges and continuity of
``psi`` and of the normal flux across ``Y = 0`` hold in the Galerkin sense.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .duct import BackgroundPotentials
from .errors import EllipticityError, LinearSolveError, SubsonicityError
from .farfield import FarFieldSolution
from .gas import GasConstants, LayerInvariants, flux_A, jacobian_from_state, reconstruct_state
from .grid import GAUSS_1D, LagrangianGrid, NodeField

log = logging.getLogger(__name__)

_T_NODES, _T_WEIGHTS = np.polynomial.legendre.leggauss(3)
T_NODES = 0.5 * (_T_NODES + 1.0)
T_WEIGHTS = 0.5 * _T_WEIGHTS


@dataclass
class CoefficientField:
    a: np.ndarray  # (ny, nx, 4, 2, 2)
    lam_min: float
    lam_max: float

    @property
    def ellipticity_ratio(self) -> float:
        return self.lam_max / self.lam_min

    @classmethod
    def identity(cls, grid: LagrangianGrid) -> "CoefficientField":
        a = np.zeros((grid.ny, grid.nx, 4, 2, 2))
        a[..., 0, 0] = a[..., 1, 1] = 1.0
        return cls(a, 1.0, 1.0)


@dataclass
class LinearSystem:
    K: sp.csr_matrix
    b: np.ndarray
    fixed: np.ndarray  # boolean, flat node order
    g: np.ndarray  # Dirichlet values on fixed nodes (flat, full length)
    shape: tuple[int, int]
    K_ff: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)


@dataclass
class SolveInfo:
    iterations: int
    residuals: list[float]


def sym2_eigenvalues(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues of symmetric 2x2 matrices stored on the last two axes."""
    half_tr = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    disc = np.sqrt((0.5 * (a[..., 0, 0] - a[..., 1, 1])) ** 2 + a[..., 0, 1] ** 2)
    return half_tr - disc, half_tr + disc


def layer_arrays(grid: LagrangianGrid, ff: FarFieldSolution) -> LayerInvariants:
    """Per-cell-row layer invariants shaped to broadcast over ``(ny, nx, 4)``."""
    top = grid.cell_is_top[:, None, None]
    return LayerInvariants(np.where(top, ff.layer_top.B, ff.layer_bot.B),
                           np.where(top, ff.layer_top.S, ff.layer_bot.S))


def _admissible(q, layer: LayerInvariants, gc: GasConstants) -> np.ndarray:
    g = gc.gamma
    rho = layer.critical_density(gc)
    q1, q2 = q[..., 0], q[..., 1]
    val = layer.B * rho**2 - g / (g - 1.0) * layer.S * rho ** (g + 1.0) - (1.0 + q1**2) / (2.0 * q2**2)
    return (q2 > 0) & (val > 0)


def _locate(mask_bad: np.ndarray, grid: LagrangianGrid) -> str:
    X, Yq = grid.quadrature_points()
    j, c, k = np.argwhere(mask_bad)[0]
    return f"x={X[j, c, k]:.6g}, Y={Yq[j, c, k]:.6g}"


def assemble_coefficients(phi: NodeField, grid: LagrangianGrid, ff: FarFieldSolution,
                          gc: GasConstants | None = None,
                          phi0: np.ndarray | None = None) -> CoefficientField:
    """Secant coefficients ``int_0^1 D_q A(D phi_0 + t D(phi - phi_0)) dt``.

    ``phi0`` is the nodal connector; by default it is rebuilt from ``ff``.
    The ``t`` integral uses 3-point Gauss-Legendre.
    """
    gc = gc or ff.gc
    if phi0 is None:
        X, Yn = grid.mesh()
        phi0 = BackgroundPotentials(ff).phi_0(X, Yn)
    layer = layer_arrays(grid, ff)
    q_phi = grid.quadrature_gradients(phi.values)
    q_0 = grid.quadrature_gradients(phi0)
    a = np.zeros(q_phi.shape[:-1] + (2, 2))
    for t, w in zip(T_NODES, T_WEIGHTS):
        q = q_0 + t * (q_phi - q_0)
        ok = _admissible(q, layer, gc)
        if not ok.all():
            raise SubsonicityError(f"iterate left subsonic neighborhood at {_locate(~ok, grid)}")
        u, v, p, rho = reconstruct_state(q, layer, gc)
        c2 = gc.gamma * p / rho
        if np.any(c2 <= u**2 + v**2):
            raise EllipticityError(f"ellipticity lost at {_locate(c2 <= u**2 + v**2, grid)}")
        a += w * jacobian_from_state(u, v, rho, c2)
    if not np.array_equal(a[..., 0, 1], a[..., 1, 0]):
        raise EllipticityError("coefficient matrix lost symmetry")
    lo, hi = sym2_eigenvalues(a)
    lam_min, lam_max = float(lo.min()), float(hi.max())
    if lam_min <= 0:
        raise EllipticityError(f"ellipticity lost: min eigenvalue {lam_min:.3e} at {_locate(lo <= 0, grid)}")
    return CoefficientField(a, lam_min, lam_max)


def connector_source(grid: LagrangianGrid, ff: FarFieldSolution, phi0: np.ndarray,
                     gc: GasConstants | None = None) -> np.ndarray:
    """``A(D phi_l) - A(D phi_0)`` at Gauss points.

    Both gradients come from nodal interpolants, so the source vanishes
    identically wherever the connector coincides with ``phi_l``.
    """
    gc = gc or ff.gc
    layer = layer_arrays(grid, ff)
    q0 = grid.quadrature_gradients(phi0)
    ok = _admissible(q0, layer, gc)
    if not ok.all():
        raise SubsonicityError(f"sigma too large for connector at {_locate(~ok, grid)}")
    X, Yn = grid.mesh()
    ql = grid.quadrature_gradients(BackgroundPotentials(ff).phi_l(X, Yn))
    return flux_A(ql, layer, gc) - flux_A(q0, layer, gc)


def stiffness_matrix(coeff: CoefficientField, grid: LagrangianGrid) -> sp.csr_matrix:
    dN = grid.shape_gradients
    w = grid.quadrature_weights
    Ke = np.einsum("jqmd,jcqde,jqne->jcmn", dN, coeff.a, dN) * w[:, None, None, None]
    nodes = grid.cell_nodes
    rows = np.broadcast_to(nodes[..., :, None], Ke.shape).ravel()
    cols = np.broadcast_to(nodes[..., None, :], Ke.shape).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(grid.n_nodes, grid.n_nodes)).tocsr()
    K.sum_duplicates()
    return K


def load_vector(F: np.ndarray, grid: LagrangianGrid) -> np.ndarray:
    """``b_m = sum_cells int F . grad N_m`` for a flux field at Gauss points."""
    be = np.einsum("jcqd,jqmd->jcm", F, grid.shape_gradients) * grid.quadrature_weights[:, None, None]
    return np.bincount(grid.cell_nodes.ravel(), weights=be.ravel(), minlength=grid.n_nodes)


def body_load_vector(f: np.ndarray, grid: LagrangianGrid) -> np.ndarray:
    """``b_m = sum_cells int f N_m`` for a scalar field at Gauss points."""
    xi, et = np.meshgrid(GAUSS_1D, GAUSS_1D, indexing="xy")
    xi, et = xi.ravel(), et.ravel()
    N = np.stack([(1 - xi) * (1 - et), xi * (1 - et), (1 - xi) * et, xi * et], axis=-1)
    be = np.einsum("jcq,qm->jcm", f, N) * grid.quadrature_weights[:, None, None]
    return np.bincount(grid.cell_nodes.ravel(), weights=be.ravel(), minlength=grid.n_nodes)


def assemble_system(coeff: CoefficientField, F0: np.ndarray | None, g: np.ndarray,
                    grid: LagrangianGrid, body: np.ndarray | None = None) -> LinearSystem:
    """Galerkin system with Dirichlet nodes folded into the right-hand side.

    Weak form: ``int a D psi . D z = int F0 . D z + int body z``.
    """
    K = stiffness_matrix(coeff, grid)
    b = load_vector(F0, grid) if F0 is not None else np.zeros(grid.n_nodes)
    if body is not None:
        b = b + body_load_vector(body, grid)
    fixed = grid.boundary_mask.ravel()
    gv = np.where(fixed, np.asarray(g, dtype=float).ravel(), 0.0)
    free = ~fixed
    K_ff = K[free][:, free].tocsr()
    rhs = b[free] - K[free][:, fixed] @ gv[fixed]
    return LinearSystem(K=K, b=b, fixed=fixed, g=gv, shape=grid.shape, K_ff=K_ff, rhs=rhs)


def pcg(A: sp.csr_matrix, b: np.ndarray, tol: float = 1e-10, x0: np.ndarray | None = None,
        maxiter: int | None = None) -> tuple[np.ndarray, SolveInfo]:
    """Jacobi-preconditioned conjugate gradients; stops on ``|r| <= tol |b|``."""
    n = b.size
    maxiter = maxiter or int(50 * math.sqrt(n)) + 1
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    r = b - A @ x if x0 is not None else b.copy()
    rnorm = np.linalg.norm(r)
    history = [rnorm / bnorm if bnorm > 0 else 0.0]
    if bnorm == 0.0 or rnorm <= tol * bnorm:
        if bnorm == 0.0:
            x[:] = 0.0
        return x, SolveInfo(0, history)
    z = dinv * r
    d = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ad = A @ d
        alpha = rz / (d @ Ad)
        x += alpha * d
        r -= alpha * Ad
        rnorm = np.linalg.norm(r)
        history.append(rnorm / bnorm)
        if rnorm <= tol * bnorm:
            return x, SolveInfo(k, history)
        z = dinv * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    raise LinearSolveError(f"linear solve failed: relative residual {history[-1]:.3e} after {maxiter} iterations",
                           residuals=history)


def solve(sys: LinearSystem, tol: float = 1e-10, x0: np.ndarray | None = None,
          name: str = "psi") -> tuple[NodeField, SolveInfo]:
    free = ~sys.fixed
    guess = None if x0 is None else np.asarray(x0, dtype=float).ravel()[free]
    xf, info = pcg(sys.K_ff, sys.rhs, tol=tol, x0=guess)
    full = sys.g.copy()
    full[free] = xf
    log.debug("pcg: %d iterations, final relative residual %.3e", info.iterations, info.residuals[-1])
    return NodeField(full.reshape(sys.shape), name, constrained=True), info


def dump_matrix(sys: LinearSystem, path: str | Path) -> None:
    """Write the full stiffness matrix as ``row col value`` lines."""
    K = sys.K.tocoo()
    order = np.lexsort((K.col, K.row))
    with open(path, "w") as fh:
        for r, c, v in zip(K.row[order], K.col[order], K.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")


def dirichlet_energy(values: np.ndarray, grid: LagrangianGrid) -> float:
    """``int |D f|^2`` of the bilinear interpolant of ``values``."""
    q = grid.quadrature_gradients(values)
    return float(np.einsum("jcqd,jcqd,j->", q, q, grid.quadrature_weights))


def energy_ratio(psi: np.ndarray, F0: np.ndarray, g: np.ndarray, grid: LagrangianGrid) -> float:
    """``int |D psi|^2 / (|F0|_inf^2 + int |D g|^2)``; the constant of the energy bound."""
    denom = float(np.max(np.abs(F0))) ** 2 + dirichlet_energy(g, grid)
    num = dirichlet_energy(psi, grid)
    return num / denom if denom > 0 else (0.0 if num == 0 else math.inf)
