"""Primitive fields from the stream potential, and the map back to the duct.

Each layer is reconstructed on its own block of node rows (both blocks contain
the contact row), so one-sided states on either side of the contact are kept
separately.  The Eulerian position of a Lagrangian node ``(x, Y)`` is
``(x, phi(x, Y))``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .duct import WallPerturbation, eta
from .errors import DomainError
from .farfield import FarFieldSolution
from .gas import GasConstants, LayerInvariants, reconstruct_state
from .grid import LagrangianGrid, NodeField


@dataclass
class LayerFields:
    Y: np.ndarray  # (rows,)
    y: np.ndarray  # (rows, nx+1), Eulerian height = phi
    u: np.ndarray
    v: np.ndarray
    p: np.ndarray
    rho: np.ndarray

    def states(self) -> np.ndarray:
        """Primitive vector ``(u, v, p, rho)`` on a trailing axis."""
        return np.stack([self.u, self.v, self.p, self.rho], axis=-1)


@dataclass
class LagrangianSolution:
    grid: LagrangianGrid
    phi: np.ndarray
    bottom: LayerFields
    top: LayerFields


@dataclass
class EulerianSolution:
    x: np.ndarray
    bottom: LayerFields
    top: LayerFields
    h_plus: np.ndarray  # sampled walls
    h_minus: np.ndarray
    dh_plus: np.ndarray
    dh_minus: np.ndarray

    @property
    def g_cd(self) -> np.ndarray:
        return self.top.y[0]

    @property
    def layers(self):
        return (("bottom", self.bottom), ("top", self.top))


def _block_gradient(phi_block: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Node gradients inside one layer.

    ``x``: fourth-order central away from the ends, second order on the last
    two columns.  ``Y``: second-order central inside; on the block's first and
    last rows (wall and contact) a four-point one-sided stencil that never
    reaches across the contact.
    """
    f = phi_block
    qx = np.gradient(f, hx, axis=1, edge_order=2)
    qx[:, 2:-2] = (f[:, :-4] - 8.0 * f[:, 1:-3] + 8.0 * f[:, 3:-1] - f[:, 4:]) / (12.0 * hx)
    qy = np.gradient(f, hy, axis=0, edge_order=2)
    qy[0] = (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * hy)
    qy[-1] = (11.0 * f[-1] - 18.0 * f[-2] + 9.0 * f[-3] - 2.0 * f[-4]) / (6.0 * hy)
    return np.stack([qx, qy], axis=-1)


def reconstruct(phi: NodeField | np.ndarray, grid: LagrangianGrid, ff: FarFieldSolution,
                gc: GasConstants | None = None) -> LagrangianSolution:
    gc = gc or ff.gc
    values = np.asarray(phi.values if isinstance(phi, NodeField) else phi, dtype=float)
    k = grid.interface_row
    blocks = {}
    for name, rows, hy, layer in (
        ("bottom", slice(0, k + 1), grid.hy_bot, ff.layer_bot),
        ("top", slice(k, None), grid.hy_top, ff.layer_top),
    ):
        block = values[rows]
        q = _block_gradient(block, grid.hx, hy)
        if np.any(q[..., 1] <= 0):
            raise DomainError("Lagrangian map not invertible: d phi/dY <= 0")
        u, v, p, rho = reconstruct_state(q, LayerInvariants(layer.B, layer.S), gc)
        blocks[name] = LayerFields(grid.Y[rows].copy(), block.copy(), u, v, p, rho)
    return LagrangianSolution(grid, values, blocks["bottom"], blocks["top"])


def to_eulerian(sol: LagrangianSolution, wp: WallPerturbation) -> EulerianSolution:
    x = sol.grid.x
    return EulerianSolution(
        x=x.copy(), bottom=sol.bottom, top=sol.top,
        h_plus=np.asarray(wp.h_plus(x), dtype=float) + 0 * x,
        h_minus=np.asarray(wp.h_minus(x), dtype=float) + 0 * x,
        dh_plus=np.asarray(wp.dh_plus(x), dtype=float) + 0 * x,
        dh_minus=np.asarray(wp.dh_minus(x), dtype=float) + 0 * x,
    )


NODE_COLUMNS = ("x", "Y", "y", "u", "v", "p", "rho", "layer")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_nodes_csv(sol: EulerianSolution, path: str | Path) -> None:
    """One row per (node, layer); contact nodes appear once per layer."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(NODE_COLUMNS)
        for tag, lf in ((-1, sol.bottom), (1, sol.top)):
            for j, Yj in enumerate(lf.Y):
                for i, xi in enumerate(sol.x):
                    w.writerow([_fmt(xi), _fmt(Yj), _fmt(lf.y[j, i]), _fmt(lf.u[j, i]),
                                _fmt(lf.v[j, i]), _fmt(lf.p[j, i]), _fmt(lf.rho[j, i]), tag])


def write_contact_csv(sol: EulerianSolution, ff: FarFieldSolution, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x", "g_cd", "omega_star_eta"))
        for xi, gi in zip(sol.x, sol.g_cd):
            w.writerow([_fmt(xi), _fmt(gi), _fmt(ff.omega_star * float(eta(xi)))])


def write_walls_csv(sol: EulerianSolution, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x", "h_plus", "h_minus", "dh_plus", "dh_minus"))
        for row in zip(sol.x, sol.h_plus, sol.h_minus, sol.dh_plus, sol.dh_minus):
            w.writerow([_fmt(v) for v in row])


def read_solution(run_dir: str | Path) -> EulerianSolution:
    """Rebuild an :class:`EulerianSolution` from ``nodes.csv`` and ``walls.csv``."""
    run_dir = Path(run_dir)
    data = np.genfromtxt(run_dir / "nodes.csv", delimiter=",", names=True)
    walls = np.genfromtxt(run_dir / "walls.csv", delimiter=",", names=True)
    x = np.unique(data["x"])
    nx1 = x.size
    blocks = {}
    for tag, name in ((-1, "bottom"), (1, "top")):
        d = data[data["layer"] == tag]
        order = np.lexsort((d["x"], d["Y"]))
        d = d[order]
        rows = d.size // nx1
        shaped = {c: d[c].reshape(rows, nx1) for c in ("Y", "y", "u", "v", "p", "rho")}
        blocks[name] = LayerFields(shaped["Y"][:, 0].copy(), shaped["y"], shaped["u"],
                                   shaped["v"], shaped["p"], shaped["rho"])
    return EulerianSolution(x=x, bottom=blocks["bottom"], top=blocks["top"],
                            h_plus=walls["h_plus"], h_minus=walls["h_minus"],
                            dh_plus=walls["dh_plus"], dh_minus=walls["dh_minus"])
