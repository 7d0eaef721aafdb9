"""Tensor-product mesh of the truncated Lagrangian strip.

Nodes are stored as 2-D arrays of shape ``(ny + 1, nx + 1)``: row ``j`` is a
line of constant ``Y`` (row 0 is the bottom wall), column ``i`` a line of
constant ``x`` (column 0 is ``x = -R``).  The flat node index is
``j * (nx + 1) + i``.  The contact line ``Y = 0`` is node row ``ny_bot``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .farfield import FarFieldSolution

_G = 0.5 / np.sqrt(3.0)
GAUSS_1D = np.array([0.5 - _G, 0.5 + _G])


@dataclass(frozen=True)
class NodeField:
    values: np.ndarray
    name: str = ""
    constrained: bool = False

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"node field {self.name!r} has non-finite values")


@dataclass(frozen=True)
class LagrangianGrid:
    R: float
    nx: int
    ny_top: int
    ny_bot: int
    m_top: float
    m_bot: float
    x: np.ndarray = field(init=False, repr=False, compare=False)
    Y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.R < 10:
            raise ValueError("truncation half-length R must be at least 10")
        if min(self.nx, self.ny_top, self.ny_bot) < 4:
            raise ValueError("cell counts must be at least 4 in every direction")
        object.__setattr__(self, "x", np.linspace(-self.R, self.R, self.nx + 1))
        Yb = np.linspace(-self.m_bot, 0.0, self.ny_bot + 1)
        Yt = np.linspace(0.0, self.m_top, self.ny_top + 1)
        object.__setattr__(self, "Y", np.concatenate([Yb, Yt[1:]]))

    @property
    def ny(self) -> int:
        return self.ny_top + self.ny_bot

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    @property
    def n_nodes(self) -> int:
        return (self.ny + 1) * (self.nx + 1)

    @property
    def interface_row(self) -> int:
        return self.ny_bot

    @property
    def hx(self) -> float:
        return 2.0 * self.R / self.nx

    @property
    def hy_top(self) -> float:
        return self.m_top / self.ny_top

    @property
    def hy_bot(self) -> float:
        return self.m_bot / self.ny_bot

    @property
    def h(self) -> float:
        """Largest mesh spacing."""
        return max(self.hx, self.hy_top, self.hy_bot)

    @cached_property
    def cell_hy(self) -> np.ndarray:
        return np.diff(self.Y)

    @cached_property
    def cell_is_top(self) -> np.ndarray:
        return np.arange(self.ny) >= self.ny_bot

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.Y)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[0, :] = m[-1, :] = True
        m[:, 0] = m[:, -1] = True
        return m

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """Global node indices per cell, local order (i,j), (i+1,j), (i,j+1), (i+1,j+1)."""
        n1 = self.nx + 1
        j, i = np.meshgrid(np.arange(self.ny), np.arange(self.nx), indexing="ij")
        base = j * n1 + i
        return np.stack([base, base + 1, base + n1, base + n1 + 1], axis=-1)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Bilinear basis gradients, shape ``(ny, 4 qpts, 4 nodes, 2)``."""
        xi, et = np.meshgrid(GAUSS_1D, GAUSS_1D, indexing="xy")
        xi, et = xi.ravel(), et.ravel()
        dxi = np.stack([-(1 - et), (1 - et), -et, et], axis=-1)
        det = np.stack([-(1 - xi), -xi, (1 - xi), xi], axis=-1)
        hy = self.cell_hy[:, None, None]
        return np.stack([np.broadcast_to(dxi / self.hx, hy.shape[:1] + dxi.shape),
                         det / hy], axis=-1)

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Per-row weight of each of the 4 Gauss points (area / 4)."""
        return 0.25 * self.hx * self.cell_hy

    def quadrature_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of the Gauss points, each of shape ``(ny, nx, 4)``."""
        xi, et = np.meshgrid(GAUSS_1D, GAUSS_1D, indexing="xy")
        X = self.x[:-1, None] + self.hx * xi.ravel()[None, :]
        Yq = self.Y[:-1, None] + self.cell_hy[:, None] * et.ravel()[None, :]
        X = np.broadcast_to(X[None], (self.ny, self.nx, 4))
        Yq = np.broadcast_to(Yq[:, None, :], (self.ny, self.nx, 4))
        return X, Yq

    def quadrature_gradients(self, values: np.ndarray) -> np.ndarray:
        """Gradient of the bilinear interpolant at every Gauss point: ``(ny, nx, 4, 2)``."""
        f = np.asarray(values).ravel()[self.cell_nodes]
        return np.einsum("jcn,jqnd->jcqd", f, self.shape_gradients)

    def gradient_at_quadrature(self, fld: NodeField, cell: tuple[int, int]) -> np.ndarray:
        """Gradients ``(q1, q2)`` at the four Gauss points of cell ``(j, i)``."""
        j, i = cell
        f = np.asarray(fld.values).ravel()[self.cell_nodes[j, i]]
        return np.einsum("n,qnd->qd", f, self.shape_gradients[j])

    def field(self, values, name: str = "", constrained: bool = False) -> NodeField:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise ValueError(f"expected node array of shape {self.shape}, got {values.shape}")
        return NodeField(values, name, constrained)


def build_grid(R: float, nx: int, ny_top: int, ny_bot: int, ff: FarFieldSolution) -> LagrangianGrid:
    return LagrangianGrid(R=float(R), nx=int(nx), ny_top=int(ny_top), ny_bot=int(ny_bot),
                          m_top=ff.m_top, m_bot=ff.m_bot)
