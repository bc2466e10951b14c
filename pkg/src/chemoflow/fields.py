"""Grids, discrete fields, simulation state, and physical parameters.

Scalars live on a uniform collocated grid of cell centers with shape
(ny, nx); row j corresponds to y = (j + 1/2) hy, column i to
x = (i + 1/2) hx.  Vector fields carry a leading component axis of
length dim.  In one dimension ny is forced to 1 and the y extent is a
unit cross section, so cellwise integrals reduce to hx * sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Iterator

import numpy as np


class BCKind(Enum):
    """Boundary condition family applied by all stencil operators.

    PERIODIC_ALL wraps every field in every direction.  PAPER imposes
    no-slip velocity together with homogeneous Neumann conditions for
    the density and the chemical concentration.
    """

    PERIODIC_ALL = "periodic"
    PAPER = "paper"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on a rectangle.

    The stored spacings hx, hy are authoritative; the extents lx, ly
    are derived products so that snapshot round trips are bit exact.
    """

    dim: int
    nx: int
    ny: int
    hx: float
    hy: float
    bc: BCKind

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.nx < 4:
            raise ValueError(f"nx must be at least 4, got {self.nx}")
        if self.dim == 1 and self.ny != 1:
            raise ValueError("ny must be 1 when dim == 1")
        if self.dim == 2 and self.ny < 4:
            raise ValueError(f"ny must be at least 4 when dim == 2, got {self.ny}")
        if not (self.hx > 0.0) or not (self.hy > 0.0):
            raise ValueError("grid spacings must be positive")
        if not isinstance(self.bc, BCKind):
            raise ValueError(f"bc must be a BCKind, got {self.bc!r}")

    @property
    def lx(self) -> float:
        return self.nx * self.hx

    @property
    def ly(self) -> float:
        return self.ny * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def cell_volume(self) -> float:
        return self.hx * self.hy

    @cached_property
    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (X, Y), each of shape (ny, nx), with cell-center coordinates."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        X, Y = np.meshgrid(x, y)
        return X, Y


def make_grid(
    dim: int,
    nx: int,
    ny: int = 1,
    lx: float = 1.0,
    ly: float = 1.0,
    bc: BCKind = BCKind.PERIODIC_ALL,
) -> Grid:
    """Build a grid from cell counts and domain extents.

    For dim == 1 the values of ny and ly are ignored; the cross section
    is one cell of unit height so integrals carry no spurious area
    factor.
    """
    if dim == 1:
        ny, ly = 1, 1.0
    if nx < 1 or ny < 1:
        raise ValueError("cell counts must be positive")
    if not (lx > 0.0) or not (ly > 0.0):
        raise ValueError("domain extents must be positive")
    hy = 1.0 if dim == 1 else ly / ny
    return Grid(dim=dim, nx=nx, ny=ny, hx=lx / nx, hy=hy, bc=bc)


def _as_data(grid: Grid, data: np.ndarray, expected_shape: tuple[int, ...], kind: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.shape != expected_shape:
        raise ValueError(
            f"{kind} data shape {arr.shape} does not match grid shape {expected_shape}"
        )
    return arr


@dataclass
class ScalarField:
    """A scalar sampled at cell centers, shape (ny, nx)."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = _as_data(self.grid, self.data, self.grid.shape, "scalar")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "ScalarField":
        X, Y = grid.cell_centers
        return cls(grid, np.broadcast_to(np.asarray(fn(X, Y), dtype=np.float64), grid.shape).copy())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy())


@dataclass
class VectorField:
    """A vector sampled at cell centers, shape (dim, ny, nx)."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        shape = (self.grid.dim,) + self.grid.shape
        self.data = _as_data(self.grid, self.data, shape, "vector")

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.dim,) + grid.shape))

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable) -> "VectorField":
        X, Y = grid.cell_centers
        comps = fn(X, Y)
        data = np.stack([np.broadcast_to(np.asarray(comp, dtype=np.float64), grid.shape) for comp in comps])
        return cls(grid, data.copy())

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.data.copy())


def integrate_cellwise(f: ScalarField) -> float:
    """Midpoint-rule integral over the domain: cell volume times the sum.

    The summation is numpy's pairwise reduction, which is deterministic
    for a fixed array shape, so repeated audits produce bit-identical
    values.  Non-finite data is rejected.
    """
    if not np.all(np.isfinite(f.data)):
        bad = int(np.flatnonzero(~np.isfinite(f.data))[0])
        raise ValueError(f"cannot integrate non-finite field (first bad flat index {bad})")
    return f.grid.cell_volume * float(np.sum(f.data))


# Negative undershoot tolerances used by State.validate.
RHO_NEG_TOL = 1e-13
C_NEG_TOL = 1e-13


@dataclass
class State:
    """Density, velocity, and chemical concentration at one time."""

    t: float
    rho: ScalarField
    v: VectorField
    c: ScalarField

    def __post_init__(self):
        g = self.rho.grid
        if self.v.grid != g or self.c.grid != g:
            raise ValueError("all fields of a State must share one grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    def validate(self) -> None:
        """Check finiteness and nonnegativity up to roundoff undershoot.

        A negative density entry below -1e-13 * max(rho) is a genuine
        positivity violation and is rejected; the same rule applies to
        the concentration.
        """
        for name, arr in (("rho", self.rho.data), ("v", self.v.data), ("c", self.c.data)):
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise ValueError(f"field '{name}' has a non-finite entry at flat index {bad}")
        for name, arr, tol in (
            ("rho", self.rho.data, RHO_NEG_TOL),
            ("c", self.c.data, C_NEG_TOL),
        ):
            floor = -tol * max(float(arr.max(initial=0.0)), 1.0)
            lo = float(arr.min())
            if lo < floor:
                bad = int(np.argmin(arr))
                raise ValueError(
                    f"field '{name}' is negative beyond roundoff at flat index {bad}: "
                    f"{lo!r} < {floor!r}"
                )

    def copy(self) -> "State":
        return State(self.t, self.rho.copy(), self.v.copy(), self.c.copy())


@dataclass(frozen=True)
class PhysParams:
    """Physical and regularization parameters.

    gamma   adiabatic exponent of the pressure law, gamma > 1
    mu      shear viscosity, mu > 0
    lam     bulk viscosity offset, constrained by 3 lam + 2 mu > 0
    zeta    friction relaxation time, zeta > 0
    eps     artificial density diffusion (0 disables)
    delta   artificial pressure strength (0 disables)
    beta    artificial pressure exponent, beta > 4 whenever delta > 0
    """

    gamma: float = 2.0
    mu: float = 0.1
    lam: float = 0.0
    zeta: float = 1.0
    eps: float = 0.0
    delta: float = 0.0
    beta: float = 4.5

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not 3.0 * self.lam + 2.0 * self.mu > 0.0:
            raise ValueError(
                f"need 3*lam + 2*mu > 0, got lam = {self.lam}, mu = {self.mu}"
            )
        if not self.zeta > 0.0:
            raise ValueError(f"zeta must be > 0, got {self.zeta}")
        if self.eps < 0.0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.delta > 0.0 and not self.beta > 4.0:
            raise ValueError(
                f"beta must be > 4 when delta > 0, got beta = {self.beta}"
            )


@dataclass
class Trajectory:
    """An ordered sequence of states plus the settings that produced it."""

    grid: Grid
    params: PhysParams
    settings: object = None
    seed: int | None = None
    times: list[float] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    diagnostic: str | None = None
    n_steps: int = 0
    min_rho_seen: float = np.inf
    min_c_seen: float = np.inf

    def append(self, state: State) -> None:
        if state.grid != self.grid:
            raise ValueError("snapshot grid does not match trajectory grid")
        if self.times and state.t <= self.times[-1]:
            raise ValueError(
                f"snapshot times must increase: {state.t!r} after {self.times[-1]!r}"
            )
        self.times.append(state.t)
        self.states.append(state)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)

    def __getitem__(self, idx: int) -> State:
        return self.states[idx]
