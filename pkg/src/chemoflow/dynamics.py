"""Semidiscrete right-hand side and explicit time integration.

The state advances (rho, m, c) with m = rho v the momentum density;
velocity is recovered as m / max(rho, rho_floor).  Time stepping is
Heun's method (explicit trapezoidal second order) under a combined
advective and diffusive CFL restriction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CflUnderflowError, NonFiniteFieldError, SimulationError
from .fields import Grid, PhysParams, ScalarField, State, Trajectory, VectorField
from .operators import StencilOps
from .thermo import PressureLaw, pressure

DT_MIN = 1e-12


@dataclass(frozen=True)
class Forcing:
    """Optional source terms, each a callable of (X, Y, t).

    g_mass and h_chem return arrays of shape (ny, nx); f_mom returns a
    sequence of dim such arrays (the force per unit mass, entering the
    momentum equation multiplied by rho).
    """

    g_mass: Callable | None = None
    f_mom: Callable | None = None
    h_chem: Callable | None = None

    @classmethod
    def none(cls) -> "Forcing":
        return cls()


@dataclass(frozen=True)
class SchemeSettings:
    """Time integration policy.

    snap_dt, when set, clips steps so snapshots land exactly on integer
    multiples of it; stride-based recording is used otherwise.
    include_convection switches the Rusanov transport terms off for
    convergence studies of the remaining (centered) operators.
    """

    integrator: str = "heun2"
    cfl_adv: float = 0.4
    cfl_diff: float = 0.45
    rho_floor: float = 1e-10
    t_end: float = 0.1
    snapshot_stride: int = 1
    snap_dt: float | None = None
    include_convection: bool = True
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.integrator != "heun2":
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if not (self.cfl_adv > 0.0 and self.cfl_diff > 0.0):
            raise ValueError("CFL numbers must be positive")
        if not self.rho_floor > 0.0:
            raise ValueError("rho_floor must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        if self.snap_dt is not None and not self.snap_dt > 0.0:
            raise ValueError("snap_dt must be positive when set")


def _check_finite(name: str, arr: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteFieldError(name, bad, t)


def momentum(state: State) -> VectorField:
    """Momentum density m = rho v."""
    return VectorField(state.grid, state.rho.data[None] * state.v.data)


def rhs(
    state: State,
    params: PhysParams,
    forcing: Forcing = Forcing.none(),
    *,
    ops: StencilOps | None = None,
    include_convection: bool = True,
) -> tuple[ScalarField, VectorField, ScalarField]:
    """Semidiscrete tendencies (d rho, d m, d c) at the state's time."""
    grid = state.grid
    if ops is None:
        ops = StencilOps(grid)
    law = PressureLaw(params.gamma)
    rho, v, c = state.rho, state.v, state.c
    rho_pos = np.maximum(rho.data, 0.0)

    # Mass: - div(rho v) + eps lap(rho) + g
    # Momentum: - div(m x v) - grad(p + delta rho^beta) - eps (grad rho . grad) v
    #           + mu lap(v) + (lam + mu) grad(div v) + rho grad(c) - rho v / zeta
    if include_convection:
        m_data = rho.data[None] * v.data
        quantities = [(rho.data, "scalar")] + [
            (m_data[k], "velocity") for k in range(grid.dim)
        ]
        fluxes = ops.convect_many(v, quantities)
        drho = -fluxes[0]
        dm = -np.stack(fluxes[1:])
    else:
        drho = np.zeros(grid.shape)
        dm = np.zeros((grid.dim,) + grid.shape)
    if params.eps > 0.0:
        drho = drho + params.eps * ops.laplacian(rho).data

    p_tot = pressure(rho_pos, law)
    if params.delta > 0.0:
        p_tot = p_tot + params.delta * rho_pos ** params.beta
    dm = dm - ops.grad(ScalarField(grid, p_tot)).data
    if params.eps > 0.0:
        grho = ops.grad(rho).data
        vg = ops.velocity_gradient(v)
        for k in range(grid.dim):
            adv = grho[0] * vg[k, 0]
            if grid.dim == 2:
                adv = adv + grho[1] * vg[k, 1]
            dm[k] -= params.eps * adv
    dm = dm + ops.viscous_terms(v, params.mu, params.lam + params.mu)
    gc = ops.grad(c).data
    dm = dm + rho.data[None] * gc
    dm = dm - rho.data[None] * v.data / params.zeta

    # Chemical: lap(c) - c + rho + h
    dc = ops.laplacian(c).data - c.data + rho.data

    if forcing.g_mass is not None or forcing.f_mom is not None or forcing.h_chem is not None:
        X, Y = grid.cell_centers
        if forcing.g_mass is not None:
            drho = drho + np.asarray(forcing.g_mass(X, Y, state.t))
        if forcing.f_mom is not None:
            f = np.stack([np.asarray(comp) for comp in forcing.f_mom(X, Y, state.t)])
            dm = dm + rho.data[None] * f
        if forcing.h_chem is not None:
            dc = dc + np.asarray(forcing.h_chem(X, Y, state.t))

    _check_finite("drho", drho, state.t)
    _check_finite("dm", dm, state.t)
    _check_finite("dc", dc, state.t)
    return (
        ScalarField(grid, drho),
        VectorField(grid, dm),
        ScalarField(grid, dc),
    )


def sound_speed(rho: np.ndarray, params: PhysParams) -> np.ndarray:
    """sqrt(p'(rho)) for the total (physical plus artificial) pressure."""
    r = np.maximum(rho, 0.0)
    c2 = params.gamma * r ** (params.gamma - 1.0)
    if params.delta > 0.0:
        c2 = c2 + params.delta * params.beta * r ** (params.beta - 1.0)
    return np.sqrt(c2)

def cfl_dt(state: State, params: PhysParams, settings: SchemeSettings) -> float:
    """Stable step from advective and diffusive restrictions.

    Raises CflUnderflowError when the step collapses below 1e-12, which
    signals vacuum formation or a blow-up in the velocity field.
    """
    grid = state.grid
    h_min = grid.hx if grid.dim == 1 else min(grid.hx, grid.hy)
    cs = sound_speed(state.rho.data, params)
    speed = float(np.max(np.abs(state.v.data) + cs[None]))
    dt_adv = settings.cfl_adv * h_min / speed if speed > 0.0 else np.inf
    nu_max = max(params.mu, params.lam + 2.0 * params.mu, 1.0, params.eps)
    dt_diff = settings.cfl_diff * h_min ** 2 / (2.0 * grid.dim * nu_max)
    dt = min(dt_adv, dt_diff)
    if not np.isfinite(dt) or dt < DT_MIN:
        raise CflUnderflowError(dt, state.t)
    return dt


def _advance(state: State, tend, dt: float, floor: float) -> State:
    """Forward-Euler update of (rho, m, c) by dt with velocity recovery."""
    drho, dm, dc = tend
    grid = state.grid
    rho_new = state.rho.data + dt * drho.data
    m_new = state.rho.data[None] * state.v.data + dt * dm.data
    c_new = state.c.data + dt * dc.data
    v_new = m_new / np.maximum(rho_new, floor)[None]
    return State(
        state.t + dt,
        ScalarField(grid, rho_new),
        VectorField(grid, v_new),
        ScalarField(grid, c_new),
    )


def step(
    state: State,
    params: PhysParams,
    settings: SchemeSettings,
    forcing: Forcing = Forcing.none(),
    dt: float | None = None,
    *,
    ops: StencilOps | None = None,
) -> State:
    """One Heun step; dt defaults to the CFL-stable value."""
    if ops is None:
        ops = StencilOps(state.grid)
    if dt is None:
        dt = cfl_dt(state, params, settings)
    kw = dict(ops=ops, include_convection=settings.include_convection)
    k1 = rhs(state, params, forcing, **kw)
    mid = _advance(state, k1, dt, settings.rho_floor)
    k2 = rhs(mid, params, forcing, **kw)
    grid = state.grid
    rho_new = state.rho.data + 0.5 * dt * (k1[0].data + k2[0].data)
    m_new = state.rho.data[None] * state.v.data + 0.5 * dt * (k1[1].data + k2[1].data)
    c_new = state.c.data + 0.5 * dt * (k1[2].data + k2[2].data)
    v_new = m_new / np.maximum(rho_new, settings.rho_floor)[None]
    return State(
        state.t + dt,
        ScalarField(grid, rho_new),
        VectorField(grid, v_new),
        ScalarField(grid, c_new),
    )


def run(
    initial: State,
    params: PhysParams,
    settings: SchemeSettings,
    forcing: Forcing = Forcing.none(),
    *,
    seed: int | None = None,
    observer: Callable[[State], None] | None = None,
) -> Trajectory:
    """Integrate to settings.t_end, recording snapshots along the way.

    Snapshots are recorded at the initial time, every snapshot_stride
    steps (or at exact multiples of snap_dt when set), and at the final
    time.  On failure the raised SimulationError carries the partial
    trajectory and the trajectory's diagnostic notes the cause.

    observer, when given, is called with the initial state and with
    every accepted state.  Per-step audits use it to accumulate scalar
    summaries without keeping full snapshots of each step.
    """
    grid = initial.grid
    ops = StencilOps(grid)
    traj = Trajectory(grid=grid, params=params, settings=settings, seed=seed)
    initial.validate()
    state = initial
    traj.append(state)
    if observer is not None:
        observer(state)
    t_end = settings.t_end
    eps_t = 1e-12 * max(t_end, 1.0)
    next_snap_k = 1
    try:
        while state.t < t_end - eps_t:
            if traj.n_steps >= settings.max_steps:
                raise SimulationError(
                    f"exceeded max_steps = {settings.max_steps} at t = {state.t!r}"
                )
            dt = cfl_dt(state, params, settings)
            dt = min(dt, t_end - state.t)
            record = False
            if settings.snap_dt is not None:
                target = next_snap_k * settings.snap_dt
                if state.t + dt >= target - eps_t:
                    dt = target - state.t
                    record = True
            state = step(state, params, settings, forcing, dt, ops=ops)
            traj.n_steps += 1
            traj.min_rho_seen = min(traj.min_rho_seen, float(state.rho.data.min()))
            traj.min_c_seen = min(traj.min_c_seen, float(state.c.data.min()))
            if observer is not None:
                observer(state)
            if settings.snap_dt is None:
                record = traj.n_steps % settings.snapshot_stride == 0
            elif record:
                next_snap_k += 1
            if state.t >= t_end - eps_t:
                record = True
            if record:
                traj.append(state)
    except SimulationError as exc:
        traj.diagnostic = str(exc)
        exc.trajectory = traj
        raise
    if traj.min_rho_seen < -1e-10 or traj.min_c_seen < -1e-10:
        traj.diagnostic = (
            f"positivity undershoot: min rho {traj.min_rho_seen!r}, "
            f"min c {traj.min_c_seen!r}"
        )
    return traj
