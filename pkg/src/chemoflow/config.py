"""Line-oriented run configuration: `key = value`, `#` comments.

Unknown keys, duplicate keys, and malformed values are rejected with
the offending line number.  Missing keys take the documented defaults,
so a minimal file like

    nx = 32
    t_end = 0.1

is a complete configuration.  serialize round-trips through parse.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np

from .dynamics import SchemeSettings
from .errors import ConfigError
from .fields import BCKind, Grid, PhysParams, ScalarField, State, VectorField, make_grid
from .synth import gaussian_blob, random_nonneg_scalar

_IC_KINDS = ("constant", "gaussian_blob", "random_smooth", "from_snapshot")

# 2-D and 3-D admissibility thresholds for the adiabatic exponent.
GAMMA_MIN_D2 = 1.5
GAMMA_MIN_D3 = 1.6


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run, audit, or study in one flat record."""

    # Grid and boundary family
    dim: int = 2
    nx: int = 32
    ny: int = -1  # -1 means: same as nx
    lx: float = 1.0
    ly: float = 1.0
    bc: str = "periodic"
    # Physics
    gamma: float = 2.0
    mu: float = 0.1
    lam: float = 0.0
    zeta: float = 1.0
    eps: float = 0.0
    delta: float = 0.0
    beta: float = 4.5
    d3_semantics: bool = False
    # Scheme
    integrator: str = "heun2"
    cfl_adv: float = 0.4
    cfl_diff: float = 0.45
    rho_floor: float = 1e-10
    t_end: float = 0.1
    snapshot_stride: int = 1
    snap_dt: float | None = None
    seed: int = 0
    # Initial condition
    ic: str = "constant"
    ic_rho: float = 1.0
    ic_c: float = 0.0
    ic_background: float = 0.5
    ic_amplitude: float = 0.5
    ic_width: float = 0.1
    ic_center_x: float = 0.5
    ic_center_y: float = 0.5
    ic_modes: int = 2
    ic_path: str = ""
    # Audit and study controls
    audit_form: str = "auto"
    audit_scales: tuple[float, ...] = (1.0, 0.5, 0.25)
    sug_m: float = 2.0
    sug_d: int = 2
    sug_kappa: float = 0.5
    sug_xi: float = 0.25
    sug_pairs: int = 100
    mms_resolutions: tuple[int, ...] = (16, 32, 64)
    mms_dim: int = 2
    mms_t_end: float = 0.02
    rel_weak: int = 32
    rel_fine: int = 128
    ws_coarse: tuple[int, ...] = (16, 32, 64)
    ws_fine: int = 128
    ws_ratio_min: float = 1.5

    @property
    def ny_effective(self) -> int:
        return self.nx if self.ny == -1 else self.ny


_BOOL_TOKENS = {"true": True, "false": False}


def _parse_value(name: str, kind: str, text: str, line_no: int):
    text = text.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "opt_float":
            return None if text == "none" else float(text)
        if kind == "bool":
            if text not in _BOOL_TOKENS:
                raise ValueError(f"expected true or false, got {text!r}")
            return _BOOL_TOKENS[text]
        if kind == "str":
            return text
        if kind == "int_list":
            return tuple(int(tok.strip()) for tok in text.split(",") if tok.strip())
        if kind == "float_list":
            return tuple(float(tok.strip()) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {exc}", line_no) from None
    raise ConfigError(f"internal: unhandled kind {kind!r} for {name}", line_no)


def _schema() -> dict[str, str]:
    kinds: dict[str, str] = {}
    for f in dc_fields(RunConfig):
        if f.name == "snap_dt":
            kinds[f.name] = "opt_float"
        elif f.type in ("int",):
            kinds[f.name] = "int"
        elif f.type in ("float",):
            kinds[f.name] = "float"
        elif f.type in ("bool",):
            kinds[f.name] = "bool"
        elif f.type in ("str",):
            kinds[f.name] = "str"
        elif f.name in ("audit_scales",):
            kinds[f.name] = "float_list"
        elif f.name in ("mms_resolutions", "ws_coarse"):
            kinds[f.name] = "int_list"
        else:
            raise RuntimeError(f"unreachable schema entry {f.name}")
    return kinds


_SCHEMA = _schema()


def parse_config(text: str) -> tuple[RunConfig, list[str]]:
    """Parse config text; returns the config and advisory warnings."""
    values: dict[str, object] = {}
    seen_lines: dict[str, int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line_no)
        if key in seen_lines:
            raise ConfigError(
                f"duplicate key {key!r} (first set on line {seen_lines[key]})", line_no
            )
        seen_lines[key] = line_no
        values[key] = _parse_value(key, _SCHEMA[key], value, line_no)
    cfg = RunConfig(**values)
    warnings = validate_config(cfg)
    return cfg, warnings


def validate_config(cfg: RunConfig) -> list[str]:
    """Cross-field validation; returns warnings, raises on hard errors."""
    if cfg.bc not in ("periodic", "paper"):
        raise ConfigError(f"bc must be 'periodic' or 'paper', got {cfg.bc!r}")
    if cfg.ic not in _IC_KINDS:
        raise ConfigError(f"ic must be one of {_IC_KINDS}, got {cfg.ic!r}")
    if cfg.ic == "from_snapshot" and not cfg.ic_path:
        raise ConfigError("ic = from_snapshot requires ic_path")
    # Instantiating the parameter records runs their own invariants.
    try:
        config_params(cfg)
        config_settings(cfg)
        config_grid(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    warnings: list[str] = []
    if cfg.d3_semantics:
        if cfg.gamma <= GAMMA_MIN_D3:
            warnings.append(
                f"gamma = {cfg.gamma} is at or below the 3-D existence "
                f"threshold {GAMMA_MIN_D3}; continuing anyway"
            )
    elif cfg.gamma <= GAMMA_MIN_D2:
        warnings.append(
            f"gamma = {cfg.gamma} is at or below the 2-D existence "
            f"threshold {GAMMA_MIN_D2}; continuing anyway"
        )
    if cfg.ic in ("constant", "gaussian_blob") and cfg.ic_rho < 0.0:
        raise ConfigError("ic_rho must be nonnegative")
    return warnings


def serialize_config(cfg: RunConfig) -> str:
    """Emit every key in schema order; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in dc_fields(RunConfig):
        value = getattr(cfg, f.name)
        kind = _SCHEMA[f.name]
        if kind == "bool":
            text = "true" if value else "false"
        elif kind == "opt_float":
            text = "none" if value is None else repr(float(value))
        elif kind in ("int_list", "float_list"):
            text = ", ".join(repr(v) for v in value)
        elif kind == "float":
            text = repr(float(value))
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> tuple[RunConfig, list[str]]:
    return parse_config(Path(path).read_text())


# -- builders -----------------------------------------------------------


def config_grid(cfg: RunConfig) -> Grid:
    bc = BCKind.PERIODIC_ALL if cfg.bc == "periodic" else BCKind.PAPER
    return make_grid(cfg.dim, cfg.nx, cfg.ny_effective, cfg.lx, cfg.ly, bc)


def config_params(cfg: RunConfig) -> PhysParams:
    return PhysParams(
        gamma=cfg.gamma,
        mu=cfg.mu,
        lam=cfg.lam,
        zeta=cfg.zeta,
        eps=cfg.eps,
        delta=cfg.delta,
        beta=cfg.beta,
    )


def config_settings(cfg: RunConfig) -> SchemeSettings:
    return SchemeSettings(
        integrator=cfg.integrator,
        cfl_adv=cfg.cfl_adv,
        cfl_diff=cfg.cfl_diff,
        rho_floor=cfg.rho_floor,
        t_end=cfg.t_end,
        snapshot_stride=cfg.snapshot_stride,
        snap_dt=cfg.snap_dt,
    )


def config_initial(cfg: RunConfig, grid: Grid | None = None) -> State:
    """Build the initial state described by the config."""
    if grid is None:
        grid = config_grid(cfg)
    if cfg.ic == "from_snapshot":
        from .snapshot import read_snapshot

        state = read_snapshot(cfg.ic_path)
        if state.grid != grid:
            raise ConfigError(
                f"snapshot grid {state.grid.nx}x{state.grid.ny} does not match "
                f"config grid {grid.nx}x{grid.ny}"
            )
        return state
    if cfg.ic == "constant":
        rho = ScalarField.full(grid, cfg.ic_rho)
        c = ScalarField.full(grid, cfg.ic_c)
    elif cfg.ic == "gaussian_blob":
        fn = gaussian_blob(
            background=cfg.ic_background,
            amplitude=cfg.ic_amplitude,
            width=cfg.ic_width,
            cx=cfg.ic_center_x,
            cy=cfg.ic_center_y,
        )
        rho = ScalarField.from_callable(grid, fn)
        c = ScalarField.full(grid, cfg.ic_c)
    else:  # random_smooth
        rng = np.random.default_rng(cfg.seed)
        rho_fn = random_nonneg_scalar(
            rng, kmax=cfg.ic_modes, amplitude=cfg.ic_amplitude,
            base=cfg.ic_background, lx=grid.lx, ly=grid.ly,
        )
        c_fn = random_nonneg_scalar(
            rng, kmax=cfg.ic_modes, amplitude=0.8 * cfg.ic_amplitude,
            base=0.0, lx=grid.lx, ly=grid.ly,
        )
        rho = ScalarField.from_callable(grid, rho_fn)
        c = ScalarField.from_callable(grid, c_fn)
    state = State(0.0, rho, VectorField.zeros(grid), c)
    state.validate()
    return state
