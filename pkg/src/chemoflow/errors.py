"""Exception types shared across the package."""

from __future__ import annotations


class SimulationError(RuntimeError):
    """Base class for runtime failures during time integration."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        # Partial trajectory up to the failure, when available.
        self.trajectory = trajectory


class NonFiniteFieldError(SimulationError):
    """A field developed a NaN or Inf entry.

    Carries the name of the offending field and the flat index of the
    first bad cell so the failure site can be localised.
    """

    def __init__(self, field_name: str, flat_index: int, t: float, trajectory=None):
        msg = (
            f"non-finite value in field '{field_name}' at flat cell index "
            f"{flat_index} (t = {t!r})"
        )
        super().__init__(msg, trajectory)
        self.field_name = field_name
        self.flat_index = flat_index
        self.t = t


class CflUnderflowError(SimulationError):
    """The stable time step collapsed below 1e-12; vacuum or blow-up suspected."""

    def __init__(self, dt: float, t: float, trajectory=None):
        msg = (
            f"CFL time step {dt!r} fell below 1e-12 at t = {t!r}; "
            "vacuum or blow-up suspected"
        )
        super().__init__(msg, trajectory)
        self.dt = dt
        self.t = t


class SnapshotFormatError(ValueError):
    """Snapshot file is malformed, truncated, or has an inconsistent header."""


class ConfigError(ValueError):
    """Config text is malformed; message carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
