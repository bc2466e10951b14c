"""Binary state snapshots with an ASCII header and raw float64 payload.

Layout:

    VNSF1\n
    dim 2\n
    nx 64\n
    ny 64\n
    hx 0.015625\n
    hy 0.015625\n
    t 0.05\n
    bc periodic\n
    \n
    <payload>

The payload is little-endian float64, row major, fields concatenated in
the order rho, v1, (v2 when dim == 2,) c.  Header floats are written
with shortest round-trip formatting and the payload preserves bits, so
read(write(state)) reproduces the state exactly.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import SnapshotFormatError
from .fields import BCKind, Grid, ScalarField, State, VectorField

MAGIC = b"VNSF1"

_HEADER_KEYS = ("dim", "nx", "ny", "hx", "hy", "t", "bc")


def _format_float(x: float) -> str:
    return repr(float(x))


def write_snapshot(state: State, path: str | Path) -> None:
    """Serialize a state; overwrites the target file."""
    grid = state.grid
    lines = [
        MAGIC.decode(),
        f"dim {grid.dim}",
        f"nx {grid.nx}",
        f"ny {grid.ny}",
        f"hx {_format_float(grid.hx)}",
        f"hy {_format_float(grid.hy)}",
        f"t {_format_float(state.t)}",
        f"bc {grid.bc.value}",
        "",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii")
    arrays = [state.rho.data] + [state.v.data[k] for k in range(grid.dim)] + [state.c.data]
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path: str | Path) -> State:
    """Deserialize a state, validating magic, header, and payload size."""
    with open(path, "rb") as fh:
        blob = fh.read()
    stream = io.BytesIO(blob)
    magic = stream.readline().rstrip(b"\n")
    if magic != MAGIC:
        raise SnapshotFormatError(
            f"bad magic {magic[:16]!r}; expected {MAGIC.decode()!r}"
        )
    fields: dict[str, str] = {}
    while True:
        raw = stream.readline()
        if raw == b"":
            raise SnapshotFormatError("header ended without a blank separator line")
        line = raw.rstrip(b"\n").decode("ascii", errors="replace")
        if line == "":
            break
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise SnapshotFormatError(f"malformed header line {line!r}")
        key, value = parts
        if key not in _HEADER_KEYS:
            raise SnapshotFormatError(f"unknown header key {key!r}")
        if key in fields:
            raise SnapshotFormatError(f"duplicate header key {key!r}")
        fields[key] = value
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise SnapshotFormatError(f"missing header keys {missing}")
    try:
        dim = int(fields["dim"])
        nx = int(fields["nx"])
        ny = int(fields["ny"])
        hx = float(fields["hx"])
        hy = float(fields["hy"])
        t = float(fields["t"])
    except ValueError as exc:
        raise SnapshotFormatError(f"malformed header value: {exc}") from exc
    try:
        bc = BCKind(fields["bc"])
    except ValueError as exc:
        raise SnapshotFormatError(f"unknown bc token {fields['bc']!r}") from exc
    try:
        grid = Grid(dim=dim, nx=nx, ny=ny, hx=hx, hy=hy, bc=bc)
    except ValueError as exc:
        raise SnapshotFormatError(f"inconsistent header: {exc}") from exc

    payload = blob[stream.tell():]
    n_fields = 2 + dim
    expected = n_fields * nx * ny * 8
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload has {len(payload)} bytes, expected {expected}"
        )
    flat = np.frombuffer(payload, dtype="<f8")
    chunks = flat.reshape(n_fields, ny, nx).astype(np.float64)
    rho = ScalarField(grid, chunks[0].copy())
    v = VectorField(grid, chunks[1 : 1 + dim].copy())
    c = ScalarField(grid, chunks[1 + dim].copy())
    return State(t, rho, v, c)
