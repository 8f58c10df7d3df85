"""Binary checkpoints and CSV time series.

Checkpoint layout (little-endian)::

    b"EGL1"  u32 version  u32 n  f64 t
    u64 step_count  f64 last_dt  f64 int_grad_u  f64 grad_u_norm  f64 u0_linf
    f64[n/2 * n/2] spectrum, row-major with j (x1 mode) slowest
    u32 tracer_count, then per tracer: f64 t, f64[2] alpha, f64[2] x, f64[4] jacobian
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import SimState
from .lagrangian import Tracer
from .spectral import make_grid

MAGIC = b"EGL1"
VERSION = 1
_HEAD = struct.Struct("<4sIId")
_STATS = struct.Struct("<Qdddd")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    state: SimState
    tracers: list = field(default_factory=list)
    version: int = VERSION


def atomic_write(path: str | Path, data: bytes | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_checkpoint(ck: Checkpoint) -> bytes:
    s = ck.state
    buf = io.BytesIO()
    buf.write(_HEAD.pack(MAGIC, ck.version, s.grid.n, s.t))
    buf.write(_STATS.pack(s.step_count, s.last_dt, s.int_grad_u, s.grad_u_norm, s.u0_linf))
    buf.write(np.ascontiguousarray(s.spectrum, dtype="<f8").tobytes())
    buf.write(struct.pack("<I", len(ck.tracers)))
    for tr in ck.tracers:
        vals = np.concatenate([[tr.t], tr.alpha, tr.x, tr.jacobian.ravel()])
        buf.write(vals.astype("<f8").tobytes())
    return buf.getvalue()


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEAD.size + _STATS.size or data[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    magic, version, n, t = _HEAD.unpack_from(data, 0)
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version} is not supported (expected {VERSION})")
    off = _HEAD.size
    steps, last_dt, igu, gun, u0 = _STATS.unpack_from(data, off)
    off += _STATS.size
    grid = make_grid(n)
    N = grid.half
    size = N * N * 8
    spectrum = np.frombuffer(data, dtype="<f8", count=N * N, offset=off).reshape(N, N).astype(float)
    off += size
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    tracers = []
    for _ in range(count):
        v = np.frombuffer(data, dtype="<f8", count=9, offset=off).astype(float)
        off += 72
        tr = Tracer(alpha=v[1:3].copy(), t=float(v[0]), x=v[3:5].copy(),
                    jacobian=v[5:9].reshape(2, 2).copy())
        tracers.append(tr)
    if off != len(data):
        raise CheckpointError("trailing bytes in checkpoint")
    state = SimState(grid, t, spectrum, step_count=steps, last_dt=last_dt, int_grad_u=igu,
                     grad_u_norm=gun, u0_linf=u0)
    return Checkpoint(state, tracers, version)


def save_checkpoint(path, ck: Checkpoint) -> None:
    atomic_write(path, encode_checkpoint(ck))


def load_checkpoint(path) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())


# --- CSV ---------------------------------------------------------------------

DIAGNOSTIC_COLUMNS = ["t", "linf_omega", "l2_u", "enstrophy", "linf_grad_omega", "X1", "X2",
                      "I", "B1", "B2", "growth_quotient_log", "int_grad_u", "trusted"]
TRAJECTORY_COLUMNS = ["t", "X1", "X2", "detJ"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


class CsvAppender:
    """Row-at-a-time CSV writer that flushes every row (partial output survives aborts)."""

    def __init__(self, path, columns, append: bool = False):
        self.path = Path(path)
        self.columns = columns
        exists = self.path.exists() and append
        self.fh = open(self.path, "a" if exists else "w", encoding="utf-8", newline="")
        self.writer = csv.writer(self.fh, lineterminator="\n")
        if not exists:
            self.writer.writerow(columns)
            self.fh.flush()

    def write(self, values) -> None:
        self.writer.writerow([fmt(v) for v in values])
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Header and rows; empty fields become None, others float."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty csv") from None
        rows = []
        for lineno, raw in enumerate(reader, 2):
            if len(raw) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            try:
                rows.append({k: (float(v) if v != "" else None) for k, v in zip(header, raw)})
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
    return header, rows


def truncate_after(path, t_max: float) -> None:
    """Drop rows with t > t_max (used when resuming)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    keep = lines[:1] + [ln for ln in lines[1:] if float(ln.split(",", 1)[0]) <= t_max]
    atomic_write(path, "".join(keep))
