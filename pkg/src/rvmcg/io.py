"""Snapshot files, run configuration and report writers.

Snapshot layout (all little-endian)::

    b"RVM1"  u32 version=1  u32 dx_dims  u32 dxi_dims  u64 nx  u64 nxi[k]...
    f64 t  f64 lx  f64 xi_max
    f64 f[nx, nxi_1(, nxi_2)]            x-major
    u32 presence mask (1 = Ex, 2 = Ey, 4 = Bz)
    f64 Ex[nx]  f64 Ey[nx]  f64 Bz[nx]   absent arrays stored as zeros

Every file is written to a temporary name in the target directory and then
renamed into place, so readers never observe a partial file.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .grid import DistField, EMField, PhaseGrid, RVMState

MAGIC = b"RVM1"
VERSION = 1
_MASK_EX, _MASK_EY, _MASK_BZ = 1, 2, 4


class SnapshotError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# atomic writes

def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV with floats written by ``repr`` (shortest round-trip form)."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# snapshots

def encode_snapshot(state: RVMState) -> bytes:
    g = state.grid
    head = MAGIC + struct.pack("<III", VERSION, 1, g.dxi_dims)
    head += struct.pack("<Q", g.nx) + b"".join(struct.pack("<Q", n) for n in g.nxi)
    head += struct.pack("<ddd", float(state.t), float(g.lx), float(g.xi_max))
    em = state.em
    mask = _MASK_EX | (_MASK_EY if em.ey is not None else 0) | (_MASK_BZ if em.bz is not None else 0)
    body = np.ascontiguousarray(state.f.values, dtype="<f8").tobytes()
    tail = struct.pack("<I", mask) + b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (em.ex, em.ey_, em.bz_)
    )
    return head + body + tail


def decode_snapshot(data: bytes) -> RVMState:
    if len(data) < 16 or data[:4] != MAGIC:
        raise SnapshotError("not a snapshot file (bad magic)")
    version, dx_dims, dxi_dims = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if dx_dims != 1 or dxi_dims not in (1, 2):
        raise SnapshotError(f"unsupported dimensions {dx_dims}D{dxi_dims}V")
    off = 16
    need = off + 8 * (1 + dxi_dims) + 24
    if len(data) < need:
        raise SnapshotError("truncated header")
    nx = struct.unpack_from("<Q", data, off)[0]
    nxi = struct.unpack_from("<" + "Q" * dxi_dims, data, off + 8)
    off += 8 * (1 + dxi_dims)
    t, lx, xi_max = struct.unpack_from("<ddd", data, off)
    off += 24
    shape = (nx, *nxi)
    n_f = int(np.prod(shape))
    expected = off + 8 * n_f + 4 + 24 * nx
    if len(data) != expected:
        raise SnapshotError(f"size {len(data)} does not match header ({expected} bytes expected)")
    f = np.frombuffer(data, dtype="<f8", count=n_f, offset=off).reshape(shape).astype(float)
    off += 8 * n_f
    (mask,) = struct.unpack_from("<I", data, off)
    off += 4
    arrs = [np.frombuffer(data, dtype="<f8", count=nx, offset=off + 8 * nx * k).astype(float) for k in range(3)]
    em = EMField(arrs[0], arrs[1] if mask & _MASK_EY else None, arrs[2] if mask & _MASK_BZ else None)
    grid = PhaseGrid(int(nx), lx, tuple(int(n) for n in nxi), xi_max)
    return RVMState(t, DistField(grid, f), em)


def write_snapshot(path, state: RVMState) -> None:
    atomic_write_bytes(path, encode_snapshot(state))


def read_snapshot(path) -> RVMState:
    return decode_snapshot(Path(path).read_bytes())


def snapshot_name(index: int) -> str:
    return f"snap_{index:06d}.rvm"


def read_trajectory(directory):
    """All ``snap_*.rvm`` files of ``directory`` in index order."""
    from .solver import Trajectory

    files = sorted(Path(directory).glob("snap_*.rvm"))
    if not files:
        raise FileNotFoundError(f"no snapshot files in {directory}")
    return Trajectory([read_snapshot(p) for p in files])


# ---------------------------------------------------------------------------
# run configuration

def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _auto_float(s: str) -> Optional[float]:
    return None if s.strip().lower() == "auto" else float(s)


def _auto_floats(s: str) -> Optional[tuple[float, ...]]:
    return None if s.strip().lower() == "auto" else _floats(s)


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# key -> (attribute, parser)
_KEYS = {
    "grid.nx": ("nx", int),
    "grid.lx": ("lx", float),
    "grid.nxi": ("nxi", _ints),
    "grid.xi_max": ("xi_max", float),
    "solver.dt": ("dt", _auto_float),
    "solver.steps": ("steps", int),
    "solver.stride": ("stride", int),
    "solver.interp": ("interp", str),
    "solver.preset": ("preset", str),
    "solver.theta": ("theta", float),
    "analysis.alpha": ("alpha", float),
    "analysis.beta": ("beta", float),
    "analysis.eps_list": ("eps_list", _auto_floats),
    "analysis.delta_list": ("delta_list", _auto_floats),
    "analysis.p": ("p", float),
    "analysis.r": ("r", float),
    "analysis.ensemble": ("ensemble", int),
    "output.dir": ("out_dir", str),
    "seed": ("seed", int),
}


@dataclass(frozen=True)
class RunConfig:
    nx: int = 512
    lx: float = 1.0
    nxi: tuple[int, ...] = (512,)
    xi_max: float = 4.0
    dt: Optional[float] = None  # None: 0.1 dx
    steps: int = 100
    stride: int = 10
    interp: str = "spectral"
    preset: str = "landau_perturbation"
    theta: float = 1.0
    alpha: float = 0.5
    beta: float = 0.5
    eps_list: Optional[tuple[float, ...]] = None  # None: 6 scales from 2 dx to 32 dx
    delta_list: Optional[tuple[float, ...]] = None  # None: 6 scales from 2 dxi to 32 dxi
    p: float = 2.0
    r: float = 2.0
    ensemble: int = 16
    out_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.nx < 1 or not self.nxi or any(n < 1 for n in self.nxi) or len(self.nxi) > 2:
            raise ConfigError("grid.nx and grid.nxi must be positive; at most two momentum dims")
        if self.lx <= 0 or self.xi_max <= 0:
            raise ConfigError("grid.lx and grid.xi_max must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("solver.dt must be positive or auto")
        if self.steps < 0 or self.stride < 1:
            raise ConfigError("solver.steps must be >= 0 and solver.stride >= 1")
        if self.interp not in ("spectral", "cubic_spline"):
            raise ConfigError("solver.interp must be spectral or cubic_spline")
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ConfigError("analysis.alpha and analysis.beta must lie in (0, 1)")
        if self.p < 1 or self.r < 1:
            raise ConfigError("analysis.p and analysis.r must be >= 1")
        if self.ensemble < 1:
            raise ConfigError("analysis.ensemble must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def grid(self) -> PhaseGrid:
        return PhaseGrid(self.nx, self.lx, self.nxi, self.xi_max)

    @property
    def time_step(self) -> float:
        return 0.1 * self.lx / self.nx if self.dt is None else self.dt

    def scales(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        g = self.grid
        eps = self.eps_list or tuple(float(v) for v in np.geomspace(2 * g.dx, 32 * g.dx, 6))
        dxi = max(g.dxi)
        delta = self.delta_list or tuple(float(v) for v in np.geomspace(2 * dxi, 32 * dxi, 6))
        return eps, delta

    def items(self) -> list[tuple[str, str]]:
        return [(k, _fmt(getattr(self, attr))) for k, (attr, _) in _KEYS.items()]

    def dump(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.items())

    @classmethod
    def parse(cls, text: str, origin: str = "<config>") -> "RunConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment. Unknown or
        repeated keys and malformed values raise :class:`ConfigError`."""
        vals: dict[str, Any] = {}
        seen = set()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{origin}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _KEYS:
                raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
            if key in seen:
                raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
            seen.add(key)
            attr, conv = _KEYS[key]
            try:
                vals[attr] = conv(value)
            except ValueError as exc:
                raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {value!r}") from exc
        try:
            return cls(**vals)
        except TypeError as exc:  # pragma: no cover - guarded by _KEYS
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        if path is None:
            return cls()
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        return cls.parse(p.read_text(), str(p))

    def replace(self, **kw) -> "RunConfig":
        cur = {f.name: getattr(self, f.name) for f in fields(self)}
        cur.update(kw)
        return RunConfig(**cur)
