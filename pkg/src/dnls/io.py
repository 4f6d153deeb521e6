"""Config parsing and on-disk formats: CSV series, binary checkpoints, JSON reports."""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .grid import (
    Constant,
    Gaussian,
    GridSpec,
    HermiteGround,
    PlaneWave,
    Topology,
    WaveField,
    Zero,
    make_grid,
)
from .observables import SERIES_COLUMNS, ObservableSeries
from .params import PhysicsParams
from .propagator import StepConfig
from .regimes import Verdict, classify

EXPERIMENTS = ("run", "classify", "decay", "torus", "scatter", "energy", "blowup", "check", "sweep")
REQUIRED = ("experiment", "dim", "sigma1", "sigma2", "lambda", "a")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# -- config --------------------------------------------------------------------

_KEYS = {
    "experiment": "str",
    "dim": "int",
    "sigma1": "float",
    "sigma2": "float",
    "lambda": "float",
    "a": "float",
    "omega": "floats",
    "topology": "str",
    "half_extent": "floats",
    "points": "ints",
    "dt": "float",
    "t_end": "float",
    "record_every": "int",
    "watchdog_factor": "float",
    "initial": "str",
    "amplitude": "float",
    "width": "float",
    "center": "floats",
    "momentum": "floats",
    "wavenumber": "floats",
    "kappa": "float",
    "t_ladder": "floats",
    "output_dir": "str",
    "seed": "int",
    "sweep_experiment": "str",
}

_T_END_DEFAULTS = {"run": 1.0, "decay": 50.0, "torus": 50.0, "energy": 20.0, "blowup": 1.0}


@dataclass
class ExperimentConfig:
    experiment: str
    physics: PhysicsParams
    grid: GridSpec
    stepping: StepConfig
    initial: Any
    output_dir: str = "out"
    seed: int = 0
    kappa: Optional[float] = None
    t_ladder: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    sweep_experiment: Optional[str] = None
    sweep_axes: dict[str, list[str]] = field(default_factory=dict)
    raw: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        ini = self.initial
        return {
            "experiment": self.experiment,
            "physics": self.physics.to_dict(),
            "grid": self.grid.to_dict(),
            "stepping": {
                "dt": self.stepping.dt,
                "t_end": self.stepping.t_end,
                "record_every": self.stepping.record_every,
                "watchdog_factor": self.stepping.watchdog_factor,
            },
            "initial": {"kind": type(ini).__name__, **{k: _jsonable(v) for k, v in ini.__dict__.items()}},
            "output_dir": self.output_dir,
            "seed": self.seed,
            "kappa": self.kappa,
            "t_ladder": list(self.t_ladder),
            "sweep_experiment": self.sweep_experiment,
            "sweep_axes": self.sweep_axes,
        }

    def key(self) -> str:
        """Stable hash of the resolved config (output_dir excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag] if v.imag else v.real
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def _convert(key: str, text: str):
    kind = _KEYS[key]
    try:
        if kind == "str":
            return text.strip()
        if kind == "int":
            f = float(text)
            if f != int(f):
                raise ValueError
            return int(f)
        if kind == "float":
            v = float(text)
            if not math.isfinite(v):
                raise ValueError
            return v
        items = [x for x in text.replace(";", ",").split(",") if x.strip()]
        if not items:
            raise ValueError
        if kind == "ints":
            return [_convert_int(x) for x in items]
        vals = [float(x) for x in items]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError
        return vals
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text.strip()!r} as {kind}") from None


def _convert_int(x: str) -> int:
    f = float(x)
    if f != int(f):
        raise ValueError
    return int(f)


def parse_pairs(text: str) -> dict[str, str]:
    """Split a flat 'key = value' document; '#' starts a comment."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in pairs:
            raise ConfigError(f"{key}: duplicate key (line {lineno})")
        pairs[key] = value
    return pairs


def parse_config(text: str) -> ExperimentConfig:
    return config_from_pairs(parse_pairs(text))


def _per_axis(key, vals, dim):
    if len(vals) == 1:
        return vals * dim
    if len(vals) != dim:
        raise ConfigError(f"{key}: expected 1 or {dim} values, got {len(vals)}")
    return vals


def config_from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    sweep_axes = {}
    plain = {}
    for k, v in pairs.items():
        if k.startswith("sweep."):
            name = k[len("sweep."):]
            if name not in _KEYS or name in ("experiment", "sweep_experiment"):
                raise ConfigError(f"{k}: unknown sweep key {name!r}")
            sweep_axes[name] = [x.strip() for x in v.split(",") if x.strip()]
            if not sweep_axes[name]:
                raise ConfigError(f"{k}: empty sweep axis")
            continue
        if k not in _KEYS:
            raise ConfigError(f"{k}: unknown key")
        plain[k] = v
    for k in REQUIRED:
        if k not in plain:
            raise ConfigError(f"{k}: missing required key")
    val = {k: _convert(k, v) for k, v in plain.items()}

    exp = val["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: {exp!r} not one of {', '.join(EXPERIMENTS)}")
    dim = val["dim"]
    if dim not in (1, 2, 3):
        raise ConfigError(f"dim: must be 1, 2 or 3, got {dim}")
    for k in ("sigma1", "sigma2"):
        if val[k] <= 0:
            raise ConfigError(f"{k}: must be > 0, got {val[k]}")
        if dim >= 3 and val[k] >= 2.0 / (dim - 2):
            raise ConfigError(
                f"{k} = {val[k]:g} violates the energy-subcriticality bound sigma < 2/(d-2) = "
                f"{2.0 / (dim - 2):g} for dim = {dim}"
            )
    if val["a"] < 0:
        raise ConfigError(f"a: damping must be >= 0, got {val['a']}")
    omegas = _per_axis("omega", val.get("omega", [0.0]), dim)
    if any(w < 0 for w in omegas):
        raise ConfigError("omega: trap frequencies must be >= 0")
    physics = PhysicsParams(val["lambda"], val["a"], val["sigma1"], val["sigma2"], tuple(omegas))
    verdict = classify(physics, dim)
    if verdict.verdict is Verdict.INVALID:
        raise ConfigError(f"sigma1/sigma2: {verdict.reason}")

    try:
        topology = Topology.parse(val.get("topology", "line"))
    except ValueError as e:
        raise ConfigError(f"topology: {e}") from None
    default_L = math.pi if topology is Topology.TORUS else 10.0
    default_N = {1: 256, 2: 64, 3: 32}[dim]
    extents = _per_axis("half_extent", val.get("half_extent", [default_L]), dim)
    points = _per_axis("points", val.get("points", [default_N]), dim)
    if any(L <= 0 for L in extents):
        raise ConfigError("half_extent: must be > 0")
    if any(n < 8 or n % 2 for n in points):
        raise ConfigError(f"points: must be even and >= 8, got {points}")
    grid = make_grid(dim, extents, points, topology)

    initial = _initial_from(val, dim)
    ladder = tuple(sorted(val.get("t_ladder", [5.0, 10.0, 20.0, 40.0])))
    if any(T <= 0 for T in ladder):
        raise ConfigError("t_ladder: times must be > 0")

    run_kind = val.get("sweep_experiment", exp) if exp == "sweep" else exp
    t_end = val.get("t_end", max(ladder) if run_kind == "scatter" else _T_END_DEFAULTS.get(run_kind, 1.0))
    if t_end <= 0:
        raise ConfigError(f"t_end: must be > 0, got {t_end}")
    if "dt" in val:
        dt = val["dt"]
    else:
        from .grid import sample_initial
        from .propagator import suggest_dt

        dt = suggest_dt(sample_initial(grid, initial), physics)
    if not 0 < dt <= t_end:
        raise ConfigError(f"dt: must satisfy 0 < dt <= t_end = {t_end}, got {dt}")
    record_every = val.get("record_every", 10)
    if record_every < 1:
        raise ConfigError(f"record_every: must be >= 1, got {record_every}")
    wf_default = 10.0 if run_kind == "blowup" else 1e6
    watchdog = val.get("watchdog_factor", wf_default)
    if watchdog <= 1:
        raise ConfigError(f"watchdog_factor: must exceed 1, got {watchdog}")
    stepping = StepConfig(dt, t_end, record_every, watchdog, keep_snapshots=False)

    kappa = val.get("kappa")
    if kappa is not None and kappa <= 0:
        raise ConfigError(f"kappa: must be > 0, got {kappa}")
    if exp == "sweep":
        sw = val.get("sweep_experiment")
        if sw not in ("run", "decay", "torus", "scatter", "energy", "blowup"):
            raise ConfigError(f"sweep_experiment: must name a run/experiment kind, got {sw!r}")
        if not sweep_axes:
            raise ConfigError("sweep.<key>: a sweep needs at least one axis")
    elif sweep_axes:
        raise ConfigError(f"sweep.{next(iter(sweep_axes))}: sweep axes only allowed with experiment = sweep")

    return ExperimentConfig(
        experiment=exp,
        physics=physics,
        grid=grid,
        stepping=stepping,
        initial=initial,
        output_dir=val.get("output_dir", "out"),
        seed=val.get("seed", 0),
        kappa=kappa,
        t_ladder=ladder,
        sweep_experiment=val.get("sweep_experiment"),
        sweep_axes=sweep_axes,
        raw=dict(pairs),
    )


def _initial_from(val: dict, dim: int):
    kind = val.get("initial", "gaussian").lower()
    amp = val.get("amplitude", 1.0)
    if kind == "gaussian":
        width = val.get("width", 1.0)
        if width <= 0:
            raise ConfigError(f"width: must be > 0, got {width}")
        return Gaussian(
            amplitude=amp,
            width=width,
            center=tuple(_per_axis("center", val.get("center", [0.0]), dim)),
            momentum=tuple(_per_axis("momentum", val.get("momentum", [0.0]), dim)),
        )
    if kind == "plane":
        return PlaneWave(amp, tuple(_per_axis("wavenumber", val.get("wavenumber", [1.0]), dim)))
    if kind == "hermite":
        om = _per_axis("omega", val.get("omega", [1.0]), dim)
        if any(w <= 0 for w in om):
            raise ConfigError("initial: hermite profile needs omega > 0 on every axis")
        return HermiteGround(tuple(om), amp)
    if kind == "constant":
        return Constant(amp)
    if kind == "zero":
        return Zero()
    raise ConfigError(f"initial: unknown profile {kind!r}")


# -- atomic writes -------------------------------------------------------------


def atomic_write(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    atomic_write(path, text.encode())


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def report_envelope(config: Optional[ExperimentConfig], body: dict) -> dict:
    return {
        "version": __version__,
        "config": config.to_dict() if config is not None else None,
        "report": body,
    }


# -- CSV series ----------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def series_to_csv(series: ObservableSeries) -> str:
    lines = [",".join(SERIES_COLUMNS)]
    for row in zip(*series.columns()):
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def write_series(series: ObservableSeries, path) -> None:
    atomic_write(path, series_to_csv(series).encode())


def read_series(path) -> ObservableSeries:
    with open(path, "r", newline="") as fh:
        lines = fh.read().split("\n")
    if lines[0] != ",".join(SERIES_COLUMNS):
        raise ValueError(f"unexpected header {lines[0]!r}")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:] if ln]
    if not rows:
        return ObservableSeries.empty()
    return ObservableSeries(*np.array(rows, dtype=float).T)


# -- checkpoints ----------------------------------------------------------------

MAGIC = b"DNLS"
VERSION = 1
_TOPO_CODE = {Topology.TORUS: 0, Topology.LINE: 1}
_CODE_TOPO = {v: k for k, v in _TOPO_CODE.items()}


def checkpoint_bytes(f: WaveField) -> bytes:
    g = f.grid
    parts = [MAGIC, bytes([VERSION]), struct.pack("<I", g.dim)]
    for n, L in zip(g.points, g.half_extents):
        parts.append(struct.pack("<Qd", n, L))
    parts.append(struct.pack("<Bd", _TOPO_CODE[g.topology], f.time))
    parts.append(np.ascontiguousarray(f.values, dtype="<c16").tobytes())
    return b"".join(parts)


def checkpoint(f: WaveField, path) -> None:
    atomic_write(path, checkpoint_bytes(f))


class CheckpointError(ValueError):
    pass


def _take(buf: bytes, off: int, n: int, what: str) -> bytes:
    if off + n > len(buf):
        raise CheckpointError(f"truncated checkpoint: need {n} bytes for {what} at byte offset {off}, file has {len(buf)}")
    return buf[off : off + n]


def restore_bytes(buf: bytes) -> WaveField:
    off = 0
    magic = _take(buf, off, 4, "magic")
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r} at byte offset 0 (expected {MAGIC!r})")
    off += 4
    ver = _take(buf, off, 1, "version")[0]
    if ver != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {ver} at byte offset {off}")
    off += 1
    (dim,) = struct.unpack("<I", _take(buf, off, 4, "dim"))
    off += 4
    if dim not in (1, 2, 3):
        raise CheckpointError(f"invalid dim {dim} at byte offset {off - 4}")
    points, extents = [], []
    for j in range(dim):
        n, L = struct.unpack("<Qd", _take(buf, off, 16, f"axis {j}"))
        points.append(n)
        extents.append(L)
        off += 16
    code, t = struct.unpack("<Bd", _take(buf, off, 9, "topology/time"))
    if code not in _CODE_TOPO:
        raise CheckpointError(f"invalid topology code {code} at byte offset {off}")
    off += 9
    grid = make_grid(dim, extents, points, _CODE_TOPO[code])
    nbytes = 16 * grid.size
    payload = _take(buf, off, nbytes, "field values")
    off += nbytes
    if off != len(buf):
        raise CheckpointError(f"{len(buf) - off} trailing bytes after byte offset {off}")
    values = np.frombuffer(payload, dtype="<c16").reshape(grid.shape)
    return WaveField(grid, values, t)


def restore(path) -> WaveField:
    with open(path, "rb") as fh:
        return restore_bytes(fh.read())
