"""Dataset handling: profile generation, synthetic data, metrics, CSV I/O.

A dataset is a uniformly sampled (time, current, voltage) record.  Files are
UTF-8 CSV with `# key=value` header lines (dt and soc0 required, meta.*
optional), a `t,current_a,voltage_v` column header, and repr-formatted
floats so round trips are bit-exact.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .model import ComparisonModel, simulate

__all__ = [
    "Dataset",
    "Constant",
    "Pulse",
    "ScaledDriveCycle",
    "ProfileSpec",
    "Metrics",
    "generate_profile",
    "synthesize",
    "metrics",
    "read_dataset",
    "write_dataset",
    "export_series",
    "ParseError",
]

_COLUMNS = "t,current_a,voltage_v"


class ParseError(ValueError):
    """Malformed dataset file; message carries the offending line number."""


@dataclass
class Dataset:
    """Uniformly sampled current/voltage record.

    Sign convention: current > 0 charges, < 0 discharges.  t0_soc is the
    SoC at the first sample (the cell is assumed rested there).
    """

    dt: float
    t0_soc: float
    current: np.ndarray
    voltage: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.current = np.asarray(self.current, dtype=float)
        self.voltage = np.asarray(self.voltage, dtype=float)
        if self.current.shape != self.voltage.shape or self.current.ndim != 1:
            raise ValueError("current and voltage must be 1-d arrays of equal length")
        if len(self.current) < 2:
            raise ValueError("a dataset needs at least two samples")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.t0_soc <= 1.0:
            raise ValueError("t0_soc must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.current)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.current)) * self.dt


@dataclass(frozen=True)
class Constant:
    """Constant current for a fixed duration."""

    i: float
    duration: float


@dataclass(frozen=True)
class Pulse:
    """Repeated on/off current pulses: `cycles` repeats of i for on_s, 0 for off_s."""

    i: float
    on_s: float
    off_s: float
    cycles: int


@dataclass(frozen=True)
class ScaledDriveCycle:
    """Seeded piecewise-constant pseudo-random profile.

    Stands in for a scaled urban drive-cycle trace: each segment_s-long
    segment holds a level drawn uniformly from [i_min, i_max].
    """

    seed: int
    i_min: float
    i_max: float
    duration: float
    segment_s: float


ProfileSpec = Union[Constant, Pulse, ScaledDriveCycle]


def generate_profile(spec: ProfileSpec, dt: float) -> np.ndarray:
    """Render a profile spec into current samples; pure function of (spec, dt)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(spec, Constant):
        n = _n_samples(spec.duration, dt)
        return np.full(n, float(spec.i))
    if isinstance(spec, Pulse):
        if spec.cycles < 1:
            raise ValueError("pulse cycle count must be positive")
        n_on = _n_samples(spec.on_s, dt)
        n_off = _n_samples(spec.off_s, dt)
        one = np.concatenate([np.full(n_on, float(spec.i)), np.zeros(n_off)])
        return np.tile(one, spec.cycles)
    if isinstance(spec, ScaledDriveCycle):
        if spec.i_min > spec.i_max:
            raise ValueError("need i_min <= i_max")
        n = _n_samples(spec.duration, dt)
        per_seg = _n_samples(spec.segment_s, dt)
        rng = np.random.default_rng(spec.seed)
        n_seg = -(-n // per_seg)  # ceil
        levels = rng.uniform(spec.i_min, spec.i_max, n_seg)
        return np.repeat(levels, per_seg)[:n]
    raise TypeError(f"unknown profile spec: {type(spec).__name__}")


def _n_samples(duration: float, dt: float) -> int:
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = int(round(duration / dt))
    if n < 1:
        raise ValueError(f"duration {duration} shorter than one sample period {dt}")
    return n


def synthesize(model: ComparisonModel, profile, dt: float, soc0: float,
               noise_std: float = 0.0, seed: int = 0) -> Dataset:
    """Simulate a model over a profile and add i.i.d. Gaussian voltage noise.

    `profile` is either a ProfileSpec or a ready current array.  If the
    simulation truncates at a bound, the dataset is shortened accordingly
    and flagged in meta["truncated"].
    """
    if isinstance(profile, (Constant, Pulse, ScaledDriveCycle)):
        current = generate_profile(profile, dt)
    else:
        current = np.asarray(profile, dtype=float)
    res = simulate(model, current, dt, soc0)
    n = len(res)
    voltage = res.voltage.copy()
    if noise_std > 0:
        voltage += np.random.default_rng(seed).normal(0.0, noise_std, n)
    meta = {
        "source": f"synthesized:{type(model).__name__}",
        "seed": str(seed),
        "noise_std": repr(float(noise_std)),
        "truncated": "true" if res.truncated else "false",
    }
    return Dataset(dt=dt, t0_soc=soc0, current=current[:n], voltage=voltage, meta=meta)


@dataclass
class Metrics:
    rmse: float
    max_abs: float
    percent_error: np.ndarray  # 100 * (pred - meas) / meas, per sample


def metrics(pred, meas) -> Metrics:
    """Prediction-error summary; percent error is relative to the measured voltage."""
    pred = np.asarray(pred, dtype=float)
    meas = np.asarray(meas, dtype=float)
    if pred.shape != meas.shape:
        raise ValueError("series must have equal length")
    if np.any(meas == 0.0):
        raise ValueError("measured voltage contains zeros; percent error undefined")
    err = pred - meas
    return Metrics(
        rmse=float(np.sqrt(np.mean(err**2))),
        max_abs=float(np.max(np.abs(err))),
        percent_error=100.0 * err / meas,
    )


# --- CSV persistence -------------------------------------------------------


def write_dataset(path, ds: Dataset) -> None:
    """Write a dataset; whole-file atomic (temp file + rename)."""
    lines = [f"# dt={ds.dt!r}", f"# soc0={ds.t0_soc!r}"]
    for key in sorted(ds.meta):
        lines.append(f"# meta.{key}={ds.meta[key]}")
    lines.append(_COLUMNS)
    for k, (i, v) in enumerate(zip(ds.current, ds.voltage)):
        lines.append(f"{k * ds.dt!r},{i!r},{v!r}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    """Parse a dataset file written by write_dataset (or hand-made to match)."""
    with open(path, "r", encoding="utf-8-sig") as fh:  # utf-8-sig strips a BOM
        raw = fh.read().splitlines()

    headers: dict[str, str] = {}
    meta: dict[str, str] = {}
    row_start = None
    for ln, line in enumerate(raw, start=1):
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise ParseError(f"line {ln}: header comment without key=value: {line!r}")
            key, value = body.split("=", 1)
            key = key.strip()
            if key.startswith("meta."):
                meta[key[5:]] = value
            else:
                headers[key] = value.strip()
        elif line.strip() == "":
            continue
        else:
            if line.strip() != _COLUMNS:
                raise ParseError(f"line {ln}: expected column header {_COLUMNS!r}, got {line!r}")
            row_start = ln
            break
    if row_start is None:
        raise ParseError("no column header found")
    for key in ("dt", "soc0"):
        if key not in headers:
            raise ParseError(f"missing required header key {key!r}")
    try:
        dt = float(headers["dt"])
        soc0 = float(headers["soc0"])
    except ValueError as exc:
        raise ParseError(f"bad numeric header value: {exc}") from None

    ts, cur, vol = [], [], []
    for ln, line in enumerate(raw[row_start:], start=row_start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"line {ln}: expected 3 columns, got {len(parts)}")
        try:
            t, i, v = (float(p) for p in parts)
        except ValueError:
            raise ParseError(f"line {ln}: non-numeric field in {line!r}") from None
        if ts and t <= ts[-1]:
            raise ParseError(f"line {ln}: time must be strictly increasing")
        ts.append(t)
        cur.append(i)
        vol.append(v)
    if len(cur) < 2:
        raise ParseError("dataset needs at least two rows")
    return Dataset(dt=dt, t0_soc=soc0, current=np.array(cur), voltage=np.array(vol), meta=meta)


def export_series(path, t, series: dict) -> None:
    """Write a `t` column plus one named column per series, for external plotting."""
    t = np.asarray(t, dtype=float)
    cols = {name: np.asarray(vals, dtype=float) for name, vals in series.items()}
    for name, vals in cols.items():
        if vals.shape != t.shape:
            raise ValueError(f"series {name!r} length does not match t")
    lines = ["t," + ",".join(cols)]
    for k in range(len(t)):
        lines.append(",".join([repr(t[k])] + [repr(vals[k]) for vals in cols.values()]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
