"""File formats: binary TFR dumps with a JSON sidecar, and CSV tables.

TFR dump layout (little-endian)::

    magic      4s   b"TFR1"
    kind       u8   0 WFT, 1 WT, 2 SWFT, 3 SWT
    n_freq     u64
    n_time     u64
    fs         f64  sampling rate of the time axis (Hz)
    t0         f64  first time sample (s)
    scale      u8   0 linear, 1 log
    omega_min  f64  rad/s
    omega_max  f64  rad/s
    step       f64  rad/s (linear) or voices per octave (log)

followed by ``n_freq × n_time`` complex64 values in row-major order (one row
per frequency bin).  The sidecar ``<name>.json`` holds the window spec, the
TFR metadata and caller-supplied provenance.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .signals import ComponentTrack
from .support import SupportCurve
from .transform import TFR_KINDS, FrequencyGrid, TFRMatrix
from .windows import WindowSpec

__all__ = [
    "MAGIC",
    "HEADER",
    "write_tfr",
    "read_tfr",
    "write_rows_csv",
    "read_rows_csv",
    "write_support_csv",
    "write_track_csv",
    "read_track_csv",
    "write_f0_csv",
    "format_value",
]

MAGIC = b"TFR1"
HEADER = struct.Struct("<4sBQQddBddd")
_SCALES = ("linear", "log")


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"real": obj.real.tolist(), "imag": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    return obj


def write_tfr(path, tfr: TFRMatrix, provenance: dict | None = None):
    """Write ``tfr`` to ``path`` and its sidecar next to it.

    Values are stored as complex64, so a round trip keeps about 7 significant digits.

    Returns:
        (binary path, sidecar path)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_freq, n_time = tfr.shape
    g = tfr.grid
    t0 = float(tfr.times[0]) if n_time else 0.0
    header = HEADER.pack(
        MAGIC, TFR_KINDS.index(tfr.kind), n_freq, n_time, float(tfr.fs), t0,
        _SCALES.index(g.scale), g.omega_min, g.omega_max, g.step,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(tfr.values, dtype="<c8").tobytes())
    side = {
        "format": "TFR1",
        "kind": tfr.kind,
        "window": tfr.window.to_dict(),
        "grid": g.to_dict(),
        "meta": _jsonable({k: v for k, v in tfr.meta.items() if k != "dropped"}),
        "provenance": _jsonable(provenance or {}),
    }
    sp = _sidecar(path)
    with open(sp, "w") as fh:
        json.dump(side, fh, indent=2, sort_keys=True)
    return path, sp


def read_tfr(path) -> TFRMatrix:
    """Load a dump written by :func:`write_tfr`.

    Raises:
        ValueError: on a bad magic number, truncated payload or missing sidecar.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ValueError("file too short for a TFR1 header")
    magic, kind, n_freq, n_time, fs, t0, scale, om_lo, om_hi, step = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"not a TFR1 dump (magic {magic!r})")
    payload = np.frombuffer(raw, dtype="<c8", offset=HEADER.size)
    if payload.size != n_freq * n_time:
        raise ValueError("TFR payload size does not match the header")
    sp = _sidecar(path)
    if not sp.exists():
        raise ValueError(f"missing sidecar {sp}")
    with open(sp) as fh:
        side = json.load(fh)
    grid = FrequencyGrid(_SCALES[scale], om_lo, om_hi, step)
    window = WindowSpec(side["window"]["kind"], side["window"]["f0"])
    times = t0 + np.arange(n_time) / fs
    values = payload.reshape(n_freq, n_time).astype(complex)
    meta = dict(side.get("meta", {}), provenance=side.get("provenance", {}))
    return TFRMatrix(values, grid, times, window, TFR_KINDS[kind], fs, None, meta)


def format_value(v) -> str:
    """Deterministic text for a CSV cell (shortest round-trip repr for floats)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_rows_csv(path, rows, columns=None):
    """Write a list of dicts as CSV; column order follows ``columns`` or the first row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r.get(c, "")) for c in columns])
    return path


def read_rows_csv(path) -> list[dict]:
    """Read a CSV written by :func:`write_rows_csv` as a list of string dicts."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_support_csv(path, curve: SupportCurve):
    """Columns: t, omega_minus, omega_p, omega_plus, gap_flag (rad/s)."""
    rows = [
        {"t": t, "omega_minus": lo, "omega_p": p, "omega_plus": hi, "gap_flag": g}
        for t, lo, p, hi, g in zip(curve.t, curve.omega_minus, curve.omega_p, curve.omega_plus, curve.gap)
    ]
    return write_rows_csv(path, rows, ["t", "omega_minus", "omega_p", "omega_plus", "gap_flag"])


_TRACK_COLUMNS = ["t", "A", "phi_unwrapped", "nu", "method", "gap_flag"]


def write_track_csv(path, track: ComponentTrack):
    """Columns: t, A, phi_unwrapped, nu (rad/s), method, gap_flag."""
    rows = [
        {"t": t, "A": a, "phi_unwrapped": ph, "nu": nu, "method": track.method, "gap_flag": g}
        for t, a, ph, nu, g in zip(track.t, track.A, track.phi, track.nu, track.gap)
    ]
    return write_rows_csv(path, rows, _TRACK_COLUMNS)


def read_track_csv(path) -> ComponentTrack:
    rows = read_rows_csv(path)
    if rows and set(_TRACK_COLUMNS) - set(rows[0]):
        raise ValueError(f"track CSV needs columns {_TRACK_COLUMNS}")
    col = lambda k: np.array([float(r[k]) for r in rows])
    gap = np.array([r["gap_flag"] in ("1", "True") for r in rows], dtype=bool)
    method = rows[0]["method"] if rows else "truth"
    return ComponentTrack(col("t"), col("A"), col("phi_unwrapped"), col("nu"), method, "", gap)


def write_f0_csv(path, result):
    """(f0, F) pairs of an :class:`~tfrlab.optimize.F0SearchResult` plus its p, q."""
    rows = [{"f0": f, "F": F, "p": result.p, "q": result.q, "window": result.window_kind}
            for f, F in zip(result.f0_grid, result.F_values)]
    return write_rows_csv(path, rows, ["window", "p", "q", "f0", "F"])
