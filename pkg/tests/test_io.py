import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfrlab.io import (
    HEADER,
    MAGIC,
    format_value,
    read_rows_csv,
    read_tfr,
    read_track_csv,
    write_f0_csv,
    write_rows_csv,
    write_tfr,
    write_track_csv,
)
from tfrlab.optimize import F0SearchResult
from tfrlab.signals import ComponentTrack, MultiTone, Tone, synthesize
from tfrlab.synchrosqueeze import inst_freq_map, synchrosqueeze
from tfrlab.transform import FrequencyGrid, compute_tfr
from tfrlab.windows import WindowSpec

FS = 50.0


@pytest.fixture(scope="module")
def tfrs():
    sig, _ = synthesize(MultiTone((Tone(1.0, 2 * np.pi * 2),)), FS, 4)
    w = WindowSpec("gaussian", 1.0)
    t = compute_tfr(sig, w, FrequencyGrid.linear(5.0, 20.0, 0.25), derivative=True)
    wt = compute_tfr(sig, WindowSpec("morlet", 1.0), FrequencyGrid.log(4.0, 40.0, 8))
    return {"WFT": t, "SWFT": synchrosqueeze(t, inst_freq_map(t)), "WT": wt}


@pytest.mark.parametrize("kind", ["WFT", "SWFT", "WT"])
def test_tfr_round_trip(tmp_path, tfrs, kind):
    tfr = tfrs[kind]
    path, side = write_tfr(tmp_path / "x.tfr", tfr, {"seed": 3, "arr": np.arange(2)})
    assert side.exists() and side.suffix == ".json"
    back = read_tfr(path)
    assert back.kind == tfr.kind and back.shape == tfr.shape
    assert back.window == tfr.window
    assert back.grid.scale == tfr.grid.scale and back.grid.step == tfr.grid.step
    np.testing.assert_allclose(back.grid.freqs, tfr.grid.freqs, rtol=1e-14)
    np.testing.assert_allclose(back.times, tfr.times, atol=1e-12)
    scale = np.abs(tfr.values).max()
    np.testing.assert_allclose(back.values, tfr.values, atol=1e-6 * scale)
    assert back.meta["provenance"] == {"seed": 3, "arr": [0, 1]}


def test_header_layout(tmp_path, tfrs):
    path, _ = write_tfr(tmp_path / "x.tfr", tfrs["WFT"])
    raw = path.read_bytes()
    n_freq, n_time = tfrs["WFT"].shape
    assert raw[:4] == MAGIC
    assert len(raw) == HEADER.size + 8 * n_freq * n_time
    fields = HEADER.unpack_from(raw)
    assert fields[1:4] == (0, n_freq, n_time) and fields[4] == FS


def test_bad_magic(tmp_path, tfrs):
    path, _ = write_tfr(tmp_path / "x.tfr", tfrs["WFT"])
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="magic"):
        read_tfr(path)


def test_truncated_and_missing_sidecar(tmp_path, tfrs):
    path, side = write_tfr(tmp_path / "x.tfr", tfrs["WFT"])
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError, match="payload"):
        read_tfr(path)
    path.write_bytes(raw[:10])
    with pytest.raises(ValueError, match="short"):
        read_tfr(path)
    path.write_bytes(raw)
    side.unlink()
    with pytest.raises(ValueError, match="sidecar"):
        read_tfr(path)


def test_track_csv_round_trip(tmp_path):
    t = np.arange(6) / FS
    tr = ComponentTrack(t, np.linspace(1, 2, 6), np.linspace(0, 30, 6) + 1 / 3, np.full(6, 2 * np.pi),
                        "ridge", gap=np.array([0, 0, 1, 0, 0, 0], bool))
    back = read_track_csv(write_track_csv(tmp_path / "tr.csv", tr))
    np.testing.assert_array_equal(back.A, tr.A)
    np.testing.assert_array_equal(back.phi, tr.phi)
    np.testing.assert_array_equal(back.nu, tr.nu)
    np.testing.assert_array_equal(back.gap, tr.gap)
    assert back.method == "ridge"


def test_track_csv_missing_columns(tmp_path):
    p = write_rows_csv(tmp_path / "bad.csv", [{"t": 0.0, "A": 1.0}])
    with pytest.raises(ValueError):
        read_track_csv(p)


def test_rows_csv_is_deterministic(tmp_path):
    rows = [{"a": 0.1, "b": np.float64(1 / 3), "c": True}, {"a": float("nan"), "c": np.int64(4), "d": "x"}]
    p1 = write_rows_csv(tmp_path / "1.csv", rows)
    p2 = write_rows_csv(tmp_path / "2.csv", rows)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().splitlines()[0] == "a,b,c,d"
    back = read_rows_csv(p1)
    assert back[0]["c"] == "1" and back[1]["a"] == "nan" and back[0]["d"] == ""


@settings(max_examples=50, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_value_round_trips_floats(x):
    assert float(format_value(x)) == x


def test_f0_csv(tmp_path):
    res = F0SearchResult(1.0, np.array([0.5, 1.0]), np.array([2.0, 1.5]), (0.5, 1.0), 1.0, 2.0)
    rows = read_rows_csv(write_f0_csv(tmp_path / "f0.csv", res))
    assert [r["f0"] for r in rows] == ["0.5", "1.0"]
    assert rows[0]["window"] == "gaussian" and rows[1]["F"] == "1.5"


def test_header_struct_is_little_endian():
    assert HEADER.format.startswith("<")
    assert HEADER.size == struct.calcsize("<4sBQQddBddd")
