import math

import numpy as np
import pytest

from src.models import DomainError, Raster, RasterFormatError, RasterIOError, RoiMask
from src.models.trace import ConvergenceTrace, TraceRecord
from src.services.raster_io import (
    TRACE_HEADER,
    format_real,
    load_raster,
    load_roi,
    quantize,
    read_trace_csv,
    save_raster,
    save_roi,
    write_metrics_csv,
    write_trace_csv,
)


def test_read_pgm_scales_to_unit_range(tmp_path):
    path = tmp_path / "tiny.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
    raster = load_raster(path)
    assert raster.shape == (2, 2)
    np.testing.assert_array_equal(raster.values, [[0.0, 1.0], [128 / 255, 64 / 255]])


def test_fras_round_trip_is_exact(tmp_path, rng):
    values = rng.standard_normal((5, 7)) * 1e3
    values[0, 0] = 1e-300
    path = save_raster(tmp_path / "x.fras", Raster(values))
    loaded = load_raster(path)
    assert loaded.shape == (5, 7)
    assert loaded.values.tobytes() == values.astype("<f8").tobytes()


def test_fras_layout(tmp_path):
    path = save_raster(tmp_path / "x.fras", Raster(np.array([[1.5, 2.0, -3.0]])))
    data = path.read_bytes()
    assert data[:4] == b"FRAS"
    assert int.from_bytes(data[4:8], "little") == 3
    assert int.from_bytes(data[8:12], "little") == 1
    assert len(data) == 12 + 3 * 8


def test_truncated_fras_payload(tmp_path):
    path = save_raster(tmp_path / "x.fras", Raster(np.ones((3, 3))))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(RasterFormatError):
        load_raster(path)


def test_unknown_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"GIF89a....")
    with pytest.raises(RasterFormatError):
        load_raster(path)


def test_missing_file(tmp_path):
    with pytest.raises(RasterIOError):
        load_raster(tmp_path / "absent.pgm")


def test_pgm_write_clamps_and_rounds(tmp_path):
    values = np.array([[-0.3, 0.5], [1.0, 7.0]])
    path = save_raster(tmp_path / "out.pgm", Raster(values))
    assert path.read_bytes().startswith(b"P5")
    np.testing.assert_allclose(load_raster(path).values * 255, [[0, 128], [255, 255]], atol=1e-9)


def test_pgm_write_respects_peak(tmp_path):
    path = save_raster(tmp_path / "out.pgm", Raster(np.full((2, 2), 1.0)), peak=2.0)
    np.testing.assert_allclose(load_raster(path).values * 255, np.full((2, 2), 128), atol=1e-9)


def test_quantize_half_up():
    np.testing.assert_array_equal(quantize(np.array([0.0, 0.5, 1.0, 2.0])), [0, 128, 255, 255])


def test_non_finite_rasters_are_not_saved(tmp_path):
    with pytest.raises(DomainError):
        save_raster(tmp_path / "bad.fras", np.array([[1.0, math.nan]]))


def test_roi_round_trip(tmp_path):
    mask = np.zeros((4, 4), dtype=bool)
    mask[1:3, 2] = True
    path = save_roi(tmp_path / "lesion.pgm", RoiMask(mask, "lesion"))
    roi = load_roi(path)
    assert roi.label == "lesion"
    np.testing.assert_array_equal(roi.mask, mask)


def test_format_real():
    assert format_real(None) == ""
    assert format_real(math.inf) == "inf"
    assert format_real(-math.inf) == "-inf"
    assert float(format_real(0.1)) == 0.1
    assert format_real(2.0) == "2"


def test_trace_csv(tmp_path):
    trace = ConvergenceTrace(TraceRecord(0, 10.0, 1.0, 11.0, None, 12.5))
    trace.append(TraceRecord(1, 8.0, 0.5, 8.25, 0.1, math.inf))
    path = write_trace_csv(tmp_path / "trace.csv", trace)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_HEADER)
    assert lines[1] == "0,10,1,11,,12.5"
    assert lines[2].endswith(",inf")

    loaded = read_trace_csv(path)
    assert len(loaded) == 1
    assert loaded.initial.residual_sq is None
    assert loaded.records[0] == trace.records[0]


def test_trace_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "trace.csv"
    path.write_text("iteration,value\n0,1\n")
    with pytest.raises(RasterFormatError):
        read_trace_csv(path)


def test_metrics_csv(tmp_path):
    path = write_metrics_csv(tmp_path / "metrics.csv", [("psnr", math.inf, "dB"), ("mae", 0.25, "scale=1")])
    assert path.read_text() == "metric,value,convention\npsnr,inf,dB\nmae,0.25,scale=1\n"
