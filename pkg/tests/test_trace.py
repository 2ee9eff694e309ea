import io

import pytest

from wtpm.trace import ConvergenceTrace, TraceRow, read_trace_csv, trace_header


def row(k, err=None, wall=None, obj=None):
    return TraceRow(k, k / 3, wall, [0.1, 1 / 3], err, 4, 6, obj)


def test_header_order():
    assert trace_header(2) == ["update_count", "relative_iteration", "wall_ms", "ritz_1", "ritz_2",
                               "err", "nnz_x", "nnz_y", "objective"]


def test_roundtrip_exact(tmp_path):
    tr = ConvergenceTrace(2)
    tr.record(row(0))
    tr.record(row(5, err=1e-3, wall=2.5, obj=-1.25))
    tr.write_csv(tmp_path / "t.csv")
    rows = read_trace_csv(tmp_path / "t.csv")
    assert rows[0]["err"] == "" and rows[0]["wall_ms"] == ""
    assert float(rows[1]["ritz_2"]) == 1 / 3
    assert float(rows[1]["relative_iteration"]) == 5 / 3
    assert rows[1]["objective"] == "-1.25"


def test_streaming_matches_write(tmp_path):
    buf = io.StringIO()
    tr = ConvergenceTrace(2, sink=buf)
    for k in (1, 2, 7):
        tr.record(row(k))
    tr.write_csv(tmp_path / "t.csv")
    assert buf.getvalue() == (tmp_path / "t.csv").read_text()


def test_strictly_increasing():
    tr = ConvergenceTrace(2)
    tr.record(row(3))
    with pytest.raises(ValueError):
        tr.record(row(3))


def test_strict_reader_rejects_ragged(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ValueError):
        read_trace_csv(p)
