import csv
import json
import math

import numpy as np
import pytest

from qjwork import emit
from qjwork.engine import JumpEvent
from qjwork.master import ReducedDensityMatrix, integrate_master
from qjwork.model import DriveProtocol, ModelParams
from qjwork.stats import WorkHistogram
from qjwork.work import run_protocol_ensemble

PARAMS = ModelParams.from_detailed_balance(0.01, 1.0)
PROTOCOL = DriveProtocol(0.05, 10)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 1e-300, -2.5e17, np.float64(0.7)):
        assert float(emit.fmt(x)) == float(x)
    assert emit.fmt(np.int64(3)) == "3"
    assert emit.fmt(True) == "True"
    assert emit.fmt(None) == ""
    assert emit.fmt(math.nan) == "nan"


def test_ensemble_csv_columns_and_sidecar(tmp_path):
    ens = run_protocol_ensemble(200, PARAMS, PROTOCOL, master_seed=3)
    csv_path, side = emit.write_ensemble(tmp_path / "ens.csv", ens)
    rows = read_rows(csv_path)
    assert tuple(rows[0]) == emit.ENSEMBLE_COLUMNS
    assert len(rows) == 1 + len(ens)
    for r in rows[1:]:
        d = dict(zip(rows[0], r))
        assert int(d["Q_over_hw0"]) == int(d["n_emit"]) - int(d["n_absorb"])
        delta_u = (d["final"] == "e") - (d["initial"] == "e")
        assert int(d["W_over_hw0"]) == delta_u + int(d["Q_over_hw0"])
    meta = json.loads(side.read_text())
    assert meta == json.loads(json.dumps(ens.metadata, default=lambda o: o.item()))


def test_ensemble_csv_is_byte_deterministic(tmp_path):
    for name in ("a.csv", "b.csv"):
        emit.write_ensemble(tmp_path / name, run_protocol_ensemble(
            300, PARAMS, PROTOCOL, master_seed=9))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_trace_rows_flag_jumps():
    times = [0.0, 0.5, 1.0, 1.5]
    rows = list(emit.trace_rows(times, [0, 0, 1, 1],
                                [JumpEvent(0.75, "absorption"), JumpEvent(1.5, "emission")]))
    assert [r[2] for r in rows] == [0, 0, 1, 1]
    assert [r[3] for r in rows] == ["", "", "absorption", "emission"]


def test_master_csv(tmp_path):
    sol = integrate_master(PARAMS, PROTOCOL, ReducedDensityMatrix.thermal(1.0),
                           np.linspace(0, 5, 6))
    rows = read_rows(emit.write_master(tmp_path / "m.csv", sol))
    assert tuple(rows[0]) == emit.MASTER_COLUMNS
    assert float(rows[1][1]) == sol.sigma_ee[0]


def test_histogram_csv_and_svg(tmp_path):
    h = WorkHistogram.from_counts({-1: 20, 1: 70, 2: 10})
    rows = read_rows(emit.write_histogram(tmp_path / "h.csv", h))
    assert tuple(rows[0]) == emit.HISTOGRAM_COLUMNS
    assert [float(r[2]) for r in rows[1:]] == [0.2, 0.7, 0.1]
    svg = emit.plot_histogram(tmp_path / "h.svg", h).read_text()
    assert svg.count('id="bar-') == 3
    assert 'id="bar--1"' in svg


def test_svg_is_byte_deterministic(tmp_path):
    h = WorkHistogram.from_counts({-1: 2, 1: 7})
    a = emit.plot_histogram(tmp_path / "a.svg", h).read_bytes()
    b = emit.plot_histogram(tmp_path / "b.svg", h).read_bytes()
    assert a == b


def test_sweep_columns(tmp_path):
    rows = [{"lambda0": 0.1, "gamma_down": 0.01, "ratio": 1.4, "extra": 3}]
    out = read_rows(emit.write_sweep(tmp_path / "s.csv", rows, ("extra",)))
    assert tuple(out[0]) == emit.SWEEP_COLUMNS + ("extra",)
    assert out[1][emit.SWEEP_COLUMNS.index("P0")] == ""
    assert out[1][-1] == "3"


def test_unwritable_path_names_the_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(emit.EmitError, match="file"):
        emit.write_csv(blocker / "sub" / "x.csv", ("a",), [])
    with pytest.raises(emit.EmitError):
        emit.plot_histogram(blocker / "x.svg", WorkHistogram.from_counts({0: 1}))
