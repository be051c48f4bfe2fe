import json
from pathlib import Path

import numpy as np
import pytest

from holostab._formaters.report_formatter import ReportFormatter
from holostab._records.results import BenchRecord, RunManifest
from holostab._records.trajectory import TrajectoryRow
from holostab._settings import Settings
from holostab._utils.files import atomic_write_text
from holostab._utils.types import Phase


def _row(step, accepted=True):
    return TrajectoryRow(step, 0, "free", 0.1, 1.0, 0.25, 0.5, 0.3, 1.0, 0.01, accepted, 7)


def test_trajectory_row_dict_uses_phase_value():
    row = _row(3)
    assert row.phase is Phase.FREE
    assert row.to_dict()["phase"] == "free"
    assert row == _row(3, accepted=False)


def test_bench_records_compare_by_instance():
    record = BenchRecord(16, 0.35, 0, 0, 40, 20, 1.0, 0.2, 1, "none", "ok")
    assert record == BenchRecord(16, 0.35, 0, 0, 41, 22, 2.0, None, 0, "none", "error")
    assert record != BenchRecord(16, 0.35, 0, 1, 40, 20, 1.0, 0.2, 1, "none", "ok")


def test_format_value():
    assert ReportFormatter.format_value(None) == ""
    assert ReportFormatter.format_value(np.bool_(True)) == "true"
    assert ReportFormatter.format_value(0.1) == "0.10000000000000001"
    assert ReportFormatter.format_value(Phase.ALPHA) == "alpha"
    assert ReportFormatter.format_value(np.int64(4)) == "4"


def test_trajectory_csv():
    text = ReportFormatter.format_trajectory([_row(0), _row(1, accepted=False)])
    lines = text.splitlines()
    assert lines[0].split(",") == list(TrajectoryRow.__slots__)
    assert len(lines) == 3
    assert lines[2].split(",")[TrajectoryRow.__slots__.index("accepted")] == "false"


def test_bench_csv_leaves_missing_values_empty():
    record = BenchRecord(16, 0.35, 0, 0, 40, 20, 1.0, None, 0, "none", "error")
    cells = ReportFormatter.format_bench([record]).splitlines()[1].split(",")
    assert cells[BenchRecord.__slots__.index("eps_star")] == ""


def test_json_handles_numpy_and_paths():
    manifest = RunManifest(
        "inspect", {"complex": Path("a.json")}, {"rho": np.float64(1.0)}, None, "1.0.0", 0.5,
        "2024-01-01T00:00:00+00:00",
    )
    payload = {"manifest": manifest, "values": np.arange(3), "flag": np.bool_(False)}
    decoded = json.loads(ReportFormatter.format_json(payload))
    assert decoded["manifest"]["inputs"] == {"complex": "a.json"}
    assert decoded["values"] == [0, 1, 2]
    assert decoded["flag"] is False


def test_json_rejects_unknown_objects():
    with pytest.raises(TypeError):
        ReportFormatter.format_json({"value": object()})


def test_atomic_write_creates_parents(tmp_path):
    path = atomic_write_text(tmp_path / "nested" / "out.txt", "hello")
    assert path.read_text() == "hello"
    assert [p.name for p in path.parent.iterdir()] == ["out.txt"]


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("HOLOSTAB_THREADS", "3")
    monkeypatch.setenv("HOLOSTAB_LOG_LEVEL", "info")
    monkeypatch.setenv("HOLOSTAB_DATA_DIR", str(tmp_path))
    settings = Settings()
    assert settings.threads == 3
    assert settings.log_level == "INFO"
    assert settings.data_dir == tmp_path


def test_settings_arguments_win(monkeypatch):
    monkeypatch.setenv("HOLOSTAB_THREADS", "3")
    assert Settings(threads=2).threads == 2


@pytest.mark.parametrize("env", [{"HOLOSTAB_THREADS": "0"}, {"HOLOSTAB_THREADS": "many"}])
def test_settings_reject_bad_threads(monkeypatch, env):
    for key, value in env.items():
        monkeypatch.setenv(key, value)
    with pytest.raises(RuntimeError):
        Settings()


def test_settings_reject_unknown_level():
    with pytest.raises(RuntimeError):
        Settings(log_level="chatty")


def test_json_floats_use_seventeen_digits():
    text = ReportFormatter.format_json({"x": 0.1, "nested": [np.float64(1 / 3), {"y": 2.0}]})
    assert '"x": 0.10000000000000001' in text
    assert "0.33333333333333331" in text
    decoded = json.loads(text)
    assert decoded["x"] == 0.1
    assert decoded["nested"][0] == 1 / 3
    assert decoded["nested"][1]["y"] == 2.0 and isinstance(decoded["nested"][1]["y"], float)


def test_json_record_floats_and_non_finite_values():
    record = BenchRecord(16, 0.35, 0, 0, 40, 20, 0.1, float("nan"), 1, "none", "ok")
    text = ReportFormatter.format_json([record, float("inf")])
    assert "0.10000000000000001" in text
    decoded = json.loads(text)
    assert np.isnan(decoded[0]["eps_star"])
    assert decoded[1] == float("inf")
    assert decoded[0]["nu"] == 0.35
