import json
from pathlib import Path

import pytest

from evaluation.accuracy import AccuracyReport, write_report
from main import Application, build_parser, main, split_dotted
from shapes.cloud import read_ply, read_ply_header
from utils.config_loader import RunConfig
from utils.errors import ConfigError

RUN_CONFIG = str(Path(__file__).resolve().parents[1] / "config" / "run_config.yaml")


def _config(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


def test_unknown_config_key_exits_with_usage_error(tmp_path, capsys):
    path = _config(tmp_path, "training:\n  samples_per_actoin: 5\n")
    assert main(["train", "--config", path]) == 2
    err = capsys.readouterr().err
    assert "training.samples_per_actoin" in err
    assert "line 2" in err


def test_unknown_dotted_flag(tmp_path):
    assert main(["train", "--config", RUN_CONFIG, "--training.bogus", "3", "--out", str(tmp_path)]) == 2


def test_unknown_plain_flag(tmp_path):
    assert main(["train", "--config", RUN_CONFIG, "--bogus", "--out", str(tmp_path)]) == 2


def test_missing_required_argument(capsys):
    assert main(["predict", "--config", RUN_CONFIG]) == 2
    assert "--cloud" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_dotted_flags_become_overrides():
    assert split_dotted(["--a.b", "3", "--c.d=4"]) == ["a.b=3", "c.d=4"]
    with pytest.raises(ConfigError):
        split_dotted(["--a.b"])
    with pytest.raises(ConfigError):
        split_dotted(["--verbose"])


def test_command_line_reaches_the_config(tmp_path):
    argv = ["train", "--config", RUN_CONFIG, "--seed", "3", "--jobs", "2", "--out", str(tmp_path),
            "--set", "query.pose_kernels=9", "--motion.manipulator_kernels", "11"]
    args, extra = build_parser().parse_known_args(argv)
    app = Application(args, split_dotted(extra))
    assert app.out_dir == tmp_path
    assert app._config.seed == 3
    assert app._config.jobs == 2
    assert app._config.query.pose_kernels == 9
    assert app._config.motion.manipulator_kernels == 11
    assert app._library_path() == tmp_path / "library.json"


def _gen(out):
    return main(["gen-object", "--config", RUN_CONFIG, "--object", "cube", "--yaw-deg", "20", "--x", "0.05", "--out", str(out)])


def test_generated_objects_are_reproducible(tmp_path):
    assert _gen(tmp_path / "a") == 0
    assert _gen(tmp_path / "b") == 0
    for name in ("cube_mesh.json", "cube_full.ply", "cube_partial.ply"):
        first, second = tmp_path / "a" / name, tmp_path / "b" / name
        assert first.exists()
        assert first.read_bytes() == second.read_bytes()
    mesh = json.loads((tmp_path / "a" / "cube_mesh.json").read_text())
    assert mesh["spec"]["kind"] == "cube"
    assert len(mesh["triangles"]) == 12


def test_generated_objects_carry_the_config_hash(tmp_path):
    assert _gen(tmp_path) == 0
    expected = RunConfig.load_from_yaml(RUN_CONFIG).config_hash()
    mesh = json.loads((tmp_path / "cube_mesh.json").read_text())
    assert mesh["config_hash"] == expected
    for name in ("cube_full.ply", "cube_partial.ply"):
        assert read_ply_header(tmp_path / name)["config_hash"] == expected
    partial = read_ply(tmp_path / "cube_partial.ply")
    assert partial.viewpoint is not None
    assert partial.normals is not None


def test_unknown_object_name(tmp_path):
    assert main(["gen-object", "--config", RUN_CONFIG, "--object", "teapot", "--out", str(tmp_path)]) == 2


def test_library_from_another_config_is_refused(tmp_path):
    assert _gen(tmp_path) == 0
    library = tmp_path / "library.json"
    library.write_text(json.dumps({"format_version": 1, "config_hash": "0" * 64, "seed": 0, "entries": {}}))
    argv = ["predict", "--config", RUN_CONFIG, "--library", str(library), "--cloud", str(tmp_path / "cube_partial.ply"),
            "--out", str(tmp_path)]
    assert main(argv) == 2
    assert not (tmp_path / "prediction.json").exists()


def test_report_resummarises_a_table(tmp_path):
    rows = [
        {"condition": "position", "model": "cube", "object": "cube", "push_id": i, "h_acc": 0.1 * (i + 1),
         "linear_error_m": 0.01, "angular_error_deg": 1.0, "success": True}
        for i in range(3)
    ]
    csv_path, _ = write_report(AccuracyReport.from_rows("pose", rows), tmp_path / "in")
    assert main(["report", "--config", RUN_CONFIG, "--input", str(csv_path), "--out", str(tmp_path / "again")]) == 0
    summary = json.loads((tmp_path / "again" / "pose_summary.json").read_text())
    assert summary["overall"]["pushes"] == 3
    assert summary["overall"]["h_acc_mean"] == pytest.approx(0.2)


def test_report_without_input_file(tmp_path):
    assert main(["report", "--config", RUN_CONFIG, "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 1
