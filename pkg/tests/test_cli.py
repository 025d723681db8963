import json
from pathlib import Path

import pytest

from schottkyflow import cli
from schottkyflow.config import ConfigError, load_config

FAST = {
    "scheme": {"fixture": "fix-b"},
    "depth": 6,
    "seed": 3,
    "iterations": 60,
    "grids": {
        "pressure_s": {"min": 0.0, "max": 2.0, "points": 5},
        "gap_b": [0.0, 5.0],
        "gap_k": [0, 1],
        "stability_a": [0.0, 0.02],
        "stability_b": 5.0,
        "stability_k": 1,
        "geodesic_T": [8.0, 12.0],
        "correlation_t": {"min": 0.0, "max": 6.0, "step": 0.5},
    },
    "ncp": {"points": 20000, "centers": 3, "epsilons": [0.1], "directions": 4,
            "word_length": 30},
    "lnic": {"word_length": 2, "base_points": 3, "omegas": 8},
    "correlation": {"xi": 0.5, "k_terms": 12, "character": 1,
                    "coefficient": 0.5, "profile": "bump"},
}

OVERLAPPING = {
    "scheme": {
        "rank": 2,
        "generators": [
            {"pairing": {"source_center": [0.0, 0.0],
                         "target_center": [5.0, 0.0], "radius": 1.0}},
            {"pairing": {"source_center": [1.0, 0.0],
                         "target_center": [-5.0, 0.0], "radius": 1.0}},
        ],
    },
    "depth": 4,
}


def write_config(tmp_path: Path, payload: dict, name: str = "run.json") -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def run(command: str, cfg_path: Path, out: Path) -> int:
    return cli.main([command, "--config", str(cfg_path), "--out", str(out)])


class TestExitCodes:
    def test_validate_fixture_succeeds(self, tmp_path):
        cfg = write_config(tmp_path, {"scheme": {"fixture": "fix-a"}})
        out = tmp_path / "out"
        assert run("validate", cfg, out) == 0
        report = json.loads((out / "validation_report.json").read_text())
        assert report["ok"] is True

    def test_dimension_on_overlapping_disks_fails_validation(self, tmp_path):
        cfg = write_config(tmp_path, OVERLAPPING)
        out = tmp_path / "out"
        assert run("dimension", cfg, out) == 2
        report = json.loads((out / "validation_report.json").read_text())
        assert report["ok"] is False

    def test_unknown_config_key_rejected(self, tmp_path):
        bad = dict(FAST)
        bad["mystery_knob"] = 1
        cfg = write_config(tmp_path, bad)
        assert run("validate", cfg, tmp_path / "out") == 2

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run("validate", path, tmp_path / "out") == 2


class TestDeterminism:
    def test_gap_sweep_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, FAST)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run("gap-sweep", cfg, out1) == 0
        assert run("gap-sweep", cfg, out2) == 0
        csv1 = (out1 / "gap_sweep.csv").read_bytes()
        csv2 = (out2 / "gap_sweep.csv").read_bytes()
        assert csv1 == csv2
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m1 == m2

    def test_seed_changes_outputs(self, tmp_path):
        cfg1 = write_config(tmp_path, FAST, "s1.json")
        other = dict(FAST)
        other["seed"] = 4
        cfg2 = write_config(tmp_path, other, "s2.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run("gap-sweep", cfg1, out1) == 0
        assert run("gap-sweep", cfg2, out2) == 0
        assert ((out1 / "gap_sweep.csv").read_bytes()
                != (out2 / "gap_sweep.csv").read_bytes())


class TestManifest:
    def test_every_artifact_is_listed(self, tmp_path):
        cfg = write_config(tmp_path, FAST)
        out = tmp_path / "out"
        assert run("geodesics", cfg, out) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        on_disk = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert on_disk == set(manifest["outputs"]) - {"manifest.json"}
        assert manifest["config_hash"] == load_config(cfg).hash()
        assert manifest["seed"] == FAST["seed"]
        assert "schottkyflow" in manifest["versions"]

    def test_csv_and_figure_written_together(self, tmp_path):
        cfg = write_config(tmp_path, FAST)
        out = tmp_path / "out"
        assert run("gap-sweep", cfg, out) == 0
        assert (out / "gap_sweep.csv").exists()
        assert (out / "gap_sweep.png").exists()


class TestEnvOverrides:
    def test_env_seed_override(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, FAST)
        out = tmp_path / "out"
        monkeypatch.setenv("SCHOTTKYFLOW_SEED", "99")
        assert cli.main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 99

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        cfg = write_config(tmp_path, FAST)
        out = tmp_path / "out"
        monkeypatch.setenv("SCHOTTKYFLOW_SEED", "99")
        assert cli.main(["validate", "--config", str(cfg), "--out", str(out),
                         "--seed", "123"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 123


class TestConfigParsing:
    def test_defaults_round_trip(self, tmp_path):
        cfg = load_config(write_config(tmp_path, {"scheme": {"fixture": "fix-a"}}))
        assert cfg.depth == 8
        assert cfg.build_scheme().rank == 2

    def test_explicit_matrix_form(self, tmp_path):
        payload = {
            "scheme": {
                "rank": 2,
                "generators": [
                    {"matrix": {"a": [5.0, 0.0], "b": [14.4, 0.0],
                                "c": [1.6666666666666667, 0.0],
                                "d": [5.0, 0.0]},
                     "source_disk": {"center": [-3.0, 0.0], "radius": 0.6},
                     "target_disk": {"center": [3.0, 0.0], "radius": 0.6}},
                    {"pairing": {"source_center": [-1.0, 0.0],
                                 "target_center": [1.0, 0.0], "radius": 0.35}},
                ],
            },
        }
        cfg = load_config(write_config(tmp_path, payload))
        scheme = cfg.build_scheme()
        from schottkyflow.coding import validate
        assert validate(scheme).ok

    def test_nonfinite_rejected(self, tmp_path):
        payload = {"scheme": {"fixture": "fix-a"},
                   "tolerances": {"rpf": float("inf")}}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload).replace("Infinity", "1e999"))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_nested_unknown_key_rejected(self, tmp_path):
        payload = {"scheme": {"fixture": "fix-a"},
                   "grids": {"gap_q": [1.0]}}
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, payload))

    def test_fixture_with_extras_rejected(self, tmp_path):
        payload = {"scheme": {"fixture": "fix-a", "rank": 2}}
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, payload))
