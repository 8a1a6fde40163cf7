import json
import os

import numpy as np
import pytest
import yaml

from trispin.cli import list_experiments, main
from trispin.io import (
    ConfigError,
    EXPERIMENT_NAMES,
    grid_values,
    load_config,
    resolve_config,
    serialize_config,
    write_csv,
)


def write_yaml(path, data):
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh)
    return str(path)


@pytest.fixture
def spectrum_cfg(tmp_path):
    return write_yaml(
        tmp_path / "spectrum.yaml",
        {"experiment": "spectrum", "seed": 3,
         "grids": {"j12": {"start": 0.0, "stop": 200.0, "points": 51}}},
    )


class TestConfig:
    def test_missing_required_key_named(self, tmp_path):
        path = write_yaml(tmp_path / "bad.yaml", {"experiment": "spectrum"})
        with pytest.raises(ConfigError, match="seed"):
            resolve_config(load_config(path))

    def test_unknown_experiment_lists_names(self):
        with pytest.raises(ConfigError) as err:
            resolve_config({"experiment": "teleportation", "seed": 1})
        for name in EXPERIMENT_NAMES:
            assert name in str(err.value)

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="unknown key: shotz"):
            resolve_config({"experiment": "spectrum", "seed": 1, "shotz": 5})

    def test_round_trip(self):
        cfg = resolve_config({"experiment": "free-evolution", "seed": 9, "shots": 12})
        again = resolve_config(yaml.safe_load(serialize_config(cfg)))
        assert again == cfg

    def test_defaults_filled(self):
        cfg = resolve_config({"experiment": "t2star-scan", "seed": 1})
        assert cfg["shots"] == 500
        assert cfg["noise"]["hyperfine"]["sigma_mhz"] == pytest.approx(0.091702)
        assert cfg["grids"]["eg"]["scale"] == "log"

    def test_grid_values_scales(self):
        lin = grid_values({"start": 0.0, "stop": 1.0, "points": 3, "scale": "linear"})
        assert np.allclose(lin, [0.0, 0.5, 1.0])
        log = grid_values({"start": 1.0, "stop": 100.0, "points": 3, "scale": "log"})
        assert np.allclose(log, [1.0, 10.0, 100.0])

    def test_bad_grid_rejected(self):
        with pytest.raises(ConfigError, match="grids.eg"):
            resolve_config({"experiment": "leakage-vs-gap", "seed": 1,
                            "grids": {"eg": {"start": -1.0, "stop": 10.0, "points": 5, "scale": "log"}}})


class TestCsv:
    def test_full_precision_round_trip(self, tmp_path):
        path = tmp_path / "x.csv"
        values = np.array([1.0 / 3.0, np.pi, 1e-17, 123456.789012345678])
        write_csv(path, [("v", values)])
        lines = path.read_text().strip().splitlines()
        parsed = np.array([float(line) for line in lines[1:]])
        assert np.array_equal(parsed, values)


class TestCliRuns:
    def test_list_experiments(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 7
        listed = [line.split()[0] for line in out]
        assert tuple(listed) == EXPERIMENT_NAMES
        assert [name for name, _ in list_experiments()] == list(EXPERIMENT_NAMES)

    def test_spectrum_run_columns_and_values(self, spectrum_cfg, tmp_path, capsys):
        out_dir = tmp_path / "out"
        assert main(["run", "--config", spectrum_cfg, "--out", str(out_dir)]) == 0
        csv_path = out_dir / "spectrum.csv"
        header = csv_path.read_text().splitlines()[0].split(",")
        assert header == ["J12_MHz"] + [f"E{k}_MHz" for k in range(1, 9)]
        data = np.genfromtxt(csv_path, delimiter=",", skip_header=1)
        # equal-coupling point: two 4-fold clusters split by 150 MHz
        row = data[np.argmin(np.abs(data[:, 0] - 100.0))]
        assert np.allclose(row[1:5], -75.0, atol=1e-9)
        assert np.allclose(row[5:9], 75.0, atol=1e-9)
        meta = json.loads((out_dir / "spectrum.meta").read_text())
        assert meta["seed"] == 3
        assert meta["experiment"] == "spectrum"

    def test_missing_key_exit_2(self, tmp_path, capsys):
        path = write_yaml(tmp_path / "bad.yaml", {"experiment": "spectrum"})
        assert main(["run", "--config", path]) == 2
        assert "seed" in capsys.readouterr().err

    def test_unknown_experiment_exit_2(self, spectrum_cfg, capsys):
        assert main(["run", "warp-drive", "--config", spectrum_cfg]) == 2
        err = capsys.readouterr().err
        for name in EXPERIMENT_NAMES:
            assert name in err

    def test_missing_config_file_exit_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_seed_override_echoed(self, spectrum_cfg, tmp_path):
        out_dir = tmp_path / "out"
        assert main(["run", "--config", spectrum_cfg, "--seed", "77", "--out", str(out_dir)]) == 0
        meta = json.loads((out_dir / "spectrum.meta").read_text())
        assert meta["seed"] == 77

    def test_determinism_byte_identical(self, tmp_path):
        cfg = write_yaml(
            tmp_path / "fe.yaml",
            {"experiment": "free-evolution", "seed": 5, "shots": 40,
             "grids": {"t": {"start": 0.0, "stop": 3.0, "points": 31}}},
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(out_a)]) == 0
        assert main(["run", "--config", cfg, "--out", str(out_b)]) == 0
        assert (out_a / "free-evolution.csv").read_bytes() == (out_b / "free-evolution.csv").read_bytes()
        assert (out_a / "free-evolution.meta").read_bytes() == (out_b / "free-evolution.meta").read_bytes()

    def test_threads_do_not_change_output(self, tmp_path):
        cfg = write_yaml(
            tmp_path / "ls.yaml",
            {"experiment": "leakage-spectroscopy", "seed": 5, "shots": 30,
             "grids": {"bz": {"start": -4.5, "stop": 4.5, "points": 41}}},
        )
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(out_a), "--threads", "1"]) == 0
        assert main(["run", "--config", cfg, "--out", str(out_b), "--threads", "4"]) == 0
        assert (out_a / "leakage-spectroscopy.csv").read_bytes() == (out_b / "leakage-spectroscopy.csv").read_bytes()
