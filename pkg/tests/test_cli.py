import filecmp
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from oupairs import cli
from oupairs.config import load_config
from oupairs.errors import ConfigError
from oupairs.market_data import synthetic_trading_dates
from oupairs.stat_tests import engle_granger
from oupairs.synth import generate_universe, write_price_file

DATES_750 = synthetic_trading_dates(750)


def write_config(path, prices, out_dir, **overrides):
    cfg = {
        "prices_file": str(prices),
        "out_dir": str(out_dir),
        "train_start": "2018-01-02",
        "train_end": DATES_750[399].isoformat(),
        "test_start": DATES_750[400].isoformat(),
        "test_end": DATES_750[-1].isoformat(),
        "strategy": "both",
        "seed": 7,
    }
    cfg.update(overrides)
    lines = [f"{k}: {v}" for k, v in cfg.items()]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture(scope="module")
def synth_run(tmp_path_factory):
    """One full pipeline run shared by the read-only CLI assertions."""
    root = tmp_path_factory.mktemp("cli_run")
    prices = root / "prices.csv"
    rows, _ = generate_universe(n_pairs=4, n_days=750, seed=7, n_decoys=1)
    write_price_file(str(prices), rows)
    out = root / "out"
    cfg = write_config(root / "cfg.yaml", prices, out)
    assert cli.main(["run", "--config", cfg]) == 0
    return root, prices, out, cfg


class TestConfig:
    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("prices_file: x\nbogus_key: 1\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config(str(p))

    def test_missing_required_keys(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("prices_file: x\n")
        with pytest.raises(ConfigError, match="missing required"):
            load_config(str(p))

    def test_bad_strategy(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", "x", "y", strategy="bogus")
        with pytest.raises(ConfigError, match="strategy"):
            load_config(cfg)

    def test_overrides_win(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", "x", "y")
        loaded = load_config(cfg, overrides={"max_pairs": 3, "alpha": 0.01})
        assert loaded.max_pairs == 3 and loaded.alpha == 0.01

    def test_date_coercion(self, tmp_path):
        cfg = load_config(write_config(tmp_path / "c.yaml", "x", "y"))
        assert cfg.train_start.isoformat() == "2018-01-02"


class TestSynthCommand:
    def test_shape_one_pair(self, tmp_path):
        out = tmp_path / "one.csv"
        rc = cli.main(["synth", "--out", str(out), "--pairs", "1", "--days", "500",
                       "--seed", "3", "--decoys", "0"])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 2 * 500  # header + 2 securities x 500 days
        tickers = {line.split(",")[3] for line in lines[1:]}
        assert tickers == {"P00A", "P00B"}

    def test_generated_pairs_cointegrated_in_prices(self):
        hits = 0
        for seed in range(100):
            rows, truths = generate_universe(n_pairs=1, n_days=500, seed=seed, n_decoys=0)
            a = np.array([float(r["adjclose"]) for r in rows[:500]])
            b = np.array([float(r["adjclose"]) for r in rows[500:]])
            hits += engle_granger(a, b).p_value < 0.05
        assert hits >= 95

    def test_decoy_pairs_mostly_rejected(self):
        rejections = 0
        for seed in range(100):
            rows, _ = generate_universe(n_pairs=0 + 1, n_days=500, seed=seed, n_decoys=2)
            decoys = [r for r in rows if r["ticker"].startswith("D")]
            a = np.array([float(r["adjclose"]) for r in decoys[:500]])
            b = np.array([float(r["adjclose"]) for r in decoys[500:]])
            rejections += engle_granger(a, b).p_value < 0.05
        assert rejections <= 10

    def test_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["synth", "--out", str(a), "--pairs", "2", "--days", "100", "--seed", "5"])
        cli.main(["synth", "--out", str(b), "--pairs", "2", "--days", "100", "--seed", "5"])
        assert a.read_bytes() == b.read_bytes()


class TestRun:
    def test_outputs_and_manifest(self, synth_run):
        _, _, out, _ = synth_run
        for name in (
            "train_panel.csv", "test_panel.csv", "pairs_selected.csv", "pairs_validated.csv",
            "ou_params.csv", "baseline_metrics.json", "ou_metrics.json", "run_manifest.json",
        ):
            assert (out / name).exists(), name
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["counts"]["pairs_selected"] == 4
        assert manifest["counts"]["pairs_retained"] >= 1
        assert manifest["config"]["alpha"] == 0.05
        assert not (out / "RUN_FAILED.txt").exists()

    def test_alpha_zero_halts_at_validation(self, synth_run, tmp_path):
        root, prices, _, _ = synth_run
        out = tmp_path / "halted"
        cfg = write_config(tmp_path / "c.yaml", prices, out, alpha=0.0)
        rc = cli.main(["run", "--config", cfg])
        assert rc == 3
        marker = (out / "RUN_FAILED.txt").read_text()
        assert "validate-pairs" in marker and "no retained pairs" in marker
        assert (out / "pairs_validated.csv").exists()  # audit trail survives

    def test_stage_composition_equals_run(self, synth_run, tmp_path):
        root, prices, out_run, _ = synth_run
        out2 = tmp_path / "staged"
        cfg2 = write_config(tmp_path / "c2.yaml", prices, out2)
        for command in ("ingest", "select-pairs", "validate-pairs", "calibrate", "backtest", "report"):
            assert cli.main([command, "--config", cfg2]) == 0
        compare = [
            f for f in os.listdir(out_run)
            if f != "run_manifest.json" and not f.startswith("panel")
        ]
        match, mismatch, errors = filecmp.cmpfiles(out_run, out2, compare, shallow=False)
        assert not mismatch and not errors

    def test_cli_overrides_reflected_in_manifest(self, synth_run, tmp_path):
        root, prices, _, _ = synth_run
        out = tmp_path / "ovr"
        cfg = write_config(tmp_path / "c.yaml", prices, out)
        rc = cli.main(["run", "--config", cfg, "--max-pairs", "2", "--strategy", "baseline"])
        assert rc == 0
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["config"]["max_pairs"] == 2
        assert manifest["config"]["strategy"] == "baseline"
        assert manifest["counts"]["pairs_selected"] == 2
        assert not (out / "ou_metrics.json").exists()


class TestExitCodes:
    def test_config_error_is_one(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("nonsense: true\n")
        assert cli.main(["run", "--config", str(p)]) == 1

    def test_bad_flag_is_one(self):
        assert cli.main(["run", "--config", "x", "--bogus-flag"]) == 1

    def test_data_error_is_two(self, tmp_path):
        cfg = write_config(tmp_path / "c.yaml", tmp_path / "missing.csv", tmp_path / "out")
        assert cli.main(["run", "--config", cfg]) == 2

    def test_console_entry_point(self, synth_run, tmp_path):
        # one subprocess round trip through the real argv path
        root, prices, _, _ = synth_run
        out = tmp_path / "sub"
        cfg = write_config(tmp_path / "c.yaml", prices, out, strategy="baseline")
        proc = subprocess.run(
            [sys.executable, "-m", "oupairs.cli", "run", "--config", cfg],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "baseline_metrics.json").exists()
