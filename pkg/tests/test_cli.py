import json

import numpy as np
import pytest
import yaml

from mrbnn import bnn, modelio
from mrbnn.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "toy.mrbnn"
    code = main(["train-toy", "--out-model", str(out)])
    assert code == 0
    return str(out)


class TestDeviceReport:
    def test_multibit_report(self, tmp_path, capsys):
        out = tmp_path / "spectrum.csv"
        code, stdout, _ = run_cli(
            ["device-report", "--class", "MultiBit", "--out", str(out)],
            capsys)
        assert code == 0
        summary = json.loads(stdout)
        assert summary["resolution_bits"] >= 4
        assert abs(summary["q_factor"] - 5000) / 5000 <= 0.10
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "wavelength_nm,transmission"
        assert len(lines) == 2002

    def test_missing_class_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["device-report", "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_unknown_class_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["device-report", "--class", "Octagon",
                  "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2

    def test_deterministic_rerun(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        for out in (a, b):
            code, _, _ = run_cli(
                ["device-report", "--class", "SingleBit", "--out", str(out)],
                capsys)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()


class TestTrainToy:
    def test_metadata_and_checksum(self, model_path):
        model, meta = modelio.load_model(model_path)
        assert meta["train_accuracy"] >= 0.95
        assert model.weighted_layers()

    def test_zero_lr_keeps_init(self, tmp_path, capsys):
        out = tmp_path / "frozen.mrbnn"
        code, stdout, _ = run_cli(
            ["train-toy", "--learning-rate", "0", "--out-model", str(out)],
            capsys)
        assert code == 0
        model, _ = modelio.load_model(str(out))
        init = bnn.make_mlp([8, 32, 3], seed=7)
        for got, want in zip(model.weighted_layers(),
                             init.weighted_layers()):
            assert np.allclose(got.weights,
                               want.weights.astype(np.float32), atol=0)

    def test_deterministic(self, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.mrbnn"
            code, _, _ = run_cli(["train-toy", "--out-model", str(out)],
                                 capsys)
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestFpvSweep:
    def test_full_tuning_matches_reference(self, model_path, tmp_path,
                                           capsys):
        out = tmp_path / "sweep.csv"
        code, _, _ = run_cli(
            ["fpv-sweep", "--model", model_path, "--fractions", "1.0",
             "--seeds", "1", "--out", str(out)], capsys)
        assert code == 0
        header, row = out.read_text().strip().split("\n")
        assert header == "tuning_fraction,mean_accuracy,std_accuracy"
        frac, mean, std = (float(v) for v in row.split(","))
        model, meta = modelio.load_model(model_path)
        assert mean == pytest.approx(meta["test_accuracy"], abs=1e-6)
        assert std == 0.0

    def test_eleven_rows(self, model_path, tmp_path, capsys):
        out = tmp_path / "sweep11.csv"
        fractions = ",".join(f"{v / 10:.1f}" for v in range(11))
        code, _, _ = run_cli(
            ["fpv-sweep", "--model", model_path, "--fractions", fractions,
             "--seeds", "3", "--out", str(out)], capsys)
        assert code == 0
        assert len(out.read_text().strip().split("\n")) == 12

    def test_byte_identical_rerun(self, model_path, tmp_path, capsys):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.csv"
            code, _, _ = run_cli(
                ["fpv-sweep", "--model", model_path,
                 "--fractions", "0.0,0.8,1.0", "--seeds", "5",
                 "--out", str(out)], capsys)
            assert code == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_corrupt_model_exit_3(self, model_path, tmp_path, capsys):
        bad = tmp_path / "bad.mrbnn"
        raw = bytearray(open(model_path, "rb").read())
        raw[-1] ^= 0x55
        bad.write_bytes(bytes(raw))
        code, _, err = run_cli(
            ["fpv-sweep", "--model", str(bad), "--fractions", "1.0",
             "--seeds", "1", "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 3
        assert err.startswith("error[data]:")


class TestSimulate:
    def test_report_and_steps(self, model_path, tmp_path, capsys):
        out = tmp_path / "report.json"
        code, stdout, _ = run_cli(
            ["simulate", "--model", model_path, "--arch", "po",
             "--out", str(out)], capsys)
        assert code == 0
        assert "power_breakdown_sum_ok true" in stdout
        report = json.loads(out.read_text())
        assert report["pipeline_steps"] == 1  # toy model fits one step
        total = sum(report["power_breakdown_mw"].values())
        assert total == pytest.approx(report["total_power_mw"], rel=1e-6)
        assert report["noisy_accuracy"] is not None

    def test_plan_dump_flag(self, model_path, tmp_path, capsys):
        out = tmp_path / "report.json"
        plan = tmp_path / "plan.txt"
        code, _, _ = run_cli(
            ["simulate", "--model", model_path, "--out", str(out),
             "--dump-plan", str(plan)], capsys)
        assert code == 0
        assert plan.read_text().startswith("layer output chunk")

    def test_deterministic(self, model_path, tmp_path, capsys):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.json"
            code, _, _ = run_cli(
                ["simulate", "--model", model_path, "--out", str(out)],
                capsys)
            assert code == 0
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "small.yaml"
    p.write_text(yaml.safe_dump({
        "sweep": {"n_a_values": [10, 50], "n_vdp_values": [50, 200],
                  "n_wg_values": [10]},
        "workload": [
            {"name": "net60k",
             "layer_parameter_counts": [59508, 1064, 70]},
        ]}))
    return str(p)


class TestDse:
    def test_outputs_and_ordering(self, small_config, tmp_path, capsys):
        out = tmp_path / "dse"
        code, stdout, _ = run_cli(
            ["dse", "--config", small_config, "--out", str(out)], capsys)
        assert code == 0
        summary = json.loads(stdout)
        assert summary["evaluated_points"] == 4
        scatter = (out / "scatter.csv").read_text().strip().split("\n")
        assert len(scatter) == 5
        rows = {tuple(int(v) for v in line.split(",")[:3]):
                line.split(",") for line in scatter[1:]}
        fps_eo = float(rows[(10, 50, 10)][3])
        fps_po = float(rows[(50, 200, 10)][3])
        assert fps_po > fps_eo

    def test_deterministic(self, small_config, tmp_path, capsys):
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code, _, _ = run_cli(
                ["dse", "--config", small_config, "--out", str(out)],
                capsys)
            assert code == 0
            blobs.append((out / "scatter.csv").read_bytes()
                         + (out / "picks.json").read_bytes())
        assert blobs[0] == blobs[1]


class TestTedSweep:
    def test_csv_rows(self, tmp_path, capsys):
        out = tmp_path / "ted.csv"
        code, _, _ = run_cli(
            ["ted-sweep", "--spacings", "5,7", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "spacing_um,p_naive_mw,p_ted_mw,reduction"
        assert len(lines) == 3
        red5 = float(lines[1].split(",")[3])
        red7 = float(lines[2].split(",")[3])
        assert red5 == pytest.approx(0.51, abs=0.10)
        assert red7 == pytest.approx(0.41, abs=0.10)


class TestConfigHandling:
    def test_unknown_key_exit_2(self, tmp_path, capsys):
        p = tmp_path / "bad.yaml"
        p.write_text("warp_drive: on\n")
        code, _, err = run_cli(
            ["device-report", "--class", "MultiBit", "--config", str(p),
             "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 2
        assert err.startswith("error[config]:")

    def test_env_var_config(self, tmp_path, capsys, monkeypatch):
        p = tmp_path / "c.yaml"
        p.write_text("fpv:\n  seed: 5\n")
        monkeypatch.setenv("MRBNN_CONFIG", str(p))
        code, _, _ = run_cli(
            ["device-report", "--class", "MultiBit",
             "--out", str(tmp_path / "x.csv")], capsys)
        assert code == 0

    def test_passband_violation_exit_4(self, tmp_path, capsys, model_path):
        p = tmp_path / "c.yaml"
        p.write_text("accelerator:\n  n_a: 21\n  n_wg: 1\n")
        code, _, err = run_cli(
            ["simulate", "--model", model_path, "--config", str(p),
             "--out", str(tmp_path / "x.json")], capsys)
        assert code == 4
        assert err.startswith("error[physical]:")
