import csv
import sys

import numpy as np
import pytest

from cs_smooth import batchio, cs
from cs_smooth.cli import main, parse_span
from cs_smooth.errors import InvalidParameterError
from cs_smooth.synthetic import class_stream


def run(*argv):
    return main([str(a) for a in argv])


def read_report(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestParseSpan:
    def test_samples(self):
        assert parse_span("15").to_samples(1000) == 15

    def test_durations(self):
        assert parse_span("30s").to_samples(1000) == 30
        assert parse_span("500ms").to_samples(100) == 5
        assert parse_span("2m").to_samples(1000) == 120
        assert parse_span("1h").to_samples(60_000) == 60

    def test_non_multiple_duration(self):
        with pytest.raises(InvalidParameterError):
            parse_span("2500ms").to_samples(1000)

    def test_garbage(self):
        with pytest.raises(InvalidParameterError):
            parse_span("fast")


class TestTrainCommand:
    def test_writes_round_trippable_model(self, write_dataset, tmp_path, capsys):
        rng = np.random.default_rng(0)
        dataset = write_dataset(rng.uniform(size=(4, 20)))
        out = tmp_path / "model.json"
        assert run("train", "--dataset", dataset, "--out", out) == 0
        captured = capsys.readouterr().out
        assert "n=4 t=20" in captured
        model = cs.load_model(out)
        assert model.n_sensors == 4

    def test_empty_dir_fails(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        assert run("train", "--dataset", empty, "--out", tmp_path / "m.json") == 1
        err = capsys.readouterr().err
        assert err.startswith("error: empty-input:")
        assert "\n" not in err.strip()

    def test_constant_sensor_is_fine(self, write_dataset, tmp_path):
        data = np.vstack([np.full(12, 7.0), np.arange(12, dtype=float)])
        dataset = write_dataset(data)
        assert run("train", "--dataset", dataset, "--out", tmp_path / "m.json") == 0


class TestSignCommand:
    def make_model(self, dataset, tmp_path):
        out = tmp_path / "model.json"
        assert run("train", "--dataset", dataset, "--out", out) == 0
        return out

    def test_window_enumeration_row_count(self, write_dataset, tmp_path):
        rng = np.random.default_rng(1)
        dataset = write_dataset(rng.uniform(size=(3, 10)))
        model = self.make_model(dataset, tmp_path)
        out = tmp_path / "batch.csv"
        assert run(
            "sign", "--dataset", dataset, "--model", model,
            "--window", 4, "--step", 3, "--blocks", 2, "--out", out,
        ) == 0
        batch = batchio.read_signature_batch(out)
        assert batch.n_signatures == 3

    def test_cs_row_width_is_twice_blocks(self, write_dataset, tmp_path):
        rng = np.random.default_rng(2)
        dataset = write_dataset(rng.uniform(size=(25, 12)))
        model = self.make_model(dataset, tmp_path)
        out = tmp_path / "batch.csv"
        assert run(
            "sign", "--dataset", dataset, "--model", model,
            "--window", 6, "--step", 6, "--blocks", 20, "--out", out,
        ) == 0
        batch = batchio.read_signature_batch(out)
        assert batch.real.shape[1] == 20
        assert batch.imag.shape[1] == 20

    def test_tuncer_row_width(self, write_dataset, tmp_path):
        rng = np.random.default_rng(3)
        dataset = write_dataset(rng.uniform(size=(128, 8)))
        out = tmp_path / "batch.csv"
        assert run(
            "sign", "--dataset", dataset, "--method", "tuncer",
            "--window", 4, "--step", 4, "--out", out,
        ) == 0
        batch = batchio.read_signature_batch(out)
        assert batch.real.shape[1] == 1408
        assert batch.imag is None

    def test_duration_window_converted_by_interval(self, write_dataset, tmp_path):
        rng = np.random.default_rng(4)
        dataset = write_dataset(rng.uniform(size=(3, 12)), interval=500)
        model = self.make_model(dataset, tmp_path)
        out = tmp_path / "batch.csv"
        assert run(
            "sign", "--dataset", dataset, "--model", model,
            "--window", "2s", "--step", "1s", "--blocks", 3, "--out", out,
        ) == 0
        batch = batchio.read_signature_batch(out)
        # 12 samples at 500ms: windows of 4 samples every 2 -> 5 windows
        assert batch.n_signatures == 5

    def test_retrain_every_stays_deterministic(self, write_dataset, tmp_path):
        rng = np.random.default_rng(5)
        dataset = write_dataset(rng.uniform(size=(4, 30)))
        model = self.make_model(dataset, tmp_path)
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            assert run(
                "sign", "--dataset", dataset, "--model", model,
                "--window", 5, "--step", 5, "--blocks", 4,
                "--retrain-every", 2, "--out", out,
            ) == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]

    def test_retrain_updates_bounds_for_later_windows(self, write_dataset, tmp_path):
        # values drift upward, so a retrained model has wider bounds and later
        # signatures must differ from the frozen-model run
        rng = np.random.default_rng(12)
        drift = rng.uniform(size=(3, 40)) + np.linspace(0, 5, 40)
        dataset = write_dataset(drift)
        model = self.make_model(dataset, tmp_path)
        frozen, retrained = tmp_path / "frozen.csv", tmp_path / "retrained.csv"
        for out, extra in ((frozen, []), (retrained, ["--retrain-every", "2"])):
            assert run(
                "sign", "--dataset", dataset, "--model", model,
                "--window", 5, "--step", 5, "--blocks", 3, "--out", out, *extra,
            ) == 0
        a = batchio.read_signature_batch(frozen)
        b = batchio.read_signature_batch(retrained)
        assert np.array_equal(a.real[0], b.real[0])  # before the first retrain
        assert not np.array_equal(a.real[-1], b.real[-1])

    def test_thread_count_does_not_change_output(self, write_dataset, tmp_path):
        rng = np.random.default_rng(11)
        dataset = write_dataset(rng.uniform(size=(6, 40)))
        model = self.make_model(dataset, tmp_path)
        outputs = []
        for threads in (1, 4):
            out = tmp_path / f"batch_t{threads}.csv"
            assert run(
                "sign", "--dataset", dataset, "--model", model,
                "--window", 5, "--step", 5, "--blocks", 3,
                "--threads", threads, "--out", out,
            ) == 0
            outputs.append(out.read_text())
        assert outputs[0] == outputs[1]

    def test_model_mismatch_reported(self, write_dataset, tmp_path, capsys):
        rng = np.random.default_rng(6)
        dataset = write_dataset(rng.uniform(size=(3, 10)))
        other = write_dataset(rng.uniform(size=(4, 10)), subdir="other")
        model = self.make_model(other, tmp_path)
        code = run(
            "sign", "--dataset", dataset, "--model", model,
            "--window", 4, "--step", 2, "--blocks", 2, "--out", tmp_path / "x.csv",
        )
        assert code == 1
        assert capsys.readouterr().err.startswith("error: model-incompatible:")


class TestRenderCommand:
    def write_batch(self, tmp_path, sigs):
        path = tmp_path / "batch.csv"
        batchio.write_signature_batch(path, sigs)
        return path

    def make_sig(self, real, imag, n):
        return cs.Signature(
            blocks_real=np.asarray(real, dtype=float),
            blocks_imag=np.asarray(imag, dtype=float),
            layout=cs.block_layout(n, len(real)),
        )

    def test_real_pixel_mapping(self, tmp_path):
        batch = self.write_batch(
            tmp_path, [self.make_sig([1.0, 0.0, 0.5], [0.0, 0.0, 0.0], 3)]
        )
        out = tmp_path / "img.pgm"
        assert run("render", "--batch", batch, "--component", "real", "--out", out) == 0
        img = batchio.read_pgm(out)
        assert img.shape == (3, 1)  # one pixel-row per block, one column per signature
        assert img[:, 0].tolist() == [0, 255, 128]

    def test_constant_imag_renders_mid_gray(self, tmp_path):
        batch = self.write_batch(
            tmp_path,
            [self.make_sig([0.1, 0.2], [0.3, 0.3], 2), self.make_sig([0.4, 0.5], [0.3, 0.3], 2)],
        )
        out = tmp_path / "img.pgm"
        assert run("render", "--batch", batch, "--component", "imag", "--out", out) == 0
        img = batchio.read_pgm(out)
        assert img.shape == (2, 2)
        assert np.all(img == 128)

    def test_imag_rescaled_over_batch(self, tmp_path):
        batch = self.write_batch(
            tmp_path, [self.make_sig([0.0, 0.0], [-0.2, 0.6], 2)]
        )
        out = tmp_path / "img.pgm"
        assert run("render", "--batch", batch, "--component", "imag", "--out", out) == 0
        img = batchio.read_pgm(out)
        assert img[:, 0].tolist() == [255, 0]

    def test_empty_batch_errors(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert run("render", "--batch", path, "--out", tmp_path / "img.pgm") == 1
        assert capsys.readouterr().err.startswith("error: empty-input:")


class TestFidelityCommand:
    def test_report_rows_per_block_count(self, write_dataset, tmp_path):
        rng = np.random.default_rng(7)
        dataset = write_dataset(np.cumsum(rng.standard_normal((12, 60)), axis=1))
        model = tmp_path / "model.json"
        assert run("train", "--dataset", dataset, "--out", model) == 0
        out = tmp_path / "fidelity.csv"
        assert run(
            "fidelity", "--dataset", dataset, "--model", model,
            "--window", 10, "--step", 10, "--blocks", "2,4,8,12", "--out", out,
        ) == 0
        rows = read_report(out)
        assert [r["l"] for r in rows] == ["2", "4", "8", "12"]
        for row in rows:
            mean = (float(row["js_real"]) + float(row["js_imag"])) / 2
            assert float(row["js_mean"]) == pytest.approx(mean, abs=1e-12)

    def test_lossless_configuration_reports_zero(self, write_dataset, tmp_path):
        rng = np.random.default_rng(8)
        dataset = write_dataset(rng.uniform(size=(5, 30)))
        model = tmp_path / "model.json"
        assert run("train", "--dataset", dataset, "--out", model) == 0
        out = tmp_path / "fidelity.csv"
        assert run(
            "fidelity", "--dataset", dataset, "--model", model,
            "--window", 1, "--step", 1, "--blocks", "5", "--out", out,
        ) == 0
        row = read_report(out)[0]
        assert float(row["js_mean"]) < 1e-9

    def test_block_count_beyond_sensors_errors(self, write_dataset, tmp_path, capsys):
        rng = np.random.default_rng(9)
        dataset = write_dataset(rng.uniform(size=(4, 20)))
        model = tmp_path / "model.json"
        assert run("train", "--dataset", dataset, "--out", model) == 0
        code = run(
            "fidelity", "--dataset", dataset, "--model", model,
            "--window", 5, "--step", 5, "--blocks", "2,8", "--out", tmp_path / "f.csv",
        )
        assert code == 1
        assert capsys.readouterr().err.startswith("error: invalid-block-count:")


def make_labeled_batch(tmp_path, windows_per_class=12, n=12, wl=8, real_only_signal=True):
    """Three separable classes of CS signatures plus a labels CSV."""
    from cs_smooth.core import WindowSpec, windows as iter_windows
    from cs_smooth.cs import compute_signature, train

    sigs, labels = [], {}
    streams = [
        class_stream(label, n, wl * windows_per_class + 1, seed=17 + label)
        for label in range(3)
    ]
    merged = np.concatenate([s.data for s in streams], axis=1)
    from cs_smooth.core import SensorMatrix, TimeGrid

    model = train(
        SensorMatrix(
            sensor_ids=streams[0].sensor_ids,
            grid=TimeGrid(0, 1000, merged.shape[1]),
            data=merged,
        )
    )
    offset = 0
    for label, stream in enumerate(streams):
        shifted = SensorMatrix(
            sensor_ids=stream.sensor_ids,
            grid=TimeGrid(offset, 1000, stream.n_samples),
            data=stream.data,
        )
        for w in iter_windows(shifted, WindowSpec(wl, wl)):
            sigs.append(compute_signature(w, model, 6))
            labels[sigs[-1].window_start] = f"app{label}"
        offset += stream.n_samples * 1000
    batch_path = tmp_path / "batch.csv"
    batchio.write_signature_batch(batch_path, sigs)
    labels_path = tmp_path / "labels.csv"
    labels_path.write_text(
        "window_start,label\n"
        + "\n".join(f"{s},{v}" for s, v in sorted(labels.items()))
        + "\n"
    )
    return batch_path, labels_path


class TestEvalCommand:
    def test_separable_classes_score_high(self, tmp_path, capsys):
        batch, labels = make_labeled_batch(tmp_path)
        out = tmp_path / "metrics.csv"
        assert run(
            "eval", "--batch", batch, "--labels", labels,
            "--task", "classification", "--out", out,
        ) == 0
        rows = read_report(out)
        assert rows[-1]["fold"] == "mean"
        assert float(rows[-1]["score"]) >= 0.95

    def test_same_seed_same_report(self, tmp_path):
        batch, labels = make_labeled_batch(tmp_path)
        reports = []
        for name in ("m1.csv", "m2.csv"):
            out = tmp_path / name
            assert run(
                "eval", "--batch", batch, "--labels", labels,
                "--seed", 9, "--out", out,
            ) == 0
            reports.append(out.read_text())
        assert reports[0] == reports[1]

    def test_regression_labels_with_classification_flag(self, tmp_path, capsys):
        batch, labels = make_labeled_batch(tmp_path)
        distinct = "window_start,label\n" + "\n".join(
            f"{row['window_start']},{i * 0.125}"
            for i, row in enumerate(read_report_batch(batch))
        )
        labels.write_text(distinct + "\n")
        code = run("eval", "--batch", batch, "--labels", labels, "--out", tmp_path / "m.csv")
        assert code == 1
        assert capsys.readouterr().err.startswith("error: task:")

    def test_label_count_mismatch(self, tmp_path, capsys):
        batch, labels = make_labeled_batch(tmp_path)
        lines = labels.read_text().strip().splitlines()
        labels.write_text("\n".join(lines[:-1]) + "\n")
        code = run("eval", "--batch", batch, "--labels", labels, "--out", tmp_path / "m.csv")
        assert code == 1
        assert capsys.readouterr().err.startswith("error: label-mismatch:")

    def test_regression_task_reports_nrmse(self, tmp_path):
        batch, labels = make_labeled_batch(tmp_path)
        # numeric targets derived from the class index, plus jitter
        rows = read_report_batch(batch)
        rng = np.random.default_rng(0)
        lines = ["window_start,label"]
        with open(labels) as fh:
            by_start = dict(
                line.strip().split(",") for line in fh.readlines()[1:] if line.strip()
            )
        for row in rows:
            cls = float(by_start[row["window_start"]][-1])
            lines.append(f"{row['window_start']},{cls + rng.uniform(-0.05, 0.05)!r}")
        labels.write_text("\n".join(lines) + "\n")
        out = tmp_path / "metrics.csv"
        assert run(
            "eval", "--batch", batch, "--labels", labels,
            "--task", "regression", "--out", out,
        ) == 0
        report = read_report(out)
        assert report[-1]["metric"] == "nrmse_c"
        assert 0.8 <= float(report[-1]["score"]) <= 1.0

    def test_external_predictor_round_trip(self, tmp_path):
        batch, labels = make_labeled_batch(tmp_path)
        plugin = tmp_path / "plugin.py"
        plugin.write_text(
            """
import csv, sys
train_path, test_path, out_path = sys.argv[1:4]
with open(train_path) as fh:
    rows = list(csv.DictReader(fh))
labels = [r["label"] for r in rows]
train_x = [[float(v) for k, v in r.items() if k != "label"] for r in rows]
with open(test_path) as fh:
    test_x = [[float(v) for v in row.values()] for row in csv.DictReader(fh)]
def nearest(q):
    best, dist = 0, float("inf")
    for i, x in enumerate(train_x):
        d = sum((a - b) ** 2 for a, b in zip(x, q))
        if d < dist:
            best, dist = i, d
    return labels[best]
with open(out_path, "w") as fh:
    fh.write("prediction\\n")
    for q in test_x:
        fh.write(nearest(q) + "\\n")
"""
        )
        out = tmp_path / "metrics.csv"
        assert run(
            "eval", "--batch", batch, "--labels", labels,
            "--predictor-cmd", f"{sys.executable} {plugin}", "--out", out,
        ) == 0
        rows = read_report(out)
        assert float(rows[-1]["score"]) >= 0.95


def read_report_batch(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestBenchCommand:
    def test_row_per_combination(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert run(
            "bench", "--methods", "cs,lan", "--n-list", "8,16",
            "--wl-list", "5,10", "--reps", 3, "--out", out,
        ) == 0
        rows = read_report(out)
        combos = {(r["method"], r["n_sensors"], r["window_len"]) for r in rows}
        assert len(rows) == 8
        assert ("cs", "8", "5") in combos
        assert ("lan", "16", "10") in combos
        for row in rows:
            assert float(row["median_seconds"]) >= 0.0

    def test_unknown_method_rejected(self, tmp_path, capsys):
        code = run("bench", "--methods", "pca", "--out", tmp_path / "b.csv")
        assert code == 1
        assert capsys.readouterr().err.startswith("error: invalid-parameter:")

    def test_cs_linear_vs_tuncer_superlinear_in_window(self, tmp_path):
        # sorted percentiles cost w*log(w) per row, so a 10x window costs
        # tuncer more than 10x while cs stays at most linear-ish; sizes large
        # enough that sorting dwarfs per-call overhead
        out = tmp_path / "bench.csv"
        assert run(
            "bench", "--methods", "cs,tuncer", "--n-list", "64",
            "--wl-list", "2000,20000", "--reps", 11, "--out", out,
        ) == 0
        medians = {
            (r["method"], r["window_len"]): float(r["median_seconds"])
            for r in read_report(out)
        }
        tuncer_ratio = medians[("tuncer", "20000")] / medians[("tuncer", "2000")]
        cs_ratio = medians[("cs", "20000")] / medians[("cs", "2000")]
        assert tuncer_ratio > 10.0, f"tuncer grew only {tuncer_ratio:.1f}x"
        assert cs_ratio <= 15.0, f"cs grew {cs_ratio:.1f}x"


class TestLoggingEnvVar:
    def test_log_level_env_smoke(self, tmp_path, monkeypatch, write_dataset, capsys):
        monkeypatch.setenv("CS_SMOOTH_LOG", "debug")
        dataset = write_dataset(np.random.default_rng(0).uniform(size=(3, 8)))
        assert run("train", "--dataset", dataset, "--out", tmp_path / "m.json") == 0
