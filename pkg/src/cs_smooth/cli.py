"""Command-line front end: train, sign, render, fidelity, eval, bench.

Every command is deterministic given its inputs and --seed. Errors exit
nonzero after printing a single parsable line, "error: <code>: <reason>".
The CS_SMOOTH_LOG environment variable (debug/info/warning) controls logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import shlex
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines, batchio, cs, evaluation, fidelity, synthetic
from .core import (
    SensorMatrix,
    TimeGrid,
    WindowSpec,
    align,
    infer_grid,
    load_dataset_dir,
    windows,
)
from .errors import (
    CsSmoothError,
    DegenerateInputError,
    FormatError,
    InvalidParameterError,
    LabelMismatchError,
    TaskError,
)

log = logging.getLogger("cs_smooth")

METHODS = ("cs", "tuncer", "bodik", "lan")
_SPAN_RE = re.compile(r"^(\d+)(ms|s|m|h)?$")
_SPAN_MS = {"ms": 1, "s": 1_000, "m": 60_000, "h": 3_600_000}


@dataclass(frozen=True)
class Span:
    """A window length or step: either a sample count or a duration."""

    value: int
    unit: str  # "samples" or "ms"

    def to_samples(self, interval_ms: int) -> int:
        if self.unit == "samples":
            return self.value
        if self.value % interval_ms != 0:
            raise InvalidParameterError(
                f"duration {self.value}ms is not a multiple of the grid interval "
                f"{interval_ms}ms"
            )
        return self.value // interval_ms


def parse_span(text: str) -> Span:
    m = _SPAN_RE.match(text.strip())
    if not m:
        raise InvalidParameterError(
            f"cannot parse span {text!r}: use a sample count or <int>(ms|s|m|h)"
        )
    value, unit = int(m.group(1)), m.group(2)
    if value < 1:
        raise InvalidParameterError("spans must be at least 1 sample")
    if unit is None:
        return Span(value, "samples")
    return Span(value * _SPAN_MS[unit], "ms")


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters shared by the dataset-driven commands."""

    dataset_dir: Path
    window: Span
    step: Span
    method: str = "cs"
    blocks: tuple[int, ...] = ()
    interval: int | None = None
    retrain_every: int | None = None
    lan_subsample: int = 10
    seed: int = 0
    threads: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameterError(f"unknown method {self.method!r}")
        if any(b < 1 for b in self.blocks):
            raise InvalidParameterError("block counts must be >= 1")
        if self.retrain_every is not None and self.retrain_every < 1:
            raise InvalidParameterError("--retrain-every must be >= 1")
        if self.interval is not None and self.interval < 1:
            raise InvalidParameterError("--interval must be >= 1 ms")
        if self.lan_subsample < 1:
            raise InvalidParameterError("--lan-subsample must be >= 1")


def _load_matrix(config: RunConfig) -> SensorMatrix:
    series = load_dataset_dir(config.dataset_dir)
    grid = infer_grid(series, interval=config.interval)
    matrix = align(series, grid)
    log.info(
        "loaded %d sensors x %d samples (interval %dms)",
        matrix.n_sensors,
        matrix.n_samples,
        grid.interval,
    )
    return matrix


def _window_spec(config: RunConfig, matrix: SensorMatrix) -> WindowSpec:
    interval = matrix.grid.interval
    return WindowSpec(
        length_samples=config.window.to_samples(interval),
        step_samples=config.step.to_samples(interval),
    )


def cmd_train(args: argparse.Namespace) -> int:
    config = RunConfig(
        dataset_dir=Path(args.dataset),
        window=Span(1, "samples"),
        step=Span(1, "samples"),
        interval=args.interval,
    )
    started = time.perf_counter()
    matrix = _load_matrix(config)
    model = cs.train(matrix)
    elapsed = time.perf_counter() - started
    cs.save_model(model, args.out)
    print(
        f"trained model {model.model_id}: n={matrix.n_sensors} t={matrix.n_samples} "
        f"wall_time_s={elapsed:.3f}"
    )
    return 0


def _sign_cs(args: argparse.Namespace, config: RunConfig, matrix: SensorMatrix):
    spec = _window_spec(config, matrix)
    model = cs.load_model(args.model)
    n_blocks = config.blocks[0] if config.blocks else 20
    window_list = list(windows(matrix, spec))
    if config.retrain_every:
        sigs = []
        current = model
        for i, window in enumerate(window_list):
            start_col = i * spec.step_samples
            if i > 0 and i % config.retrain_every == 0 and start_col >= 2:
                history = SensorMatrix(
                    sensor_ids=matrix.sensor_ids,
                    grid=TimeGrid(
                        start=matrix.grid.start,
                        interval=matrix.grid.interval,
                        count=start_col,
                    ),
                    data=matrix.data[:, :start_col],
                )
                current = cs.train(history)
                log.info("window %d: retrained model %s", i, current.model_id)
            sigs.append(cs.compute_signature(window, current, n_blocks))
        return sigs
    workers = config.threads or os.cpu_count() or 1
    if workers > 1 and len(window_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(lambda w: cs.compute_signature(w, model, n_blocks), window_list)
            )
    return [cs.compute_signature(w, model, n_blocks) for w in window_list]


def cmd_sign(args: argparse.Namespace) -> int:
    config = RunConfig(
        dataset_dir=Path(args.dataset),
        window=parse_span(args.window),
        step=parse_span(args.step),
        method=args.method,
        blocks=(args.blocks,) if args.blocks else (),
        interval=args.interval,
        retrain_every=args.retrain_every,
        lan_subsample=args.lan_subsample,
        threads=args.threads,
    )
    matrix = _load_matrix(config)
    if config.method == "cs":
        if not args.model:
            raise InvalidParameterError("--model is required for method cs")
        sigs = _sign_cs(args, config, matrix)
    else:
        spec = _window_spec(config, matrix)
        maker = {
            "tuncer": baselines.tuncer_signature,
            "bodik": baselines.bodik_signature,
            "lan": lambda w: baselines.lan_signature(w, config.lan_subsample),
        }[config.method]
        sigs = [maker(w) for w in windows(matrix, spec)]
    if not sigs:
        raise DegenerateInputError(
            "no complete windows fit the data; shrink --window"
        )
    count = batchio.write_signature_batch(args.out, sigs)
    print(f"wrote {count} signatures to {args.out}")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    batch = batchio.read_signature_batch(args.batch)
    if args.component == "real":
        values = batch.real
    else:
        if batch.imag is None:
            raise FormatError("batch has no imaginary columns to render")
        lo, hi = batch.imag.min(), batch.imag.max()
        if hi > lo:
            values = (batch.imag - lo) / (hi - lo)
        else:
            values = np.full_like(batch.imag, 0.5)
    pixels = np.clip(np.floor(255.0 * (1.0 - values) + 0.5), 0, 255).astype(np.uint8)
    batchio.write_pgm(args.out, pixels.T)
    print(
        f"rendered {batch.n_signatures} signatures x {batch.n_blocks} blocks "
        f"({args.component}) to {args.out}"
    )
    return 0


def cmd_fidelity(args: argparse.Namespace) -> int:
    block_list = tuple(int(tok) for tok in args.blocks.split(","))
    config = RunConfig(
        dataset_dir=Path(args.dataset),
        window=parse_span(args.window),
        step=parse_span(args.step),
        blocks=block_list,
        interval=args.interval,
    )
    matrix = _load_matrix(config)
    spec = _window_spec(config, matrix)
    model = cs.load_model(args.model)
    rows = []
    for n_blocks in block_list:
        comp = fidelity.fidelity_components(matrix, model, spec, n_blocks, bins=args.bins)
        rows.append((n_blocks, comp.js_real, comp.js_imag, comp.js_mean))
        log.info("l=%d js_real=%.4f js_imag=%.4f", n_blocks, comp.js_real, comp.js_imag)
    batchio.write_csv_report(args.out, ["l", "js_real", "js_imag", "js_mean"], rows)
    print(f"wrote fidelity report ({len(rows)} rows) to {args.out}")
    return 0


class _ExternalPredictor:
    """File-exchange predictor: train/test CSVs out, predictions CSV back."""

    def __init__(self, command: str, workdir: Path):
        self.argv = shlex.split(command)
        self.workdir = workdir
        self.fold = 0
        self._train: tuple[np.ndarray, np.ndarray] | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray) -> None:
        self._train = (features, labels)

    def predict(self, features: np.ndarray) -> np.ndarray:
        train_x, train_y = self._train
        width = train_x.shape[1]
        train_path = self.workdir / f"fold{self.fold}_train.csv"
        test_path = self.workdir / f"fold{self.fold}_test.csv"
        pred_path = self.workdir / f"fold{self.fold}_predictions.csv"
        self.fold += 1
        feat_header = [f"f_{i}" for i in range(1, width + 1)]
        fmt_label = lambda y: y if isinstance(y, str) else repr(float(y))
        fmt_row = lambda x: [repr(float(v)) for v in x]
        batchio.write_csv_report(
            train_path,
            ["label", *feat_header],
            ([fmt_label(y), *fmt_row(x)] for x, y in zip(train_x, train_y)),
        )
        batchio.write_csv_report(
            test_path, feat_header, (fmt_row(x) for x in features)
        )
        proc = subprocess.run(
            [*self.argv, str(train_path), str(test_path), str(pred_path)],
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            raise CsSmoothError(
                f"external predictor exited {proc.returncode}: {proc.stderr.strip()}"
            )
        with open(pred_path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != "prediction":
            raise FormatError("predictions file must start with a 'prediction' header")
        if len(lines) - 1 != len(features):
            raise FormatError(
                f"expected {len(features)} predictions, got {len(lines) - 1}"
            )
        return np.array(lines[1:])


def _dataset_from_files(args: argparse.Namespace) -> evaluation.LabeledDataset:
    batch = batchio.read_signature_batch(args.batch)
    labels_by_start = batchio.read_labels_csv(args.labels)
    missing = [s for s in batch.window_starts.tolist() if s not in labels_by_start]
    if missing or len(labels_by_start) != batch.n_signatures:
        detail = f"{batch.n_signatures} signatures vs {len(labels_by_start)} labels"
        if missing:
            detail += f"; no label for window_start {missing[:5]}"
        raise LabelMismatchError(detail)
    label_strings = [labels_by_start[s] for s in batch.window_starts.tolist()]
    features = evaluation.signature_features(
        batch.real, batch.imag, real_only=args.real_only
    )
    if args.task == evaluation.REGRESSION:
        try:
            labels = np.array([float(v) for v in label_strings])
        except ValueError as exc:
            raise TaskError(f"regression needs numeric labels: {exc}") from None
    else:
        labels = np.array(label_strings)
        if len(set(label_strings)) == len(label_strings) and len(label_strings) > 1:
            raise TaskError(
                "every window has a distinct label; these look like regression "
                "targets, not classes"
            )
    return evaluation.LabeledDataset(features=features, labels=labels, task=args.task)


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = _dataset_from_files(args)
    if args.predictor_cmd:
        with tempfile.TemporaryDirectory(prefix="cs_smooth_eval_") as tmp:
            predictor = _ExternalPredictor(args.predictor_cmd, Path(tmp))
            metrics = evaluation.cross_validate(dataset, predictor, args.folds, args.seed)
    else:
        predictor = evaluation.reference_predictor(args.task)
        metrics = evaluation.cross_validate(dataset, predictor, args.folds, args.seed)
    metric_name = "f1_macro" if args.task == evaluation.CLASSIFICATION else "nrmse_c"
    rows = [(str(i), metric_name, repr(s)) for i, s in enumerate(metrics.per_fold)]
    rows.append(("mean", metric_name, repr(metrics.score)))
    batchio.write_csv_report(args.out, ["fold", "metric", "score"], rows)
    print(f"{metric_name}={metrics.score:.4f} over {args.folds} folds -> {args.out}")
    return 0


def _bench_model(window, seed: int) -> cs.CSModel:
    rng = np.random.default_rng(seed)
    return cs.CSModel(
        sensor_ids=window.sensor_ids,
        permutation=rng.permutation(len(window.sensor_ids)),
        lower_bounds=window.values.min(axis=1),
        upper_bounds=window.values.max(axis=1),
    )


def _median_time(fn, reps: int) -> float:
    fn()  # warm-up outside the measurement
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def cmd_bench(args: argparse.Namespace) -> int:
    methods = tuple(tok.strip() for tok in args.methods.split(","))
    for m in methods:
        if m not in METHODS:
            raise InvalidParameterError(f"unknown method {m!r}")
    n_list = [int(tok) for tok in args.n_list.split(",")]
    wl_list = [int(tok) for tok in args.wl_list.split(",")]
    rows = []
    for n in n_list:
        for wl in wl_list:
            window = synthetic.random_window(n, wl, seed=args.seed)
            for method in methods:
                if method == "cs":
                    model = _bench_model(window, args.seed)
                    blocks = min(args.blocks, n)
                    fn = lambda: cs.compute_signature(window, model, blocks)
                elif method == "tuncer":
                    fn = lambda: baselines.tuncer_signature(window)
                elif method == "bodik":
                    fn = lambda: baselines.bodik_signature(window)
                else:
                    sub = min(args.lan_subsample, wl)
                    fn = lambda: baselines.lan_signature(window, sub)
                median = _median_time(fn, args.reps)
                rows.append((method, n, wl, median))
                log.info("bench %s n=%d wl=%d median=%.6fs", method, n, wl, median)
    batchio.write_csv_report(
        args.out, ["method", "n_sensors", "window_len", "median_seconds"], rows
    )
    print(f"wrote bench report ({len(rows)} rows) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cs-smooth",
        description="Compress monitoring time-series into compact image-like signatures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="learn a sorting/normalization model")
    p_train.add_argument("--dataset", required=True, help="directory of per-sensor CSVs")
    p_train.add_argument("--interval", type=int, help="grid interval in ms (default: inferred)")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.set_defaults(handler=cmd_train)

    p_sign = sub.add_parser("sign", help="compute a signature batch")
    p_sign.add_argument("--dataset", required=True)
    p_sign.add_argument("--model", help="model file (required for method cs)")
    p_sign.add_argument("--method", choices=METHODS, default="cs")
    p_sign.add_argument("--window", required=True, help="window length: samples or <int>(ms|s|m|h)")
    p_sign.add_argument("--step", required=True, help="window step: samples or duration")
    p_sign.add_argument("--blocks", type=int, help="signature blocks for method cs (default 20)")
    p_sign.add_argument("--lan-subsample", type=int, default=10)
    p_sign.add_argument("--retrain-every", type=int, help="retrain on history every k windows")
    p_sign.add_argument("--interval", type=int)
    p_sign.add_argument("--seed", type=int, default=0)
    p_sign.add_argument("--threads", type=int, default=0, help="0 = all cores")
    p_sign.add_argument("--out", required=True)
    p_sign.set_defaults(handler=cmd_sign)

    p_render = sub.add_parser("render", help="render a batch as a grayscale heatmap")
    p_render.add_argument("--batch", required=True, help="signature batch CSV")
    p_render.add_argument("--component", choices=("real", "imag"), default="real")
    p_render.add_argument("--out", required=True, help="PGM (P5) image to write")
    p_render.set_defaults(handler=cmd_render)

    p_fid = sub.add_parser("fidelity", help="compression fidelity across block counts")
    p_fid.add_argument("--dataset", required=True)
    p_fid.add_argument("--model", required=True)
    p_fid.add_argument("--window", required=True)
    p_fid.add_argument("--step", required=True)
    p_fid.add_argument("--blocks", required=True, help="comma-separated block counts")
    p_fid.add_argument("--bins", type=int, default=fidelity.DEFAULT_BINS)
    p_fid.add_argument("--interval", type=int)
    p_fid.add_argument("--out", required=True)
    p_fid.set_defaults(handler=cmd_fidelity)

    p_eval = sub.add_parser("eval", help="cross-validate signatures on a labeled task")
    p_eval.add_argument("--batch", required=True, help="signature batch CSV")
    p_eval.add_argument("--labels", required=True, help="window_start,label CSV")
    p_eval.add_argument("--task", choices=(evaluation.CLASSIFICATION, evaluation.REGRESSION),
                        default=evaluation.CLASSIFICATION)
    p_eval.add_argument("--folds", type=int, default=5)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--real-only", action="store_true",
                        help="drop imaginary components from the features")
    p_eval.add_argument("--predictor-cmd",
                        help="external predictor: invoked as CMD train.csv test.csv predictions.csv")
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(handler=cmd_eval)

    p_bench = sub.add_parser("bench", help="median signature times over a size grid")
    p_bench.add_argument("--methods", default="cs,tuncer,bodik,lan")
    p_bench.add_argument("--n-list", default="100,1000", help="comma-separated sensor counts")
    p_bench.add_argument("--wl-list", default="10,100", help="comma-separated window lengths")
    p_bench.add_argument("--blocks", type=int, default=20)
    p_bench.add_argument("--lan-subsample", type=int, default=10)
    p_bench.add_argument("--reps", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--threads", type=int, default=1)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(handler=cmd_bench)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("CS_SMOOTH_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)-7s %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CsSmoothError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
