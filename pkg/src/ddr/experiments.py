"""Config-driven benchmark harness: k-fold evaluation of reducers.

One benchmark run evaluates a list of methods ({ddr, sir, save, pca,
nn_ls}) under the same protocol: standardize on the training fold, fit
the reducer there, extract features for both folds, fit OLS (regression)
or 5-NN (classification) on the training features, and score the test
fold on the original response scale.

Configs are flat key-value text with TOML-style [sections]; every
resolved value is echoed into the report together with a content hash,
so a report row pins the exact run that produced it.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .baselines import (
    accuracy,
    fit_pca,
    fit_save,
    fit_sir,
    knn_classify,
    ols_fit_predict,
    prediction_error,
)
from .datagen import (
    Dataset,
    gen_classification,
    gen_regression1,
    gen_regression2,
    kfold_split,
    load_csv,
    standardize,
)
from .dependence import dcorr
from .errors import ParseError
from .svg import scatter_svg
from .trainer import TrainConfig, ddr_embed, ddr_train

__all__ = [
    "ExperimentConfig",
    "RunReport",
    "parse_config_text",
    "load_experiment_config",
    "make_dataset",
    "make_train_config",
    "run_benchmark",
]

KNOWN_METHODS = ("ddr", "sir", "save", "pca", "nn_ls")


def _coerce(raw: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    if "," in raw:
        return [_coerce(part) for part in raw.split(",") if part.strip()]
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def parse_config_text(text: str) -> dict:
    """Parse flat key-value text with [sections] into nested dicts."""
    out: dict = {}
    section = out
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if not name:
                raise ParseError(f"line {lineno}: empty section name")
            section = out.setdefault(name, {})
            continue
        if "=" not in stripped:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ParseError(f"line {lineno}: empty key")
        section[key] = _coerce(value)
    return out


@dataclass
class ExperimentConfig:
    """A resolved experiment: dataset spec, method list and overrides."""

    task: str
    dataset: dict
    methods: list[str]
    folds: int = 5
    seed: int = 1
    output_dir: str = "."
    overrides: dict = field(default_factory=dict)  # per-method sections

    def resolved(self) -> dict:
        return {
            "task": self.task,
            "dataset": self.dataset,
            "methods": list(self.methods),
            "folds": self.folds,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "overrides": self.overrides,
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_experiment_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ParseError(f"no such config file: {path}")
    with open(path, encoding="utf-8") as fh:
        doc = parse_config_text(fh.read())
    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ParseError(f"{path}: missing [dataset] section")
    methods = doc.get("methods", "ddr")
    if isinstance(methods, str):
        methods = [methods]
    methods = [str(m).strip() for m in methods]
    for m in methods:
        if m not in KNOWN_METHODS:
            raise ParseError(f"{path}: unknown method {m!r}; known: {KNOWN_METHODS}")
    overrides = {k: v for k, v in doc.items() if k in KNOWN_METHODS}
    return ExperimentConfig(
        task=str(doc.get("task", "experiment")),
        dataset=dataset,
        methods=methods,
        folds=int(doc.get("folds", 5)),
        seed=int(doc.get("seed", 1)),
        output_dir=str(doc.get("output_dir", ".")),
        overrides=overrides,
    )


def make_dataset(spec: dict, seed: int) -> Dataset:
    """Instantiate the dataset a config's [dataset] section describes."""
    if "csv" in spec:
        targets = spec.get("targets", [-1])
        if not isinstance(targets, list):
            targets = [targets]
        ds = load_csv(
            str(spec["csv"]), targets, has_header=bool(spec.get("header", True))
        )
        if spec.get("task") == "classification":
            ds.task = "classification"
        return ds
    gen = str(spec.get("generator", ""))
    seed = int(spec.get("seed", seed))
    if gen == "regression1":
        return gen_regression1(
            str(spec.get("model", "b")),
            int(spec.get("n", 10_000)),
            float(spec.get("sigma", 0.1)),
            seed,
        )
    if gen == "regression2":
        return gen_regression2(
            str(spec.get("model", "a")),
            str(spec.get("scenario", "i")),
            int(spec.get("n", 5000)),
            seed,
        )
    if gen == "classification":
        return gen_classification(
            str(spec.get("shape", "circles")),
            int(spec.get("n_per_class", 5000)),
            int(spec.get("ambient_dim", 100)),
            seed,
        )
    raise ParseError(f"unknown dataset generator {gen!r}")


_TRAIN_KEYS = {
    "rep_dim",
    "lam",
    "batch_size",
    "inner_loops",
    "outer_loops",
    "divergence",
    "learning_rate",
    "disc_learning_rate",
    "weight_decay",
    "theta_passes",
    "disc_epochs",
    "disc_batch_size",
    "resample_reference",
    "clip_velocity",
    "seed",
}


def make_train_config(overrides: dict, seed: int) -> TrainConfig:
    kwargs = {k: v for k, v in overrides.items() if k in _TRAIN_KEYS}
    kwargs.setdefault("seed", seed)
    for tuple_key in ("rep_hidden", "disc_hidden"):
        if tuple_key in overrides:
            value = overrides[tuple_key]
            if not isinstance(value, list):
                value = [value]
            kwargs[tuple_key] = tuple(int(v) for v in value)
    if "step_schedule" in overrides:
        kwargs["step_schedule"] = overrides["step_schedule"]
    if "activation_slope" in overrides:
        kwargs["activation"] = nn.leaky_relu(float(overrides["activation_slope"]))
    return TrainConfig(**kwargs)


def _nn_ls_features(train: Dataset, test: Dataset, cfg: TrainConfig, seed: int):
    """Least-squares-trained MLP of the same shape; features from the
    penultimate (width rep_dim) layer."""
    p = train.x.shape[1]
    q = train.y.shape[1]
    net = nn.init_network(
        [p, *cfg.rep_hidden, cfg.rep_dim, q], cfg.activation, seed=seed
    )
    opt = nn.Adam(cfg.learning_rate, weight_decay=cfg.weight_decay)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = train.n
    for _ in range(cfg.outer_loops):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            out = nn.forward(net, train.x[idx])
            grads, _ = nn.backward(net, train.x[idx], 2.0 * (out - train.y[idx]) / len(idx))
            opt.apply(net, grads)
    upto = len(net.layers) - 1
    return nn.forward_hidden(net, train.x, upto), nn.forward_hidden(net, test.x, upto)


def _reducer_features(method, train, test, d, overrides):
    n_slices = int(overrides.get("n_slices", 10))
    y_train = train.y[:, 0]
    if train.task == "classification":
        n_slices = len(np.unique(y_train))
    if method == "sir":
        red = fit_sir(train.x, y_train, d, n_slices)
    elif method == "save":
        red = fit_save(train.x, y_train, d, n_slices)
    else:
        red = fit_pca(train.x, d)
    return red.transform(train.x), red.transform(test.x)


@dataclass
class RunReport:
    """Per-method, per-fold metrics plus means and standard errors."""

    task: str
    config_hash: str
    seed: int
    resolved_config: dict
    rows: list[dict] = field(default_factory=list)

    def add(self, **row) -> None:
        self.rows.append(row)

    def summary(self) -> list[dict]:
        out = []
        for method in sorted({r["method"] for r in self.rows}):
            rows = [r for r in self.rows if r["method"] == method and r["status"] == "ok"]
            entry = {"method": method, "folds": len(rows)}
            for metric in ("mse", "rmse", "accuracy", "dcorr", "seconds"):
                vals = np.array(
                    [r[metric] for r in rows if r.get(metric) is not None],
                    dtype=np.float64,
                )
                if len(vals):
                    entry[f"{metric}_mean"] = float(vals.mean())
                    entry[f"{metric}_se"] = (
                        float(vals.std(ddof=1) / np.sqrt(len(vals)))
                        if len(vals) > 1
                        else 0.0
                    )
            out.append(entry)
        key_metric = "accuracy_mean" if self.task_is_classification() else "rmse_mean"
        reverse = self.task_is_classification()
        out.sort(key=lambda e: e.get(key_metric, np.inf), reverse=reverse)
        return out

    def task_is_classification(self) -> bool:
        return any(r.get("accuracy") is not None for r in self.rows)

    def method_mean(self, method: str, metric: str):
        for entry in self.summary():
            if entry["method"] == method:
                return entry.get(f"{metric}_mean")
        return None

    def write_csv(self, folds_path: str, summary_path: str) -> None:
        cols = [
            "method", "fold", "status", "mse", "rmse", "accuracy", "dcorr",
            "seconds", "seed", "config_hash",
        ]
        _atomic_write(
            folds_path,
            ",".join(cols)
            + "\n"
            + "".join(
                ",".join(_cell(r.get(c)) for c in cols) + "\n" for r in self.rows
            ),
        )
        summary = self.summary()
        keys = ["method", "folds"] + [
            k for k in (
                "mse_mean", "mse_se", "rmse_mean", "rmse_se",
                "accuracy_mean", "accuracy_se", "dcorr_mean", "dcorr_se",
                "seconds_mean",
            )
            if any(k in e for e in summary)
        ]
        _atomic_write(
            summary_path,
            ",".join(keys)
            + "\n"
            + "".join(
                ",".join(_cell(e.get(k)) for k in keys) + "\n" for e in summary
            ),
        )


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_benchmark(config: ExperimentConfig, emit_svg: bool = True) -> RunReport:
    """Run the full k-fold protocol for every configured method.

    A failing fold marks that method's row as failed and the run
    continues with the remaining work.
    """
    dataset = make_dataset(config.dataset, config.seed)
    plan = kfold_split(dataset.n, config.folds, seed=config.seed)
    report = RunReport(
        task=config.task,
        config_hash=config.content_hash(),
        seed=config.seed,
        resolved_config=config.resolved(),
    )
    for method in config.methods:
        overrides = dict(config.overrides.get(method, {}))
        for fold in range(config.folds):
            t0 = time.perf_counter()
            try:
                train = dataset.subset(plan.train_indices(fold))
                test = dataset.subset(plan.test_indices(fold))
                train_std, transform = standardize(train)
                test_std = transform.apply(test)
                if method == "ddr":
                    cfg = make_train_config(overrides, config.seed + fold)
                    model = ddr_train(train_std, cfg)
                    f_train = ddr_embed(model, train_std.x)
                    f_test = ddr_embed(model, test_std.x)
                elif method == "nn_ls":
                    cfg = make_train_config(overrides, config.seed + fold)
                    f_train, f_test = _nn_ls_features(
                        train_std, test_std, cfg, config.seed + fold
                    )
                else:
                    d = int(overrides.get("d", overrides.get("rep_dim", 1)))
                    f_train, f_test = _reducer_features(
                        method, train_std, test_std, d, overrides
                    )
                row = dict(method=method, fold=fold, status="ok",
                           seed=config.seed, config_hash=report.config_hash)
                if dataset.task == "regression":
                    pred = ols_fit_predict(f_train, train.y[:, 0], f_test)
                    row["mse"] = prediction_error(test.y[:, 0], pred)
                    row["rmse"] = float(np.sqrt(row["mse"]))
                    row["accuracy"] = None
                else:
                    pred = knn_classify(
                        f_train, train.y[:, 0], f_test,
                        k=int(overrides.get("knn_k", 5)),
                    )
                    row["accuracy"] = accuracy(test.y[:, 0], pred)
                    row["mse"] = row["rmse"] = None
                row["dcorr"] = dcorr(f_test, test.y)
                row["seconds"] = time.perf_counter() - t0
                report.add(**row)
                if (
                    emit_svg
                    and dataset.task == "classification"
                    and f_test.shape[1] == 2
                    and fold == 0
                ):
                    os.makedirs(config.output_dir, exist_ok=True)
                    scatter_svg(
                        f_test,
                        test.y[:, 0],
                        os.path.join(
                            config.output_dir, f"{config.task}_{method}_features.svg"
                        ),
                        title=f"{config.task}: {method} features (fold 0)",
                    )
            except Exception as exc:  # noqa: BLE001 - fold failures are recorded
                report.add(
                    method=method, fold=fold, status=f"failed: {exc}",
                    mse=None, rmse=None, accuracy=None, dcorr=None,
                    seconds=time.perf_counter() - t0,
                    seed=config.seed, config_hash=report.config_hash,
                )
    return report
