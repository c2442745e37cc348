"""Covariate-shift experiments on tabular data.

Flow: load a dataset with its sampling-bias split, perturb integer-valued
feature columns with small Gaussian noise (repeated identical values would
otherwise pin several interval boundaries onto one point), fit one adaptive
quantile tree per feature on the training side, train identical networks on
raw standardized features and on quantized features, then stream the test
side through the trees with adaptation switched on and score both arms.

Bundled data: iris ships with the package.  The other datasets load from a
user-supplied CSV; see the dataset registry for the required column names
(header names are matched case-insensitively, with spaces and punctuation
collapsed to underscores).
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
import pandas as pd

from .metrics import accuracy, mse
from .mlp import MlpModel, TrainConfig, init_model, predict, train
from .qtree import Xenovert, XenovertConfig, grow

__all__ = [
    "DatasetSpec",
    "DATASETS",
    "Split",
    "FeatureBank",
    "load_split",
    "inject_noise",
    "fit_bank",
    "transform",
    "run_experiment",
]


@dataclass(frozen=True)
class DatasetSpec:
    """One tabular experiment: columns, task, and which columns get noise.

    feature_columns None means "every numeric column except the split and
    label columns", for datasets whose covariates vary by source file.
    """

    name: str
    task: str  # "classify" or "regress"
    label_column: str
    feature_columns: tuple[str, ...] | None
    noise_columns: tuple[str, ...] = ()
    split_column: str | None = None
    bundled: bool = False


_IRIS_FEATURES = ("sepal_length", "sepal_width", "petal_length", "petal_width")
_ABALONE_FEATURES = (
    "length",
    "diameter",
    "height",
    "whole_weight",
    "shucked_weight",
    "viscera_weight",
    "shell_weight",
)

DATASETS: dict[str, DatasetSpec] = {
    # full data as train; test is a copy with petal length and width + 5
    "iris": DatasetSpec(
        name="iris",
        task="classify",
        label_column="species",
        feature_columns=_IRIS_FEATURES,
        noise_columns=_IRIS_FEATURES,
        bundled=True,
    ),
    # control: test is an unshifted copy of train
    "iris-noshift": DatasetSpec(
        name="iris-noshift",
        task="classify",
        label_column="species",
        feature_columns=_IRIS_FEATURES,
        noise_columns=_IRIS_FEATURES,
        bundled=True,
    ),
    # Pima-style CSV: age < 24 trains, age >= 24 tests
    "diabetes": DatasetSpec(
        name="diabetes",
        task="classify",
        label_column="outcome",
        feature_columns=("glucose", "bmi"),
        noise_columns=("glucose",),
        split_column="age",
    ),
    # UCI-style CSV: whole_weight <= its median trains, the rest tests
    "abalone": DatasetSpec(
        name="abalone",
        task="regress",
        label_column="rings",
        feature_columns=_ABALONE_FEATURES,
        split_column="whole_weight",
    ),
    "abalone-noshift": DatasetSpec(
        name="abalone-noshift",
        task="regress",
        label_column="rings",
        feature_columns=_ABALONE_FEATURES,
    ),
    # Ames-style CSV: yearbuilt <= 2000 trains, later years test
    "iowa": DatasetSpec(
        name="iowa",
        task="regress",
        label_column="saleprice",
        feature_columns=("grlivarea", "overallqual"),
        noise_columns=("grlivarea", "overallqual"),
        split_column="yearbuilt",
    ),
    # year <= 2018 trains, 2019 on tests; features discovered from the file
    "mosquito": DatasetSpec(
        name="mosquito",
        task="regress",
        label_column="mosquito_indicator",
        feature_columns=None,
        split_column="year",
    ),
}


@dataclass(frozen=True)
class Split:
    """Arrays ready for the experiment: train side, test side, and names."""

    X_tr: np.ndarray
    y_tr: np.ndarray
    X_te: np.ndarray
    y_te: np.ndarray
    feature_names: tuple[str, ...]
    label_name: str
    task: str
    class_names: tuple[str, ...] | None = None


def _normalize_column(name: str) -> str:
    return re.sub(r"[^0-9a-zA-Z]+", "_", str(name).strip()).strip("_").lower()


def _read_table(spec: DatasetSpec, csv_path: str | None) -> pd.DataFrame:
    if csv_path is None:
        if not spec.bundled:
            raise ValueError(
                f"dataset {spec.name!r} is not bundled; pass the CSV path "
                f"(needs columns incl. {spec.label_column!r})"
            )
        source = resources.files("xenovert").joinpath("data/iris.csv")
        with resources.as_file(source) as path:
            df = pd.read_csv(path)
    else:
        df = pd.read_csv(csv_path)
    df.columns = [_normalize_column(c) for c in df.columns]
    return df


def _require_columns(spec: DatasetSpec, df: pd.DataFrame, names) -> None:
    missing = [c for c in names if c not in df.columns]
    if missing:
        raise ValueError(
            f"dataset {spec.name!r} is missing columns {missing}; found {list(df.columns)}"
        )


def _encode_labels(values: pd.Series):
    classes = tuple(str(c) for c in sorted(values.astype(str).unique()))
    lookup = {c: i for i, c in enumerate(classes)}
    return values.astype(str).map(lookup).to_numpy(np.int64), classes


def load_split(name: str, csv_path: str | None = None) -> Split:
    """Load a registered dataset and apply its sampling-bias split.

    Rows with a missing feature, label, or split value are dropped.  Both
    sides of every split must end up nonempty.
    """
    if name not in DATASETS:
        raise ValueError(f"unknown dataset {name!r}; valid names: {sorted(DATASETS)}")
    spec = DATASETS[name]
    df = _read_table(spec, csv_path)

    if spec.feature_columns is None:
        reserved = {spec.label_column, spec.split_column}
        features = tuple(
            c
            for c in df.columns
            if c not in reserved and pd.api.types.is_numeric_dtype(df[c])
        )
        if not features:
            raise ValueError(f"dataset {spec.name!r} has no usable numeric feature columns")
    else:
        features = spec.feature_columns
    needed = list(features) + [spec.label_column]
    if spec.split_column is not None:
        needed.append(spec.split_column)
    _require_columns(spec, df, needed)
    df = df.dropna(subset=needed)
    if df.empty:
        raise ValueError(f"dataset {spec.name!r} has no complete rows")

    X = df[list(features)].to_numpy(np.float64)
    if not np.isfinite(X).all():
        raise ValueError(f"dataset {spec.name!r} has non-finite feature values")
    class_names = None
    if spec.task == "classify":
        y, class_names = _encode_labels(df[spec.label_column])
    else:
        y = df[spec.label_column].to_numpy(np.float64)
        if not np.isfinite(y).all():
            raise ValueError(f"dataset {spec.name!r} has non-finite label values")

    if spec.name in ("iris", "iris-noshift"):
        X_tr, y_tr = X, y
        X_te, y_te = X.copy(), y.copy()
        if spec.name == "iris":
            X_te[:, features.index("petal_length")] += 5.0
            X_te[:, features.index("petal_width")] += 5.0
    elif spec.name == "abalone-noshift":
        X_tr, y_tr = X, y
        X_te, y_te = X.copy(), y.copy()
    else:
        key = df[spec.split_column].to_numpy(np.float64)
        if spec.name == "diabetes":
            in_train = key < 24
        elif spec.name == "abalone":
            in_train = key <= np.median(key)
        elif spec.name == "iowa":
            in_train = key <= 2000
        else:  # mosquito
            in_train = key <= 2018
        X_tr, y_tr = X[in_train], y[in_train]
        X_te, y_te = X[~in_train], y[~in_train]

    if len(X_tr) == 0 or len(X_te) == 0:
        raise ValueError(f"dataset {spec.name!r} split left an empty side")
    return Split(
        X_tr=X_tr,
        y_tr=y_tr,
        X_te=X_te,
        y_te=y_te,
        feature_names=tuple(features),
        label_name=spec.label_column,
        task=spec.task,
        class_names=class_names,
    )


def inject_noise(
    X: np.ndarray, columns, sigma_frac: float, rng: np.random.Generator
) -> np.ndarray:
    """Copy of X with zero-mean Gaussian noise on the named columns only.

    Per column, sigma = sigma_frac times the column sample std, floored at
    1e-6 so constant columns still receive a tie-breaking perturbation.
    """
    if not (sigma_frac > 0):
        raise ValueError(f"sigma_frac must be > 0, got {sigma_frac}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-d, got shape {X.shape}")
    out = X.copy()
    for j in columns:
        col = X[:, j]
        std = float(col.std(ddof=1)) if len(col) > 1 else 0.0
        sigma = max(sigma_frac * std, 1e-6)
        out[:, j] = col + rng.normal(0.0, sigma, size=len(col))
    return out


@dataclass
class FeatureBank:
    """One independent quantile tree per feature column, shared config."""

    trees: list[Xenovert]

    @property
    def num_features(self) -> int:
        return len(self.trees)

    @property
    def config(self) -> XenovertConfig:
        return self.trees[0].config


def fit_bank(
    X: np.ndarray,
    config: XenovertConfig,
    passes: int = 50,
    rng: np.random.Generator | None = None,
) -> FeatureBank:
    """Stream each feature column through its own tree, reshuffled per pass."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError(f"X must be a nonempty 2-d array, got shape {X.shape}")
    if passes < 0:
        raise ValueError("passes must be >= 0")
    if not np.isfinite(X).all():
        raise ValueError("X must be finite")
    if rng is None:
        rng = np.random.default_rng(0)
    trees = [grow(config) for _ in range(X.shape[1])]
    n = X.shape[0]
    for _ in range(passes):
        order = rng.permutation(n)
        for j, tree in enumerate(trees):
            update = tree.update
            for x in X[order, j].tolist():
                update(x)
    return FeatureBank(trees=trees)


def transform(bank: FeatureBank, X: np.ndarray, adapt: bool = False) -> np.ndarray:
    """Quantize every value; with adapt, each value updates its tree first.

    Frozen mode is pure; adapt mode consumes rows in order (online regime).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != bank.num_features:
        raise ValueError(f"X must have shape (n, {bank.num_features}), got {X.shape}")
    out = np.empty(X.shape, dtype=np.int64)
    for j, tree in enumerate(bank.trees):
        col = X[:, j].tolist()
        convert = tree.convert
        if adapt:
            update = tree.update
            vals = []
            for x in col:
                update(x)
                vals.append(convert(x))
            out[:, j] = vals
        else:
            out[:, j] = [convert(x) for x in col]
    return out


def _safe_std(arr: np.ndarray, axis=None) -> np.ndarray:
    std = np.asarray(arr.std(axis=axis))
    return np.where(std < 1e-8, 1.0, std)


def _arm_metric(task: str, model: MlpModel, X: np.ndarray, y, y_stats) -> float:
    if task == "classify":
        return accuracy(predict(model, X), y)
    mu, sd = y_stats
    return mse(predict(model, X) * sd + mu, y)


def _run_seed(split: Split, spec, seed, xcfg, traincfg, opts) -> dict:
    rng = np.random.default_rng(seed)
    noise_idx = [split.feature_names.index(c) for c in spec.noise_columns]
    if noise_idx:
        X_tr = inject_noise(split.X_tr, noise_idx, opts["sigma_frac"], rng)
        X_te = inject_noise(split.X_te, noise_idx, opts["sigma_frac"], rng)
    else:
        X_tr, X_te = split.X_tr.copy(), split.X_te.copy()
    y_tr, y_te = split.y_tr, split.y_te

    n_out = len(split.class_names) if split.task == "classify" else 1
    sizes = [X_tr.shape[1], *opts["hidden"], n_out]
    tc = replace(traincfg, seed=seed)
    if split.task == "regress":
        # train on standardized targets, report the metric in label units
        y_mu, y_sd = float(y_tr.mean()), float(_safe_std(y_tr))
        y_fit = (y_tr - y_mu) / y_sd
    else:
        y_mu, y_sd = 0.0, 1.0
        y_fit = y_tr

    mu, sd = X_tr.mean(axis=0), _safe_std(X_tr, axis=0)
    raw_model = init_model(sizes, split.task, seed=seed)
    train(raw_model, (X_tr - mu) / sd, y_fit, tc)
    raw_metric = _arm_metric(split.task, raw_model, (X_te - mu) / sd, y_te, (y_mu, y_sd))

    bank = fit_bank(X_tr, xcfg, passes=opts["passes"], rng=rng)
    scale = float(xcfg.num_intervals) if opts["normalize_quantized"] else 1.0
    Q_tr = transform(bank, X_tr, adapt=False).astype(np.float64) / scale
    xeno_model = init_model(sizes, split.task, seed=seed)
    train(xeno_model, Q_tr, y_fit, tc)
    # let the trees re-converge on the target side (shuffled, like fitting),
    # then score the whole side against the adapted, frozen partition
    n_te = len(X_te)
    for _ in range(opts["adapt_passes"]):
        transform(bank, X_te[rng.permutation(n_te)], adapt=True)
    Q_te = transform(bank, X_te, adapt=False).astype(np.float64) / scale
    xeno_metric = _arm_metric(split.task, xeno_model, Q_te, y_te, (y_mu, y_sd))

    return {"seed": seed, "raw_mlp": float(raw_metric), "xenovert_mlp": float(xeno_metric)}


def run_experiment(
    name: str,
    xcfg: XenovertConfig,
    traincfg: TrainConfig,
    n_seeds: int = 30,
    csv_path: str | None = None,
    passes: int = 50,
    adapt_passes: int = 50,
    sigma_frac: float = 0.01,
    hidden: tuple[int, ...] = (200, 200),
    normalize_quantized: bool = False,
    base_seed: int = 0,
    max_workers: int = 1,
) -> dict:
    """Train both arms on the source side, score both on the target side.

    Arms: a network on standardized raw features, and a network on quantized
    features.  The quantized arm streams the target side through its trees
    for adapt_passes shuffled passes (adapt_passes=0 keeps them frozen), then
    scores every target row against the adapted partition; the network itself
    is never retrained.  Returns a JSON-ready report with per-seed values and
    mean and SD per arm.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    if adapt_passes < 0:
        raise ValueError("adapt_passes must be >= 0")
    split = load_split(name, csv_path)
    spec = DATASETS[name]
    opts = {
        "passes": passes,
        "adapt_passes": adapt_passes,
        "sigma_frac": sigma_frac,
        "hidden": tuple(int(h) for h in hidden),
        "normalize_quantized": bool(normalize_quantized),
    }
    seeds = [base_seed + i for i in range(n_seeds)]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(
                pool.map(lambda s: _run_seed(split, spec, s, xcfg, traincfg, opts), seeds)
            )
    else:
        rows = [_run_seed(split, spec, s, xcfg, traincfg, opts) for s in seeds]

    metric = "accuracy" if split.task == "classify" else "mse"
    arms = []
    for arm in ("raw_mlp", "xenovert_mlp"):
        vals = np.array([r[arm] for r in rows])
        arms.append(
            {
                "name": arm,
                "metric": metric,
                "mean": float(vals.mean()),
                "sd": float(vals.std(ddof=1)) if n_seeds > 1 else 0.0,
                "per_seed": [float(v) for v in vals],
            }
        )
    return {
        "dataset": name,
        "task": split.task,
        "metric": metric,
        "n_seeds": n_seeds,
        "seeds": seeds,
        "feature_names": list(split.feature_names),
        "config": {
            "levels": xcfg.levels,
            "alpha": xcfg.learning_rate,
            "theta": xcfg.velocity_decay,
            "initial_q": xcfg.initial_q,
            "passes": passes,
            "adapt_passes": adapt_passes,
            "sigma_frac": sigma_frac,
            "hidden": list(opts["hidden"]),
            "normalize_quantized": opts["normalize_quantized"],
            "standardize_targets": split.task == "regress",
            "batch_size": traincfg.batch_size,
            "epochs": traincfg.epochs,
            "learning_rate": traincfg.learning_rate,
            "plateau_patience": traincfg.plateau_patience,
            "plateau_rtol": traincfg.plateau_rtol,
        },
        "arms": arms,
    }
