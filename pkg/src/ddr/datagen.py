"""Seeded dataset generators, CSV ingestion and fold plans.

All randomness flows through numpy's PCG64 generator seeded explicitly,
so every dataset is reproducible from (generator name, parameters,
seed); that triple is recorded in the dataset's provenance.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError

__all__ = [
    "Dataset",
    "FoldPlan",
    "Standardization",
    "gen_regression1",
    "gen_regression2",
    "gen_classification",
    "load_csv",
    "save_csv",
    "standardize",
    "kfold_split",
]


@dataclass
class Dataset:
    """Predictors, responses and where they came from."""

    x: np.ndarray  # (n, p)
    y: np.ndarray  # (n, q); class labels stored as reals for classification
    task: str  # "regression" | "classification"
    feature_names: list[str] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.ndim == 1:
            self.y = self.y[:, None]
        if self.x.shape[0] != self.y.shape[0]:
            raise DimensionError(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]}"
            )
        if self.task not in ("regression", "classification"):
            raise ValueError(f"unknown task {self.task!r}")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def subset(self, idx) -> "Dataset":
        return Dataset(
            self.x[idx],
            self.y[idx],
            self.task,
            self.feature_names,
            dict(self.provenance, subset=len(np.atleast_1d(idx))),
        )


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_regression1(model: str, n: int, sigma: float, seed: int) -> Dataset:
    """First simulated regression family (20 predictors, scalar response).

    Model "a":  y = x1 / (0.5 + (x2 + 1.5)^2) + (1 + x2)^2 + sigma * eps,
                x ~ N(0, I_20).
    Model "b":  y = sin^2(pi * x1 + 1) + sigma * eps,
                x ~ Uniform[0, 1]^20.

    eps is standard normal; only the first two coordinates carry signal.
    """
    if model not in ("a", "b"):
        raise ValueError(f"model must be 'a' or 'b', got {model!r}")
    if n < 1 or sigma < 0:
        raise ValueError("need n >= 1 and sigma >= 0")
    rng = _rng(seed)
    p = 20
    if model == "a":
        x = rng.standard_normal((n, p))
        signal = x[:, 0] / (0.5 + (x[:, 1] + 1.5) ** 2) + (1.0 + x[:, 1]) ** 2
    else:
        x = rng.uniform(0.0, 1.0, size=(n, p))
        signal = np.sin(np.pi * x[:, 0] + 1.0) ** 2
    y = signal + sigma * rng.standard_normal(n)
    return Dataset(
        x,
        y,
        "regression",
        provenance={
            "generator": "regression1",
            "model": model,
            "n": n,
            "sigma": sigma,
            "seed": seed,
        },
    )


def regression1_signal(model: str, x: np.ndarray) -> np.ndarray:
    """Noise-free regression function of :func:`gen_regression1`."""
    if model == "a":
        return x[:, 0] / (0.5 + (x[:, 1] + 1.5) ** 2) + (1.0 + x[:, 1]) ** 2
    return np.sin(np.pi * x[:, 0] + 1.0) ** 2


def gen_regression2(model: str, scenario: str, n: int, seed: int) -> Dataset:
    """Second simulated regression family (10 predictors, noise sd 0.5).

    Models:
        "a"  y = (x1 + x2)^2 + (1 + exp(x1))^2 + eps
        "b"  y = sin(pi (x1 + x2) / 10) + x1^2 + eps
        "c"  y = sqrt(x1^2 + x2^2) * log sqrt(x1^2 + x2^2) + eps
             (the deterministic part is 0 at the origin, its limit value)

    Predictor scenarios:
        "i"    x ~ N(0, I_10)
        "ii"   equal-weight mixture of N(-2*1, I), Uniform[-1, 1]^10,
               N(+2*1, I)
        "iii"  x ~ N(0, 0.3 I + 0.7 * 1 1^T)
    """
    if model not in ("a", "b", "c"):
        raise ValueError(f"model must be 'a', 'b' or 'c', got {model!r}")
    if scenario not in ("i", "ii", "iii"):
        raise ValueError(f"scenario must be 'i', 'ii' or 'iii', got {scenario!r}")
    rng = _rng(seed)
    p = 10
    if scenario == "i":
        x = rng.standard_normal((n, p))
    elif scenario == "ii":
        comp = rng.integers(0, 3, size=n)
        x = np.empty((n, p))
        for c in range(3):
            m = comp == c
            k = int(m.sum())
            if c == 0:
                x[m] = rng.standard_normal((k, p)) - 2.0
            elif c == 1:
                x[m] = rng.uniform(-1.0, 1.0, size=(k, p))
            else:
                x[m] = rng.standard_normal((k, p)) + 2.0
    else:
        shared = rng.standard_normal(n)
        x = np.sqrt(0.3) * rng.standard_normal((n, p)) + np.sqrt(0.7) * shared[:, None]
    signal = regression2_signal(model, x)
    y = signal + 0.5 * rng.standard_normal(n)
    return Dataset(
        x,
        y,
        "regression",
        provenance={
            "generator": "regression2",
            "model": model,
            "scenario": scenario,
            "n": n,
            "seed": seed,
        },
    )


def regression2_signal(model: str, x: np.ndarray) -> np.ndarray:
    """Noise-free regression function of :func:`gen_regression2`."""
    x1, x2 = x[:, 0], x[:, 1]
    if model == "a":
        return (x1 + x2) ** 2 + (1.0 + np.exp(x1)) ** 2
    if model == "b":
        return np.sin(np.pi * (x1 + x2) / 10.0) + x1**2
    radius = np.sqrt(x1**2 + x2**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(radius > 0.0, radius * np.log(radius), 0.0)
    return out


# Geometry of the classification toys; the paper-style figures fix the
# topology but not the numbers, so these are pinned here and echoed in
# the provenance.
CIRCLE_RADII = (1.0, 2.0)
MOON_OFFSET = 0.5
TOY_NOISE_SD = 0.05
OCTAHEDRON_SCALE = 3.0
GAUSS3D_NOISE_SD = 0.5


def _circles(rng, n_per_class, noise_sd):
    pts, labels = [], []
    for c, radius in enumerate(CIRCLE_RADII):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n_per_class)
        base = radius * np.column_stack([np.cos(theta), np.sin(theta)])
        pts.append(base + noise_sd * rng.standard_normal((n_per_class, 2)))
        labels.append(np.full(n_per_class, c))
    return np.vstack(pts), np.concatenate(labels)


def _moons(rng, n_per_class, noise_sd):
    t0 = rng.uniform(0.0, np.pi, size=n_per_class)
    t1 = rng.uniform(0.0, np.pi, size=n_per_class)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), MOON_OFFSET - np.sin(t1)])
    pts = np.vstack([upper, lower]) + noise_sd * rng.standard_normal(
        (2 * n_per_class, 2)
    )
    labels = np.concatenate([np.zeros(n_per_class), np.ones(n_per_class)])
    return pts, labels


def _gauss3d6(rng, n_per_class, noise_sd):
    means = OCTAHEDRON_SCALE * np.array(
        [
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [0, 0, 1],
            [0, 0, -1],
        ],
        dtype=np.float64,
    )
    pts, labels = [], []
    for c, mu in enumerate(means):
        pts.append(mu + noise_sd * rng.standard_normal((n_per_class, 3)))
        labels.append(np.full(n_per_class, c))
    return np.vstack(pts), np.concatenate(labels)


_TOYS = {
    "circles": (_circles, 2, TOY_NOISE_SD),
    "moons": (_moons, 2, TOY_NOISE_SD),
    "gauss3d6": (_gauss3d6, 3, GAUSS3D_NOISE_SD),
}


def toy_points(shape: str, n_per_class: int, seed: int, noise_sd: float | None = None):
    """The raw 2-D/3-D class toy before the random projection.

    Draws exactly the points :func:`gen_classification` embeds for the
    same (shape, n_per_class, seed, noise_sd), which makes the geometry
    directly inspectable.
    """
    try:
        make, _, default_noise = _TOYS[shape]
    except KeyError:
        raise ValueError(
            f"unknown shape {shape!r}; expected one of {sorted(_TOYS)}"
        ) from None
    if noise_sd is None:
        noise_sd = default_noise
    return make(_rng(seed), n_per_class, noise_sd)


def gen_classification(
    shape: str,
    n_per_class: int,
    ambient_dim: int,
    seed: int,
    noise_sd: float | None = None,
) -> Dataset:
    """Low-dimensional class toy embedded by a random linear projection.

    The 2-D/3-D toy is generated first, then right-multiplied by a
    seeded matrix with i.i.d. Uniform[0, 1] entries mapping it into
    ``ambient_dim`` dimensions.  The projection is checked to have full
    intrinsic rank (smallest singular value >= 1e-8).
    """
    try:
        make, intrinsic, default_noise = _TOYS[shape]
    except KeyError:
        raise ValueError(
            f"unknown shape {shape!r}; expected one of {sorted(_TOYS)}"
        ) from None
    if ambient_dim < intrinsic:
        raise DimensionError(
            f"ambient_dim {ambient_dim} is below the intrinsic dim {intrinsic}"
        )
    if noise_sd is None:
        noise_sd = default_noise
    rng = _rng(seed)
    base, labels = make(rng, n_per_class, noise_sd)
    projection = rng.uniform(0.0, 1.0, size=(intrinsic, ambient_dim))
    smin = np.linalg.svd(projection, compute_uv=False).min()
    if smin < 1e-8:
        raise ValueError(f"degenerate projection (smallest singular value {smin:g})")
    x = base @ projection
    order = rng.permutation(x.shape[0])
    return Dataset(
        x[order],
        labels[order],
        "classification",
        provenance={
            "generator": "classification",
            "shape": shape,
            "n_per_class": n_per_class,
            "ambient_dim": ambient_dim,
            "seed": seed,
            "geometry": {
                "circle_radii": CIRCLE_RADII,
                "moon_offset": MOON_OFFSET,
                "noise_sd": noise_sd,
                "octahedron_scale": OCTAHEDRON_SCALE,
            },
        },
    )


def load_csv(path: str, target_columns, has_header: bool) -> Dataset:
    """Read a numeric CSV; ``target_columns`` become y, the rest x.

    Target columns are indices, or names when ``has_header`` is true.
    Ragged rows and non-numeric cells raise :class:`ParseError` listing
    the first ten offending cells.
    """
    if not os.path.exists(path):
        raise ParseError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError(f"{path}: empty file")
    names = None
    if has_header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ParseError(f"{path}: header but no data rows")
    width = len(rows[0])
    errors = []
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            errors.append(f"line {i + 2 if has_header else i + 1}: "
                          f"{len(row)} cells, expected {width}")
            if len(errors) >= 10:
                break
            continue
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                errors.append(
                    f"line {i + 2 if has_header else i + 1}, column {j + 1}: "
                    f"not numeric: {cell.strip()!r}"
                )
                if len(errors) >= 10:
                    break
        if len(errors) >= 10:
            break
    if errors:
        raise ParseError(f"{path}: " + "; ".join(errors[:10]))
    target_idx = []
    for t in target_columns:
        if isinstance(t, str):
            if names is None or t not in names:
                raise ParseError(f"{path}: no column named {t!r}")
            target_idx.append(names.index(t))
        else:
            target_idx.append(int(t) if t >= 0 else width + int(t))
    keep = [j for j in range(width) if j not in target_idx]
    feature_names = [names[j] for j in keep] if names else None
    return Dataset(
        data[:, keep],
        data[:, target_idx],
        "regression",
        feature_names=feature_names,
        provenance={"path": os.path.abspath(path)},
    )


def save_csv(dataset: Dataset, path: str, header: bool = True) -> None:
    """Write x columns then y columns; floats printed exactly (repr).

    A JSON sidecar ``<path>.provenance.json`` records how the dataset
    was generated.
    """
    n, p = dataset.x.shape
    q = dataset.y.shape[1]
    feat = dataset.feature_names or [f"x{j + 1}" for j in range(p)]
    cols = feat + [f"y{j + 1}" for j in range(q)]
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(",".join(cols) + "\n")
        for i in range(n):
            vals = [repr(float(v)) for v in dataset.x[i]]
            vals += [repr(float(v)) for v in dataset.y[i]]
            fh.write(",".join(vals) + "\n")
    os.replace(tmp, path)
    sidecar = dict(dataset.provenance, task=dataset.task, rows=n, x_cols=p, y_cols=q)
    with open(f"{path}.provenance.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, default=str)


@dataclass
class Standardization:
    """Per-column centering/scaling fitted on one sample, reusable on another."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    standardize_y: bool

    def apply(self, dataset: Dataset) -> Dataset:
        x = (dataset.x - self.x_mean) / self.x_scale
        y = dataset.y
        if self.standardize_y:
            y = (y - self.y_mean) / self.y_scale
        return Dataset(
            x, y, dataset.task, dataset.feature_names,
            dict(dataset.provenance, standardized=True),
        )

    def restore_y(self, y_std: np.ndarray) -> np.ndarray:
        if not self.standardize_y:
            return y_std
        return y_std * self.y_scale + self.y_mean


def _column_stats(a: np.ndarray):
    mean = a.mean(axis=0)
    sd = a.std(axis=0, ddof=0)
    flat = sd == 0.0
    if flat.any():
        warnings.warn(
            f"{int(flat.sum())} zero-variance column(s) left centered with scale 1"
        )
    return mean, np.where(flat, 1.0, sd)


def standardize(dataset: Dataset) -> tuple[Dataset, Standardization]:
    """Zero-mean/unit-variance x (and y for regression tasks).

    Returns the transformed dataset and the fitted transform, so a test
    fold can reuse the training fold's statistics (no leakage).
    """
    if dataset.n < 2:
        raise ValueError("standardize needs at least 2 rows")
    x_mean, x_scale = _column_stats(dataset.x)
    standardize_y = dataset.task == "regression"
    if standardize_y:
        y_mean, y_scale = _column_stats(dataset.y)
    else:
        y_mean = np.zeros(dataset.y.shape[1])
        y_scale = np.ones(dataset.y.shape[1])
    transform = Standardization(x_mean, x_scale, y_mean, y_scale, standardize_y)
    return transform.apply(dataset), transform


@dataclass(frozen=True)
class FoldPlan:
    """Seeded k-fold assignment with fold sizes differing by at most 1."""

    n: int
    k: int
    assignment: np.ndarray  # (n,) fold index per row
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def kfold_split(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffle rows with the given seed, then partition contiguously."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of rows n={n}")
    rng = _rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    start = 0
    for fold, size in enumerate(sizes):
        assignment[perm[start : start + size]] = fold
        start += size
    return FoldPlan(n=n, k=k, assignment=assignment, seed=seed)
