"""The full training loop for the deep dimension reduction map.

Each outer epoch does three things:

1. embed the training predictors with the current representer;
2. run the particle inner loop, producing Gaussianized targets for the
   embedded sample (the targets are constants for step 3);
3. one pass of minibatch updates on the representer, minimizing

       -dcov(R(X_b), Y_b) + lam * mean ||R(X_b) - Z_b||^2

   where the first gradient comes from the distance-covariance chain
   rule and the second pulls the representation toward its transported
   particles.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .datagen import Dataset
from .dependence import dcov_u_fast, dcov_value_and_gradient
from .divergence import (
    LOG2,
    divergence_by_name,
    variational_divergence,
)
from .errors import DimensionError, NumericError
from .flow import (
    ParticleState,
    clip_velocities,
    fit_discriminator,
    step_size_at,
    velocity_field,
)

__all__ = ["TrainConfig", "DdrModel", "EpochRecord", "ddr_train", "ddr_embed",
           "objective_eval"]

log = logging.getLogger("ddr.trainer")


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    Defaults mirror the simulated-benchmark settings: match weight 1,
    batch size 64, one inner particle iteration, 500 outer epochs, the
    3.0/2.0/1.0 particle step schedule and Adam(1e-3) with weight decay
    1e-4 for both networks.
    """

    rep_dim: int = 1
    lam: float = 1.0  # weight of the particle match term
    batch_size: int = 64
    inner_loops: int = 1  # particle iterations per epoch (T1)
    outer_loops: int = 500  # training epochs (T2)
    step_schedule: object = field(
        default_factory=lambda: [(0, 150, 3.0), (150, 225, 2.0), (225, 10**9, 1.0)]
    )
    divergence: str = "kl"
    rep_hidden: tuple = (16, 8)
    disc_hidden: tuple = (16,)
    activation: nn.Activation = field(default_factory=nn.leaky_relu)
    learning_rate: float = 1e-3
    disc_learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    lr_schedule: object = None  # optional [(start_epoch, end_epoch, lr), ...]
    theta_passes: int = 1  # representer minibatch passes per epoch
    disc_epochs: int = 1  # discriminator passes per inner iteration
    disc_batch_size: int | None = None  # defaults to batch_size
    resample_reference: bool = False
    clip_velocity: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 4:
            raise ValueError("batch_size must be >= 4 (U-statistic needs 4 rows)")
        if self.rep_dim < 1:
            raise ValueError("rep_dim must be >= 1")
        if self.outer_loops < 1:
            raise ValueError("outer_loops must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    dcov_term: float
    match_term: float
    disc_loss: float


@dataclass
class DdrModel:
    """Trained representer plus the discriminator and the training trace."""

    representer: nn.MlpNetwork
    discriminator: nn.MlpNetwork
    config: TrainConfig
    training_log: list[EpochRecord] = field(default_factory=list)


def _as_xy(data):
    if isinstance(data, Dataset):
        return data.x, data.y
    x, y = data
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    return x, y


def ddr_train(data, config: TrainConfig) -> DdrModel:
    """Train a representer on ``data`` (a Dataset or an (x, y) pair).

    Deterministic for a fixed config: the master seed drives network
    initialization, the reference Gaussian sample, and every shuffle.
    Raises :class:`NumericError` with the epoch/batch index if the loss
    leaves the finite range.
    """
    x, y = _as_xy(data)
    n, p = x.shape
    if n < config.batch_size:
        raise DimensionError(
            f"n={n} is below the batch size {config.batch_size}"
        )
    rng = np.random.Generator(np.random.PCG64(config.seed))
    rep = nn.init_network(
        [p, *config.rep_hidden, config.rep_dim],
        config.activation,
        seed=int(rng.integers(2**63)),
    )
    disc = nn.init_network(
        [config.rep_dim, *config.disc_hidden, 1],
        config.activation,
        seed=int(rng.integers(2**63)),
    )
    opt_rep = nn.Adam(config.learning_rate, weight_decay=config.weight_decay)
    opt_disc = nn.Adam(config.disc_learning_rate, weight_decay=config.weight_decay)
    spec = divergence_by_name(config.divergence)
    w = rng.standard_normal((n, config.rep_dim))

    model = DdrModel(rep, disc, config)
    for epoch in range(config.outer_loops):
        if config.lr_schedule is not None:
            opt_rep.learning_rate = step_size_at(config.lr_schedule, epoch)
        step = step_size_at(config.step_schedule, epoch)

        # Inner loop: transport the current embedding toward N(0, I).
        z = nn.forward(rep, x)
        disc_loss = float("nan")
        for _ in range(config.inner_loops):
            if config.resample_reference:
                w = rng.standard_normal((n, config.rep_dim))
            state = ParticleState(z, w, step)
            disc_loss = fit_discriminator(
                disc,
                state,
                opt_disc,
                config.disc_epochs,
                config.disc_batch_size or config.batch_size,
                rng,
            )
            v = clip_velocities(velocity_field(spec, disc, z), config.clip_velocity)
            z = z + step * v
        targets = z

        # Representer passes over shuffled minibatches; targets are fixed.
        dcov_sum = match_sum = 0.0
        batches = 0
        for _ in range(config.theta_passes):
            perm = rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = perm[start : start + config.batch_size]
                if len(idx) < 4:
                    warnings.warn(f"dropped a batch with {len(idx)} < 4 rows")
                    continue
                out = nn.forward(rep, x[idx])
                value, grad_dcov = dcov_value_and_gradient(out, y[idx])
                diff = out - targets[idx]
                match = float((diff * diff).sum(axis=1).mean())
                loss = -value + config.lam * match
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite training loss at epoch {epoch}, batch {batches}"
                    )
                grad_out = -grad_dcov + (2.0 * config.lam / len(idx)) * diff
                grads, _ = nn.backward(rep, x[idx], grad_out)
                opt_rep.apply(rep, grads)
                dcov_sum += -value
                match_sum += match
                batches += 1
        model.training_log.append(
            EpochRecord(epoch, dcov_sum / batches, match_sum / batches, disc_loss)
        )
    return model


def ddr_embed(model: DdrModel, x: np.ndarray) -> np.ndarray:
    """Embed rows of ``x`` with the trained representer (pure function)."""
    return nn.forward(model.representer, x)


def objective_eval(model: DdrModel, x, y, w):
    """Diagnostic evaluation of the two objective terms on given data.

    Returns ``(dcov_term, divergence_term)``.  The first is
    -dcov(R(x), y).  The second is the variational (dual) divergence
    estimate on (R(x), w): the current discriminator estimates
    -log r(z), so the dual witness is f'(r_hat) with
    r_hat = exp(-discriminator) -- at equal laws the estimate sits at
    the dual optimum 0 instead of the logistic loss's offset.  Witness
    values are clamped into the conjugate's domain when necessary
    (relevant for JS at r_hat -> inf), with a logged warning.
    """
    x, y = _as_xy((x, y))
    z = ddr_embed(model, x)
    dcov_term = -dcov_u_fast(z, y)
    spec = divergence_by_name(model.config.divergence)
    d_on_z = nn.forward(model.discriminator, z).ravel()
    d_on_w = nn.forward(model.discriminator, np.asarray(w, dtype=np.float64)).ravel()
    witness_z = spec.f_prime(np.exp(-np.clip(d_on_z, -700.0, 700.0)))
    witness_w = spec.f_prime(np.exp(-np.clip(d_on_w, -700.0, 700.0)))
    lo, hi = spec.f_star_domain
    cap = hi - 1e-6 if np.isfinite(hi) else np.inf
    if max(witness_z.max(initial=-np.inf), witness_w.max(initial=-np.inf)) > cap:
        log.warning("clamped dual witness values into the conjugate domain")
    witness_z = np.clip(witness_z, lo, cap)
    witness_w = np.clip(witness_w, lo, cap)
    divergence_term = variational_divergence(spec, witness_z, witness_w)
    return dcov_term, divergence_term
