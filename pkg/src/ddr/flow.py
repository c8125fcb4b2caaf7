"""Particle method that pushes an embedded sample toward N(0, I_d).

Each iteration alternates two moves:

1. fit the discriminator on (particles, reference Gaussian sample) with
   the logistic density-ratio loss, so that D ~ -log r where r is the
   density ratio of the particle law over the standard Gaussian;
2. move every particle along the residual map T(z) = z + s * v(z) with
   velocity v(z) = -grad f'(r(z)).  Through r(z) = exp(-D(z)) this is
   f''(r) * r * grad D(z), which reduces to grad D(z) for KL.

The discriminator is warm-started across iterations; one short fit per
step is enough to track the slowly moving particle distribution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .divergence import FDivergenceSpec, divergence_by_name, logistic_ratio_loss
from .errors import DimensionError, NumericError

__all__ = [
    "ParticleState",
    "FlowConfig",
    "fit_discriminator",
    "velocity_field",
    "clip_velocities",
    "flow_step",
    "step_size_at",
    "gaussianize",
]

log = logging.getLogger("ddr.flow")


@dataclass
class ParticleState:
    """Current particles, the reference Gaussian sample and the step size."""

    z: np.ndarray  # (n, d) particles
    w: np.ndarray  # (n, d) reference sample
    step_size: float
    inner_epochs: int = 1

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.z.shape != self.w.shape:
            raise DimensionError(
                f"particles {self.z.shape} and reference {self.w.shape} differ"
            )
        if not self.step_size > 0.0:
            raise ValueError(f"step size must be > 0, got {self.step_size}")


def fit_discriminator(
    disc: nn.MlpNetwork,
    state: ParticleState,
    opt,
    epochs: int,
    batch_size: int = 64,
    rng: np.random.Generator | None = None,
) -> float:
    """Train ``disc`` on the logistic ratio loss over (z, w) minibatches.

    Mutates ``disc`` and ``opt`` in place; returns the mean loss of the
    last epoch (``nan`` when ``epochs == 0``).  Deterministic for a given
    generator state.
    """
    if disc.input_dim != state.z.shape[1] or disc.output_dim != 1:
        raise DimensionError(
            f"discriminator maps {disc.input_dim}->{disc.output_dim}, "
            f"needs {state.z.shape[1]}->1"
        )
    if rng is None:
        rng = np.random.default_rng(0)
    n = state.z.shape[0]
    last = float("nan")
    for _ in range(epochs):
        perm_z = rng.permutation(n)
        perm_w = rng.permutation(n)
        total = 0.0
        count = 0
        for start in range(0, n, batch_size):
            bz = state.z[perm_z[start : start + batch_size]]
            bw = state.w[perm_w[start : start + batch_size]]
            dz = nn.forward(disc, bz)
            dw = nn.forward(disc, bw)
            loss, gz, gw = logistic_ratio_loss(dz.ravel(), dw.ravel())
            if not np.isfinite(loss):
                raise NumericError(
                    f"non-finite discriminator loss at step {opt.step_count}"
                )
            grads_z, _ = nn.backward(disc, bz, gz[:, None])
            grads_w, _ = nn.backward(disc, bw, gw[:, None])
            grads = [
                (gwt + gzt, gbw + gbz)
                for (gzt, gbz), (gwt, gbw) in zip(grads_z, grads_w)
            ]
            opt.apply(disc, grads)
            total += loss * len(bz)
            count += len(bz)
        last = total / count
    return last


def velocity_field(
    spec: FDivergenceSpec, disc: nn.MlpNetwork, z: np.ndarray
) -> np.ndarray:
    """v(z) = -grad f'(r(z)) with r(z) = exp(-D(z)).

    For KL this is exactly grad D(z); other divergences rescale the
    input gradient by f''(r) * r.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    _, grad_d = nn.backward(disc, z, np.ones((n, 1)))
    if spec.kind == "kl":
        return grad_d
    d_vals = nn.forward(disc, z)
    ratio = np.exp(-np.clip(d_vals, -700.0, 700.0))
    return spec.f_double_prime(ratio) * ratio * grad_d


def clip_velocities(v: np.ndarray, max_norm: float) -> np.ndarray:
    """Rescale rows of ``v`` whose Euclidean norm exceeds ``max_norm``."""
    norms = np.sqrt((v * v).sum(axis=1, keepdims=True))
    over = norms > max_norm
    if over.any():
        log.info("clipped %d particle velocities above %g", int(over.sum()), max_norm)
        v = np.where(over, v * (max_norm / norms), v)
    return v


def flow_step(state: ParticleState, v: np.ndarray) -> ParticleState:
    """Apply the residual map: z <- z + s * v; the reference is unchanged."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != state.z.shape:
        raise DimensionError(f"velocity shape {v.shape} != particles {state.z.shape}")
    z_new = state.z + state.step_size * v
    if not np.isfinite(z_new).all():
        raise NumericError("non-finite particles after flow step")
    return ParticleState(z_new, state.w, state.step_size, state.inner_epochs)


def step_size_at(schedule, t: int) -> float:
    """Resolve a step size from a scalar or a [(start, end, s), ...] table."""
    if np.isscalar(schedule):
        return float(schedule)
    for start, end, s in schedule:
        if start <= t < end:
            return float(s)
    return float(schedule[-1][2])


@dataclass
class FlowConfig:
    """Everything a standalone Gaussianization run needs."""

    steps: int = 200
    step_schedule: object = 0.5  # scalar or [(start_epoch, end_epoch, s), ...]
    disc_hidden: tuple = (32, 32)
    disc_activation: nn.Activation = field(default_factory=nn.leaky_relu)
    disc_epochs: int = 2
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    divergence: str = "kl"
    resample_reference: bool = False
    clip_velocity: float = 10.0
    snapshot_every: int = 0
    snapshot_path: str | None = None


def _write_snapshot(path: str, step: int, z: np.ndarray) -> None:
    mode = "w" if step == 0 else "a"
    with open(path, mode, encoding="utf-8") as fh:
        if step == 0:
            cols = ",".join(f"z{j}" for j in range(z.shape[1]))
            fh.write(f"step,{cols}\n")
        for row in z:
            fh.write(f"{step}," + ",".join(repr(float(v)) for v in row) + "\n")


def gaussianize(z0, config: FlowConfig, seed: int) -> np.ndarray:
    """Run the full particle loop and return the transported particles.

    Order of seeded draws: reference sample first, then discriminator
    init, then per-step shuffles, so runs are bit-reproducible.
    """
    z = np.asarray(z0, dtype=np.float64).copy()
    if z.ndim != 2:
        raise DimensionError(f"expected (n, d) particles, got shape {z.shape}")
    n, d = z.shape
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.standard_normal((n, d))
    disc = nn.init_network(
        [d, *config.disc_hidden, 1],
        config.disc_activation,
        seed=int(rng.integers(2**63)),
    )
    opt = nn.Adam(config.learning_rate, weight_decay=config.weight_decay)
    spec = divergence_by_name(config.divergence)
    if config.snapshot_every and config.snapshot_path:
        _write_snapshot(config.snapshot_path, 0, z)
    for t in range(config.steps):
        if config.resample_reference:
            w = rng.standard_normal((n, d))
        state = ParticleState(z, w, step_size_at(config.step_schedule, t))
        fit_discriminator(
            disc, state, opt, config.disc_epochs, config.batch_size, rng
        )
        v = clip_velocities(velocity_field(spec, disc, z), config.clip_velocity)
        z = flow_step(state, v).z
        if (
            config.snapshot_every
            and config.snapshot_path
            and (t + 1) % config.snapshot_every == 0
        ):
            _write_snapshot(config.snapshot_path, t + 1, z)
    return z
