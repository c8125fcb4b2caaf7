"""f-divergences with Fenchel duals and the logistic density-ratio loss.

Three divergences are supported, each as a bundle of the generator f,
its first two derivatives and the convex conjugate f*:

    kl    f(x) = x log x            f*(t) = exp(t - 1)        t in R
    js    f(x) = x log x
              - (x+1) log((x+1)/2)  f*(t) = -log(2 - e^t)     t < log 2
    chi2  f(x) = (x - 1)^2          f*(t) = t + t^2/4         t >= -2

The variational estimate of the divergence plugs discriminator values
into  mean D(Z) - mean f*(D(W)).  The logistic ratio loss is the
binary-classification objective whose population minimizer is
-log r(z), so the estimated density ratio is exp(-D(z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "FDivergenceSpec",
    "divergence_by_name",
    "DIVERGENCE_NAMES",
    "fdiv_eval",
    "variational_divergence",
    "logistic_ratio_loss",
    "softplus",
    "sigmoid",
]

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class FDivergenceSpec:
    """One divergence: generator, derivatives, conjugate and its domain."""

    kind: str
    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]
    f_double_prime: Callable[[np.ndarray], np.ndarray]
    f_star: Callable[[np.ndarray], np.ndarray]
    f_star_domain: tuple[float, float]  # closed lower, open upper

    def check_ratio_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if np.any(x <= 0.0):
            raise DomainError(f"{self.kind}: f and f' need arguments > 0")
        return x

    def check_star_domain(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        lo, hi = self.f_star_domain
        if np.any(t < lo) or np.any(t >= hi):
            raise DomainError(
                f"{self.kind}: f* argument outside [{lo}, {hi}) "
                f"(range [{t.min()}, {t.max()}])"
            )
        return t


def _kl() -> FDivergenceSpec:
    return FDivergenceSpec(
        kind="kl",
        f=lambda x: x * np.log(x),
        f_prime=lambda x: np.log(x) + 1.0,
        f_double_prime=lambda x: 1.0 / x,
        f_star=lambda t: np.exp(t - 1.0),
        f_star_domain=(-np.inf, np.inf),
    )


def _js() -> FDivergenceSpec:
    return FDivergenceSpec(
        kind="js",
        f=lambda x: x * np.log(x) - (x + 1.0) * np.log((x + 1.0) / 2.0),
        f_prime=lambda x: np.log(2.0 * x / (x + 1.0)),
        f_double_prime=lambda x: 1.0 / (x * (x + 1.0)),
        f_star=lambda t: -np.log(2.0 - np.exp(t)),
        f_star_domain=(-np.inf, LOG2),
    )


def _chi2() -> FDivergenceSpec:
    # The printed conjugate t + t^2/4 is the supremum over x >= 0 only
    # for t >= -2 (below that the true conjugate is the constant -1),
    # hence the domain restriction.
    return FDivergenceSpec(
        kind="chi2",
        f=lambda x: (x - 1.0) ** 2,
        f_prime=lambda x: 2.0 * (x - 1.0),
        f_double_prime=lambda x: 2.0 * np.ones_like(np.asarray(x, dtype=np.float64)),
        f_star=lambda t: t + t * t / 4.0,
        f_star_domain=(-2.0, np.inf),
    )


_SPECS = {"kl": _kl(), "js": _js(), "chi2": _chi2()}
DIVERGENCE_NAMES = tuple(sorted(_SPECS))


def divergence_by_name(name: str) -> FDivergenceSpec:
    try:
        return _SPECS[name.lower()]
    except KeyError:
        raise DomainError(
            f"unknown divergence {name!r}; expected one of {DIVERGENCE_NAMES}"
        ) from None


def fdiv_eval(spec: FDivergenceSpec, which: str, x):
    """Evaluate f, f_prime or f_star of ``spec`` with domain checks."""
    if which == "f":
        return spec.f(spec.check_ratio_domain(x))
    if which == "f_prime":
        return spec.f_prime(spec.check_ratio_domain(x))
    if which == "f_star":
        return spec.f_star(spec.check_star_domain(x))
    raise ValueError(f"which must be 'f', 'f_prime' or 'f_star', got {which!r}")


def variational_divergence(spec: FDivergenceSpec, d_on_z, d_on_w) -> float:
    """Plug-in dual objective  mean D(Z) - mean f*(D(W)).

    The caller supplies the discriminator evaluations; maximization over
    the discriminator happens in the trainer, not here.
    """
    d_on_z = np.asarray(d_on_z, dtype=np.float64).ravel()
    d_on_w = np.asarray(d_on_w, dtype=np.float64).ravel()
    if d_on_z.shape != d_on_w.shape:
        raise DimensionError(
            f"sample sizes differ: {d_on_z.shape[0]} vs {d_on_w.shape[0]}"
        )
    spec.check_star_domain(d_on_z)
    w = spec.check_star_domain(d_on_w)
    return float(d_on_z.mean() - spec.f_star(w).mean())


def softplus(t: np.ndarray) -> np.ndarray:
    """log(1 + e^t) via the stable branch max(t, 0) + log1p(e^-|t|)."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def sigmoid(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_ratio_loss(d_on_z, d_on_w):
    """Density-ratio logistic loss and its gradients in the D values.

    loss = mean[ log(1 + e^{D(Z_i)}) + log(1 + e^{-D(W_i)}) ]

    Returns ``(loss, grad_on_z, grad_on_w)`` where the gradients are
    sigma(D(Z_i))/n and -sigma(-D(W_i))/n.  Stable for |D| up to ~700.
    """
    d_on_z = np.asarray(d_on_z, dtype=np.float64).ravel()
    d_on_w = np.asarray(d_on_w, dtype=np.float64).ravel()
    if d_on_z.shape != d_on_w.shape:
        raise DimensionError(
            f"sample sizes differ: {d_on_z.shape[0]} vs {d_on_w.shape[0]}"
        )
    n = d_on_z.shape[0]
    loss = float(softplus(d_on_z).mean() + softplus(-d_on_w).mean())
    grad_z = sigmoid(d_on_z) / n
    grad_w = -sigmoid(-d_on_w) / n
    return loss, grad_z, grad_w
