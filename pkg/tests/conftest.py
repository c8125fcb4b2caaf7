"""Shared helpers for the test suite."""

import numpy as np


def central_difference(func, x, h=1e-5):
    """Elementwise central finite differences of a scalar function.

    ``func`` maps an array like ``x`` to a float; the returned array has
    the shape of ``x``.  This is the independent oracle against which
    every analytic gradient in the package is checked.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.ravel()
    for i in range(x.size):
        bumped = x.copy().ravel()
        bumped[i] += h
        up = func(bumped.reshape(x.shape))
        bumped[i] -= 2 * h
        down = func(bumped.reshape(x.shape))
        flat[i] = (up - down) / (2 * h)
    return grad


def assert_close_rel(actual, expected, rtol, context=""):
    """|actual - expected| <= rtol * (1 + |expected|), elementwise."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    err = np.abs(actual - expected)
    bound = rtol * (1.0 + np.abs(expected))
    worst = (err - bound).max()
    assert (err <= bound).all(), (
        f"{context} exceeded tolerance {rtol}: worst overshoot {worst:.3g}, "
        f"max abs err {err.max():.3g}"
    )
