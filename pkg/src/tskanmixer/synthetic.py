"""Seeded synthetic multivariate series for demos and end-to-end checks."""

from __future__ import annotations

import numpy as np


def seasonal_trend_series(n_steps: int = 5000, period: float = 24.0, seed: int = 0,
                          noise: float = 0.1, trend_step: float = 0.05, trend_decay: float = 0.99):
    """Three features: two phase-shifted sinusoids and a noise-driven trend.

    The trend is a mean-reverting random walk (AR(1) with coefficient
    ``trend_decay``) shared by every column, so it stays bounded over long
    series. Returns an array of shape ``[n_steps, 3]``.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n_steps, dtype=np.float64)
    trend = np.zeros(n_steps)
    steps = rng.normal(0.0, trend_step, size=n_steps)
    for i in range(1, n_steps):
        trend[i] = trend_decay * trend[i - 1] + steps[i]
    phase = 2.0 * np.pi * t / period
    out = np.stack([
        np.sin(phase) + trend,
        0.8 * np.sin(phase + np.pi / 2) + trend,
        2.0 * trend + 0.5 * np.sin(phase + np.pi),
    ], axis=1)
    return out + rng.normal(0.0, noise, size=out.shape)


def synthetic_ranges(n_steps: int, train: float = 0.7, valid: float = 0.1):
    a = int(n_steps * train)
    b = a + int(n_steps * valid)
    return {"train": (0, a), "valid": (a, b), "test": (b, n_steps)}
