"""Option portfolios and pricing kernels shared by the Blackscholes and
Binomial Options benchmarks."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

# columns of a portfolio matrix
SPOT, STRIKE, RATE, VOL, EXPIRY, IS_CALL = range(6)
N_FIELDS = 6


def make_portfolio(n: int, n_unique: int = 16, jitter: float = 0.005, seed: int = 0) -> np.ndarray:
    """``n`` options built from ``n_unique`` base contracts.

    Option ``i`` is base contract ``i % n_unique`` with its spot perturbed by a
    relative ``jitter``.  Standard benchmark inputs are built the same way,
    by replicating a small set of contracts to reach the portfolio size.
    """
    rng = np.random.default_rng(seed)
    base = np.empty((n_unique, N_FIELDS))
    base[:, SPOT] = rng.uniform(60.0, 140.0, n_unique)
    base[:, STRIKE] = base[:, SPOT] * rng.uniform(0.9, 1.1, n_unique)
    base[:, RATE] = rng.uniform(0.01, 0.06, n_unique)
    base[:, VOL] = rng.uniform(0.15, 0.45, n_unique)
    base[:, EXPIRY] = rng.uniform(0.25, 2.0, n_unique)
    base[:, IS_CALL] = rng.integers(0, 2, n_unique)
    opts = base[np.arange(n) % n_unique].copy()
    if jitter:
        opts[:, SPOT] *= 1.0 + jitter * rng.standard_normal(n)
    return opts


def _check(opts: np.ndarray) -> None:
    if not np.all(np.isfinite(opts)):
        raise ValueError("option parameters must be finite")
    if np.any(opts[:, [SPOT, STRIKE, VOL, EXPIRY]] <= 0):
        raise ValueError("spot, strike, volatility and expiry must be positive")


def black_scholes(opts: np.ndarray) -> np.ndarray:
    """Closed-form European prices for every row of ``opts``."""
    opts = np.atleast_2d(np.asarray(opts, dtype=float))
    _check(opts)
    s, k, r, v, t = (opts[:, c] for c in (SPOT, STRIKE, RATE, VOL, EXPIRY))
    sqrt_t = np.sqrt(t)
    d1 = (np.log(s / k) + (r + 0.5 * v * v) * t) / (v * sqrt_t)
    d2 = d1 - v * sqrt_t
    disc = k * np.exp(-r * t)
    call = s * ndtr(d1) - disc * ndtr(d2)
    put = disc * ndtr(-d2) - s * ndtr(-d1)
    return np.where(opts[:, IS_CALL] > 0.5, call, put)


def binomial_price(opts: np.ndarray, n_steps: int, american: bool = True) -> np.ndarray:
    """Cox-Ross-Rubinstein lattice prices, backward induction over ``n_steps``."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    opts = np.atleast_2d(np.asarray(opts, dtype=float))
    _check(opts)
    s, k, r, v, t = (opts[:, c][:, None] for c in (SPOT, STRIKE, RATE, VOL, EXPIRY))
    sign = np.where(opts[:, IS_CALL] > 0.5, 1.0, -1.0)[:, None]
    dt = t / n_steps
    u = np.exp(v * np.sqrt(dt))
    d = 1.0 / u
    growth = np.exp(r * dt)
    p = (growth - d) / (u - d)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("lattice parameters give a risk-neutral probability outside (0, 1)")
    disc = 1.0 / growth
    j = np.arange(n_steps + 1)[None, :]
    spot = s * u ** (2 * j - n_steps)
    value = np.maximum(sign * (spot - k), 0.0)
    for step in range(n_steps - 1, -1, -1):
        value = disc * (p * value[:, 1:step + 2] + (1 - p) * value[:, :step + 1])
        if american:
            jj = np.arange(step + 1)[None, :]
            exercise = np.maximum(sign * (s * u ** (2 * jj - step) - k), 0.0)
            value = np.maximum(value, exercise)
    return value[:, 0]
