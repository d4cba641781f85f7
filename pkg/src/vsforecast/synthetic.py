"""Synthetic series generators for benchmarks and tests.

``latent_factor_series`` mixes smooth periodic latent factors whose
periods divide a common cycle, so the joint factor state recurs within a
modest training span and retrieval has genuine near-neighbors to find.
``clustered_factor_series`` builds blocks of variables around a directed
ring of mean-reverting factors for the correlated-failure experiments.
"""

from __future__ import annotations

import csv

import numpy as np

from .dataset import RawSeries


def _wave(theta: np.ndarray, shape: str) -> np.ndarray:
    if shape == "sin":
        return np.sin(theta)
    if shape == "triangle":
        # unit-amplitude triangle wave with the same period as sin
        return 2.0 / np.pi * np.arcsin(np.sin(theta))
    raise ValueError(f"unknown wave shape {shape!r}")


def latent_factor_series(n_steps: int, n_vars: int = 40, n_factors: int = 5,
                         periods: tuple[int, ...] = (30, 48, 80, 144, 720),
                         noise_range: tuple[float, float] = (0.05, 0.4),
                         garbage_frac: float = 0.3,
                         garbage_noise: float = 1.2,
                         wave: str = "sin",
                         seed: int = 0) -> RawSeries:
    """Variables as random mixtures of periodic latent factors.

    Observation noise is heterogeneous: each variable gets its own level
    drawn uniformly from ``noise_range``. A ``garbage_frac`` share of the
    variables carries no factor signal at all, only high-variance noise,
    so distances computed on raw values can be dominated by rows that say
    nothing about the underlying state. Triangle-wave factors give phase
    offsets a near-constant elementwise gap, which suits range-predicate
    retrieval benchmarks.
    """
    if len(periods) != n_factors:
        raise ValueError("need one period per factor")
    rng = np.random.default_rng(seed)
    t = np.arange(n_steps, dtype=np.float64)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_factors)
    factors = np.stack([_wave(2.0 * np.pi * t / period + phase, wave)
                        for period, phase in zip(periods, phases)], axis=1)
    # concentrated mixtures: one dominant factor per variable plus a weak
    # dense residual, so cross-variable couplings stay sharp
    primary = rng.integers(0, n_factors, size=n_vars)
    gains = rng.uniform(0.7, 1.3, size=n_vars) * rng.choice((-1.0, 1.0),
                                                            size=n_vars)
    loadings = 0.15 * rng.normal(0.0, 1.0, size=(n_factors, n_vars))
    loadings[primary, np.arange(n_vars)] += gains
    noise_levels = rng.uniform(noise_range[0], noise_range[1], size=n_vars)
    garbage = rng.random(n_vars) < garbage_frac
    loadings[:, garbage] = 0.0
    noise_levels[garbage] = garbage_noise
    values = factors @ loadings
    values += rng.normal(0.0, 1.0, size=values.shape) * noise_levels
    names = tuple(f"v{j}" for j in range(n_vars))
    return RawSeries(values, names)


def clustered_factor_series(n_steps: int, n_clusters: int = 8,
                            vars_per_cluster: int = 8,
                            self_coef: float = 0.7,
                            lead_coef: float = 0.25,
                            noise_range: tuple[float, float] = (0.03, 0.08),
                            seed: int = 0) -> RawSeries:
    """Blocks of variables driven by a directed cyclic chain of factors.

    Block g's factor is pushed by the next block around the ring:
    z_g(t+1) = self_coef * z_g(t) + lead_coef * z_{g+1}(t) + innovation,
    the way an upstream sensor leads a downstream one. A block's value a
    few steps ahead therefore hinges on the current state of the blocks
    ahead of it in the ring, which its own present reading says little
    about. Variables read their block's factor plus a little private
    noise; within-block rank correlation is near one and cross-block
    correlation moderate, so correlation clustering recovers the blocks.
    """
    if self_coef <= 0 or lead_coef < 0 or self_coef + lead_coef >= 1.0:
        raise ValueError("need self_coef > 0, lead_coef >= 0, and "
                         "self_coef + lead_coef < 1 for stationarity")
    rng = np.random.default_rng(seed)
    burn_in = 500
    innovations = rng.normal(0.0, 1.0, size=(n_steps + burn_in, n_clusters))
    factors = np.empty_like(innovations)
    factors[0] = 0.0
    for t in range(1, n_steps + burn_in):
        prev = factors[t - 1]
        factors[t] = (self_coef * prev + lead_coef * np.roll(prev, -1)
                      + innovations[t])
    factors = factors[burn_in:]
    factors /= factors.std(axis=0)
    n_vars = n_clusters * vars_per_cluster
    block_of = np.repeat(np.arange(n_clusters), vars_per_cluster)
    gains = rng.uniform(0.9, 1.1, size=n_vars)
    noise_levels = rng.uniform(noise_range[0], noise_range[1], size=n_vars)
    values = factors[:, block_of] * gains
    values += rng.normal(0.0, 1.0, size=values.shape) * noise_levels
    names = tuple(f"c{c}_v{j}" for c in range(n_clusters)
                  for j in range(vars_per_cluster))
    return RawSeries(values, names)


def write_series_csv(series: RawSeries, path, header: bool = True) -> None:
    """Write a series as the wide CSV format the loader reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(series.variable_names)
        for row in series.values:
            writer.writerow([repr(float(v)) for v in row])
