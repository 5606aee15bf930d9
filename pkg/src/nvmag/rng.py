"""Seeded pseudorandom streams.

Streams come from PCG64 (via numpy's bit generator) and Gaussian deviates
are formed with the Box-Muller transform from 53-bit uniforms, so a stream
can be regenerated by any PCG64 implementation.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def child_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def standard_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` unit-variance Gaussian deviates by Box-Muller.

    Uniforms are drawn in pairs (u1, u2); output order is
    ``r cos(2 pi u2), r sin(2 pi u2)`` per pair.
    """
    m = (n + 1) // 2
    u = rng.random(2 * m).reshape(m, 2)
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    out = np.empty((m, 2))
    out[:, 0] = r * np.cos(theta)
    out[:, 1] = r * np.sin(theta)
    return out.reshape(-1)[:n]
