"""Seeded random streams.

All randomness in a run derives from one unsigned 64-bit seed. Each consumer
draws from a labelled child stream, so e.g. the frequency basis can be held
fixed while the weight initialisation varies. Streams use numpy's PCG64 bit
generator; uniforms are the 53-bit doubles of ``Generator.random`` and
Gaussians come from the Box-Muller transform below rather than numpy's
ziggurat sampler, so the mapping from uniforms to normals is explicit.
"""

from __future__ import annotations

import numpy as np

STREAMS = {"basis": 1, "init": 2, "batching": 3, "data": 4, "probe": 5}


def stream(seed: int, label: str) -> np.random.Generator:
    if label not in STREAMS:
        raise ValueError(f"unknown stream label {label!r}")
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[label],))
    return np.random.Generator(np.random.PCG64(ss))


def uniform(gen: np.random.Generator, low: float, high: float, size) -> np.ndarray:
    return low + (high - low) * gen.random(size)


def box_muller(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normal samples.

    Pairs ``(u1, u2)`` of uniforms on [0, 1) map to
    ``sqrt(-2 ln(1 - u1)) * (cos(2 pi u2), sin(2 pi u2))``; outputs are taken
    cosine-then-sine per pair, in row-major order of ``size``.
    """
    n = int(np.prod(size))
    pairs = (n + 1) // 2
    u = gen.random((pairs, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    phase = 2.0 * np.pi * u[:, 1]
    z = np.column_stack([r * np.cos(phase), r * np.sin(phase)]).reshape(-1)
    return z[:n].reshape(size)
