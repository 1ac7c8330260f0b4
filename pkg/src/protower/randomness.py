"""Deterministic random probes.

All randomness flows from one 64-bit seed through counter-based Philox
streams. A stream is keyed by (seed, digest-of-label), so independent
checks get independent, reproducible streams regardless of execution
order.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .core_algebra import AlgebraElement, BlockAlgebra, spectral_radius

__all__ = [
    "stream",
    "random_element",
    "random_selfadjoint",
    "random_normal",
    "random_unitary",
    "random_unitary_near_identity",
]

_MASK64 = (1 << 64) - 1


def _label_digest(label: str) -> int:
    return int.from_bytes(
        hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def stream(seed: int, label: str = "") -> np.random.Generator:
    """Philox generator keyed by the seed and a stable label digest."""
    key = [int(seed) & _MASK64, _label_digest(label)]
    return np.random.Generator(np.random.Philox(key=key))


def _ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def random_element(
    algebra: BlockAlgebra, rng: np.random.Generator, scale: float = 1.0
) -> AlgebraElement:
    """Independent complex Gaussian entries, normalized to O(scale) norm."""
    blocks = [
        scale * _ginibre(n, rng) / np.sqrt(n) for n in algebra.block_sizes]
    return AlgebraElement(algebra, blocks)


def random_selfadjoint(
    algebra: BlockAlgebra,
    rng: np.random.Generator,
    radius: float | None = None,
) -> AlgebraElement:
    """Random self-adjoint element; spectral radius scaled to ``radius``."""
    blocks = []
    for n in algebra.block_sizes:
        g = _ginibre(n, rng)
        blocks.append(0.5 * (g + g.conj().T))
    x = AlgebraElement(algebra, blocks)
    if radius is not None:
        r = spectral_radius(x)
        x = (radius / r) * x if r > 0 else x
    return x


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(n, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary(algebra: BlockAlgebra, rng: np.random.Generator) -> AlgebraElement:
    return AlgebraElement(
        algebra, [_haar_unitary(n, rng) for n in algebra.block_sizes])


def random_normal(
    algebra: BlockAlgebra,
    rng: np.random.Generator,
    radius: float = 2.0,
) -> AlgebraElement:
    """Random normal element: Haar unitary conjugate of a random diagonal."""
    blocks = []
    for n in algebra.block_sizes:
        v = _haar_unitary(n, rng)
        lam = radius * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)) / np.sqrt(2)
        blocks.append(v @ np.diag(lam) @ v.conj().T)
    return AlgebraElement(algebra, blocks)


def random_unitary_near_identity(
    algebra: BlockAlgebra,
    rng: np.random.Generator,
    max_distance: float = 0.99,
) -> AlgebraElement:
    """Random unitary u with ||1 - u|| <= max_distance.

    Built as exp(i*h) with the spectral radius of h capped at
    2*arcsin(max_distance/2), which bounds |1 - e^(i*lambda)| exactly.
    """
    cap = 2.0 * np.arcsin(max_distance / 2.0)
    blocks = []
    for n in algebra.block_sizes:
        g = _ginibre(n, rng)
        h = 0.5 * (g + g.conj().T)
        w, v = np.linalg.eigh(h)
        top = np.abs(w).max()
        if top > 0:
            w = w * (cap * rng.uniform(0.1, 1.0) / top)
        blocks.append(v @ np.diag(np.exp(1j * w)) @ v.conj().T)
    return AlgebraElement(algebra, blocks)
