"""Seeded random instance generators."""

from __future__ import annotations

import numpy as np

from .linalg import dagger


def rng_for(seed: int, instance: int = 0) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(instance)])


def ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return (rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))) / np.sqrt(2.0)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE sample normalized so that typical eigenvalues are O(scale)."""
    G = ginibre(d, rng)
    return scale * (G + dagger(G)) / (2.0 * np.sqrt(d))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR with phase correction."""
    Q, R = np.linalg.qr(ginibre(d, rng))
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_psd(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    G = ginibre(d, rng, d if rank is None else rank)
    return G @ dagger(G) / d


def random_positive_definite(d: int, rng: np.random.Generator, floor: float = 0.1) -> np.ndarray:
    return random_psd(d, rng) + floor * np.eye(d)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Normalized Wishart state."""
    W = random_psd(d, rng, rank)
    return W / np.trace(W).real


def random_commuting_density(d: int, rng: np.random.Generator, basis=None) -> np.ndarray:
    p = rng.dirichlet(np.ones(d))
    if basis is None:
        return np.diag(p).astype(complex)
    return (basis * p) @ dagger(basis)


def random_kraus(d_in: int, d_out: int, rng: np.random.Generator, rank: int = 2) -> list[np.ndarray]:
    """Kraus operators of a channel from a Haar-random isometry."""
    U = random_unitary(d_out * rank, rng)
    V = U[:, :d_in].reshape(d_out, rank, d_in)
    return [V[:, i, :] for i in range(rank)]
