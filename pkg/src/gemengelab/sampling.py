"""Seeded random states, operators and unitaries for property checks."""

from __future__ import annotations

import numpy as np

from gemengelab.hilbert import Operator, StateOperator, StateVector


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_vector(dim: int, rng, dims=None) -> StateVector:
    rng = rng_from(rng)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector.normalized(v, dims)


def random_density(dim: int, rng, rank: int | None = None, dims=None) -> StateOperator:
    """Random mixed state ``G G^dag / tr`` with a Ginibre factor of given rank."""
    rng = rng_from(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return StateOperator(rho / np.trace(rho).real, dims, check=False)


def random_unitary(dim: int, rng, dims=None) -> Operator:
    """Haar unitary via QR with the diagonal phase correction."""
    rng = rng_from(rng)
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return Operator(q * (d / np.abs(d)), dims)


def random_orthonormal(count: int, dim: int, rng) -> np.ndarray:
    """``count`` orthonormal vectors in ``C^dim`` as rows."""
    return random_unitary(dim, rng).data[:, :count].T.copy()


def random_hermitian(dim: int, rng, scale: float = 1.0) -> np.ndarray:
    rng = rng_from(rng)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * (a + a.conj().T) / 2


def random_composition(total: int, parts: int, rng) -> list[int]:
    """Random positive integers summing to ``total``."""
    rng = rng_from(rng)
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, total]
    return [int(b - a) for a, b in zip(edges, edges[1:])]
