"""Shared random-instance builders for the test suite."""

import numpy as np


def random_hermitian(rng, dim, scale=1.0):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_density_matrix(rng, dim, rank=None):
    rank = dim if rank is None else rank
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_projector_matrix(rng, dim, rank):
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    q, _ = np.linalg.qr(a)
    return q @ q.conj().T


def expm_propagator(h, t, hbar=1.0):
    """Independent matrix-exponential route, for cross-checking."""
    from scipy.linalg import expm

    return expm(-1j * t / hbar * h)
