"""Random states, operators and unitaries for sweeps and property tests."""

from __future__ import annotations

import numpy as np

from .states import DensityMatrix, HermitianOperator, PureState, validate_density


def as_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitaries(rng, n: int, count: int | None = None) -> np.ndarray:
    """Haar-random ``n x n`` unitaries (QR of a Ginibre matrix, phase-corrected).

    With ``count`` given, returns a stack of shape ``(count, n, n)``.
    """
    shape = (n, n) if count is None else (count, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def haar_unitary(n: int, seed=None) -> np.ndarray:
    return haar_unitaries(as_rng(seed), n)


def haar_pure(dim: int, seed=None) -> PureState:
    rng = as_rng(seed)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return PureState(z / np.linalg.norm(z))


def random_density(dim: int, rank: int | None = None, seed=None) -> DensityMatrix:
    """Random state of the given rank from the induced (Ginibre) measure."""
    rng = as_rng(seed)
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in [1, {dim}], got {rank}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return validate_density(rho / np.trace(rho).real)


def random_hermitian(dim: int, seed=None, scale: float = 1.0) -> HermitianOperator:
    """GUE-distributed Hermitian matrix rescaled to spectral norm ``scale``."""
    rng = as_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (a + a.conj().T) / 2
    h = h * (scale / np.linalg.norm(h, 2))
    return HermitianOperator(h)


def random_povm(dim: int, n_outcomes: int, seed=None) -> list:
    """Random POVM elements ``S^{-1/2} A_k S^{-1/2}`` with ``S = sum_k A_k``."""
    rng = as_rng(seed)
    elems = []
    for _ in range(n_outcomes):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        elems.append(g @ g.conj().T)
    s = sum(elems)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v / np.sqrt(w)) @ v.conj().T
    return [s_inv_half @ a @ s_inv_half for a in elems]
