"""Pure-state unravellings of a mixed probe and Yu's variance-minimising one.

The QFI of a mixed state under unitary encoding is four times the smallest
ensemble-averaged variance of ``H`` over all pure-state decompositions of
``rho``.  :func:`optimal_unravelling` builds the minimiser in closed form by
diagonalising

    Y = sum_ij 2 sqrt(l_i l_j) / (l_i + l_j) |psi_i><psi_i|H|psi_j><psi_j|

and mapping its eigenvectors ``|y_k>`` to members ``sqrt(rho)|y_k>``.
:func:`random_unravelling` and :func:`sample_unravelling_variances` give the
brute-force comparison through random isometries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientMembers
from .fisher import SUPPORT_TOL
from .random_states import as_rng, haar_unitaries
from .states import (
    DEFAULT_TOL,
    DensityMatrix,
    PureState,
    as_density,
    as_operator,
    fix_phases,
)

WEIGHT_FLOOR = 1e-12
ROOF_TOL = 1e-8
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PureEnsemble:
    """Weights ``q_k`` and normalised members ``|alpha_k>`` (rows of ``states``)."""

    weights: np.ndarray
    states: np.ndarray
    source: DensityMatrix | None = None
    degenerate_y: bool = False

    def __post_init__(self):
        q = np.asarray(self.weights, dtype=float)
        s = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if q.shape[0] != s.shape[0]:
            raise ValueError("one weight per member required")
        if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be non-negative and sum to one")
        norms = np.linalg.norm(s, axis=1)
        if np.any(np.abs(norms - 1.0) > DEFAULT_TOL.norm):
            raise ValueError("ensemble members must be normalised")
        object.__setattr__(self, "weights", q)
        object.__setattr__(self, "states", s)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def members(self):
        return [(float(q), PureState(a)) for q, a in zip(self.weights, self.states)]

    def density(self) -> np.ndarray:
        return (self.states.T * self.weights) @ self.states.conj()

    def to_json(self) -> list:
        return [
            {"q": float(q), "state": {"re": a.real.tolist(), "im": a.imag.tolist()}}
            for q, a in zip(self.weights, self.states)
        ]

    @classmethod
    def from_json(cls, obj) -> "PureEnsemble":
        q = [m["q"] for m in obj]
        states = [np.asarray(m["state"]["re"]) + 1j * np.asarray(m["state"]["im"]) for m in obj]
        return cls(np.asarray(q), np.asarray(states))


@dataclass(frozen=True, eq=False)
class YuIntermediates:
    Z: np.ndarray
    Y: np.ndarray
    y_eigenvalues: np.ndarray
    y_eigenvectors: np.ndarray
    degenerate: bool
    rho: DensityMatrix

    def lambda_operators(self) -> list:
        """Yu's ``Lambda_k`` operators, one per eigenvector of ``Y``.

        ``Lambda_k = sum_ij a_ki a*_kj / sqrt(q_k) sqrt((l_i + l_j) / 2) |psi_i><psi_j|``
        with ``a_ki = <psi_i|y_k>`` and ``q_k = sum_i l_i |a_ki|^2``, so that
        ``Z = sum_k g_k Lambda_k`` and ``tr[Z Lambda_k] = g_k`` where
        ``g_k = sqrt(q_k) <alpha_k|H|alpha_k>``.  Members of zero weight give ``None``.
        """
        lam, vec = self.rho.support()
        a = vec.conj().T @ self.y_eigenvectors  # a[i, k] = <psi_i|y_k>
        q = (lam[:, None] * np.abs(a) ** 2).sum(axis=0)
        root = np.sqrt((lam[:, None] + lam[None, :]) / 2)
        ops = []
        for k in range(a.shape[1]):
            if q[k] <= WEIGHT_FLOOR:
                ops.append(None)
                continue
            c = np.outer(a[:, k], a[:, k].conj()) / np.sqrt(q[k]) * root  # c[i, j]
            ops.append(vec @ c @ vec.conj().T)
        return ops


def _pair(rho, h):
    rho = as_density(rho)
    h = as_operator(h)
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs operator dim {h.dim}")
    return rho, h


def build_Z(rho, h) -> np.ndarray:
    """``Z = sum_ij sqrt(2 l_i l_j / (l_i + l_j)) |psi_i><psi_i|H|psi_j><psi_j|``.

    Satisfies ``F_q = 4 tr[rho H^2] - 4 tr[Z^2]``.
    """
    rho, h = _pair(rho, h)
    lam, vec = rho.eigenvalues, rho.eigenvectors
    hm = vec.conj().T @ h.matrix @ vec
    lsum = lam[:, None] + lam[None, :]
    w = np.zeros_like(lsum)
    mask = lsum > SUPPORT_TOL
    w[mask] = np.sqrt(2.0 * np.outer(lam, lam)[mask] / lsum[mask])
    return vec @ (w * hm) @ vec.conj().T


def _support_y(rho: DensityMatrix, h):
    lam, vec = rho.support()
    hm = vec.conj().T @ h.matrix @ vec
    w = 2.0 * np.sqrt(np.outer(lam, lam)) / (lam[:, None] + lam[None, :])
    return lam, vec, w * hm


def build_Y(rho, h) -> np.ndarray:
    """Yu's ``Y`` operator on the support of ``rho``, zero on its kernel."""
    rho, h = _pair(rho, h)
    _, vec, y = _support_y(rho, h)
    return vec @ y @ vec.conj().T


def yu_intermediates(rho, h) -> YuIntermediates:
    rho, h = _pair(rho, h)
    lam, vec, y = _support_y(rho, h)
    mu, c = np.linalg.eigh((y + y.conj().T) / 2)
    mu, c = mu[::-1], fix_phases(c[:, ::-1])
    degenerate = bool(mu.size > 1 and np.min(np.abs(np.diff(mu))) < DEGENERACY_TOL)
    return YuIntermediates(
        Z=build_Z(rho, h),
        Y=vec @ y @ vec.conj().T,
        y_eigenvalues=mu,
        y_eigenvectors=vec @ c,
        degenerate=degenerate,
        rho=rho,
    )


def _assemble(lam, vec, coeffs, source, degenerate=False) -> PureEnsemble:
    """Members ``sum_i sqrt(l_i) a_ki |psi_i>`` from coefficients ``a[k, i]``."""
    unnorm = (coeffs * np.sqrt(lam)[None, :]) @ vec.T  # row k: unnormalised |alpha_k>
    q = np.sum(np.abs(unnorm) ** 2, axis=1)
    keep = q > WEIGHT_FLOOR
    unnorm, q = unnorm[keep], q[keep]
    states = unnorm / np.sqrt(q)[:, None]
    return PureEnsemble(q / q.sum(), states, source, degenerate)


def optimal_unravelling(rho, h) -> PureEnsemble:
    """Decomposition of ``rho`` whose average variance of ``H`` equals ``F_q / 4``.

    Members are ordered by decreasing eigenvalue of ``Y``; those with weight
    at or below ``WEIGHT_FLOOR`` are dropped.  ``degenerate_y`` flags a
    degenerate ``Y`` spectrum, in which case the eigenbasis (and hence the
    ensemble) is one of many equally optimal choices.
    """
    rho, h = _pair(rho, h)
    inter = yu_intermediates(rho, h)
    lam, vec = rho.support()
    a = (vec.conj().T @ inter.y_eigenvectors).T  # a[k, i] = <psi_i|y_k>
    return _assemble(lam, vec, a, rho, inter.degenerate)


def spectral_ensemble(rho) -> PureEnsemble:
    rho = as_density(rho)
    lam, vec = rho.support()
    return PureEnsemble(lam / lam.sum(), vec.T.copy(), rho)


def average_variance(ensemble: PureEnsemble, h) -> float:
    """``sum_k q_k (<H^2>_k - <H>_k^2)``."""
    h = as_operator(h)
    s = ensemble.states
    if s.shape[1] != h.dim:
        raise DimensionMismatch(f"member dim {s.shape[1]} vs operator dim {h.dim}")
    hs = s @ h.matrix.T  # row k: H|alpha_k>
    mean = np.einsum("ki,ki->k", s.conj(), hs).real
    second = np.einsum("ki,ki->k", hs.conj(), hs).real
    return float(np.dot(ensemble.weights, second - mean**2))


def ensemble_purity_loss(ensemble: PureEnsemble, h, dx: float) -> float:
    """Second-order mean purity loss ``2 dx^2 sum_k q_k (Delta H)^2_k``."""
    return 2.0 * dx**2 * average_variance(ensemble, h)


def ensemble_purity_loss_empirical(ensemble: PureEnsemble, h, dist, n_nodes: int = 256) -> float:
    """Mean purity loss of the members, each averaged by quadrature."""
    from .fluctuations import average_state_quadrature, purity_loss_empirical

    total = 0.0
    for q, member in ensemble.members():
        avg = average_state_quadrature(member, h, dist, n_nodes)
        total += q * purity_loss_empirical(member, avg).delta_gamma
    return total


def random_unravelling(rho, n_members: int, seed=None) -> PureEnsemble:
    """Decomposition of ``rho`` through a Haar-random isometry.

    The first ``rank`` columns of an ``n_members``-dimensional Haar unitary
    give the coefficients ``a_ki`` with ``sum_k a_ki a*_kj = delta_ij``.
    """
    rho = as_density(rho)
    lam, vec = rho.support()
    if n_members < lam.shape[0]:
        raise InsufficientMembers(f"need at least rank = {lam.shape[0]} members")
    u = haar_unitaries(as_rng(seed), n_members)
    return _assemble(lam, vec, u[:, : lam.shape[0]], rho)


def sample_unravelling_variances(rho, h, count: int, n_members: int | None = None,
                                 seed=None, batch: int = 2048) -> np.ndarray:
    """Average variances of ``count`` random unravellings, vectorised.

    With ``n_members=None`` each draw picks a member count uniformly in
    ``[rank, 2 rank + 1]``.
    """
    rho, h = _pair(rho, h)
    lam, vec = rho.support()
    r = lam.shape[0]
    rng = as_rng(seed)
    hm = vec.conj().T @ h.matrix @ vec
    h2 = vec.conj().T @ h.matrix @ h.matrix @ vec
    sq = np.sqrt(lam)
    # q_k <H>_k = b_k^dag hm b_k with b_k = sqrt(l) * a_k, in the support basis
    hm_s = sq[:, None] * hm * sq[None, :]
    h2_s = sq[:, None] * h2 * sq[None, :]
    sizes = (np.full(count, n_members) if n_members is not None
             else rng.integers(r, 2 * r + 2, size=count))
    out = np.empty(count)
    for n in np.unique(sizes):
        idx = np.flatnonzero(sizes == n)
        for start in range(0, idx.size, batch):
            sl = idx[start:start + batch]
            a = haar_unitaries(rng, int(n), sl.size)[:, :, :r]  # (m, k, i)
            q = np.einsum("mki,i->mk", np.abs(a) ** 2, lam)
            qh = np.einsum("mki,ij,mkj->mk", a.conj(), hm_s, a).real
            qh2 = np.einsum("mki,ij,mkj->mk", a.conj(), h2_s, a).real
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(q > WEIGHT_FLOOR, qh2 - qh**2 / q, 0.0)
            out[sl] = terms.sum(axis=1)
    return out
