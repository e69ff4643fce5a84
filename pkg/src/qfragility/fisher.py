"""Quantum and classical Fisher information for unitary phase encoding.

All functions take the probe ``rho`` (a :class:`~qfragility.states.DensityMatrix`
or anything :func:`~qfragility.states.as_density` accepts) and the generator
``H`` of ``U = exp(-i H phi)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidPOVM, SingularProbability
from .states import (
    BipartitePureState,
    PureState,
    as_density,
    as_operator,
    embed_on_system,
    evolve,
    purify,
)

SUPPORT_TOL = 1e-12
PROB_FLOOR = 1e-12
DERIV_FLOOR = 1e-9
POVM_TOL = 1e-9
BOUND_TOL = 1e-9


def _pair(rho, h):
    rho = as_density(rho)
    h = as_operator(h)
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs operator dim {h.dim}")
    return rho, h


def _tr(a) -> float:
    return float(np.trace(a).real)


def variance(rho, h) -> float:
    """``tr[rho H^2] - tr[rho H]^2``."""
    rho, h = _pair(rho, h)
    r, hm = rho.matrix, h.matrix
    return _tr(r @ hm @ hm) - _tr(r @ hm) ** 2


def commutator_spread(rho, h) -> float:
    """``tr[rho^2 H^2] - tr[(rho H)^2]``, i.e. ``-tr([rho, H]^2) / 2``.

    Shared by the QFI lower bound and the analytic purity loss of the probe.
    """
    rho, h = _pair(rho, h)
    rh = rho.matrix @ h.matrix
    return _tr(rh @ rh.conj().T) - _tr(rh @ rh)


def qfi_mixed(rho, h) -> float:
    r"""Quantum Fisher information of a mixed state.

    .. math::
        F_q = 2 \sum_{ij} \frac{(\lambda_i-\lambda_j)^2}{\lambda_i+\lambda_j}
              |\langle\psi_i|H|\psi_j\rangle|^2

    Pairs with :math:`\lambda_i+\lambda_j \le` ``SUPPORT_TOL`` are skipped.
    """
    rho, h = _pair(rho, h)
    lam, vec = rho.eigenvalues, rho.eigenvectors
    hm = vec.conj().T @ h.matrix @ vec
    lsum = lam[:, None] + lam[None, :]
    ldiff = lam[:, None] - lam[None, :]
    mask = lsum > SUPPORT_TOL
    terms = np.zeros_like(lsum)
    terms[mask] = ldiff[mask] ** 2 / lsum[mask] * np.abs(hm[mask]) ** 2
    return float(2.0 * terms.sum())


def qfi_pure(psi, h) -> float:
    """``4 (Delta H)^2`` for a pure state.

    For a :class:`BipartitePureState` with ``H`` acting on the system only,
    ``H`` is embedded as ``H (x) 1``; an operator on the joint space is used
    as is.
    """
    h = as_operator(h)
    if isinstance(psi, BipartitePureState):
        if h.dim == psi.dim_system:
            h = embed_on_system(h, psi.dim_memory)
        vec = psi.amplitudes
    elif isinstance(psi, PureState):
        vec = psi.amplitudes
    else:
        vec = PureState(psi).amplitudes
    if h.dim != vec.shape[0]:
        raise DimensionMismatch(f"state dim {vec.shape[0]} vs operator dim {h.dim}")
    hv = h.matrix @ vec
    mean = float(np.vdot(vec, hv).real)
    second = float(np.vdot(hv, hv).real)
    return max(4.0 * (second - mean**2), 0.0)


def qfi_lower_bound(rho, h) -> float:
    """``4 (tr[rho^2 H^2] - tr[(rho H)^2])``, never above :func:`qfi_mixed`."""
    return 4.0 * commutator_spread(rho, h)


def qfi_upper_bounds(rho, h):
    """Return ``(intermediate, variance_bound)``.

    ``intermediate = 4 tr[rho H^2] - 8 tr[(rho H)^2]`` and
    ``variance_bound = 4 (Delta H)^2_rho``.  Only the variance bound is an
    upper bound on :func:`qfi_mixed` for every state.  The intermediate value
    bounds the QFI when every eigenvalue of ``rho`` is at most 1/2 (then
    ``1 / (l_i + l_j) >= 1`` for all pairs, diagonal ones included); for a
    pure state it equals ``4 <H^2> - 8 <H>^2`` and falls below the QFI
    whenever ``<H> != 0``.  It can also exceed the variance bound, e.g. for
    ``H = 1`` and ``rho = 1/3``.
    """
    rho, h = _pair(rho, h)
    r, hm = rho.matrix, h.matrix
    rh = r @ hm
    intermediate = 4.0 * _tr(rh @ hm) - 8.0 * _tr(rh @ rh)
    return intermediate, 4.0 * variance(rho, h)


@dataclass(frozen=True, eq=False)
class POVM:
    elements: tuple
    tol: float = POVM_TOL

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not elems:
            raise InvalidPOVM("a POVM needs at least one element")
        d = elems[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for k, e in enumerate(elems):
            if e.shape != (d, d):
                raise InvalidPOVM(f"element {k} has shape {e.shape}, expected {(d, d)}")
            if np.max(np.abs(e - e.conj().T)) > self.tol:
                raise InvalidPOVM(f"element {k} is not Hermitian")
            if np.linalg.eigvalsh((e + e.conj().T) / 2)[0] < -self.tol:
                raise InvalidPOVM(f"element {k} is not positive semidefinite")
            total += e
        if np.max(np.abs(total - np.eye(d))) > self.tol:
            raise InvalidPOVM("elements do not sum to the identity")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]


def outcome_probabilities(rho, h, povm: POVM, phi: float):
    """Probabilities ``tr[Pi_k rho_phi]`` and their exact phase derivatives."""
    rho, h = _pair(rho, h)
    if not isinstance(povm, POVM):
        povm = POVM(tuple(povm))
    if povm.dim != rho.dim:
        raise DimensionMismatch(f"POVM dim {povm.dim} vs state dim {rho.dim}")
    r = evolve(rho, h, phi).matrix
    hm = h.matrix
    dr = -1j * (hm @ r - r @ hm)
    p = np.array([_tr(e @ r) for e in povm.elements])
    dp = np.array([_tr(e @ dr) for e in povm.elements])
    return p, dp


def classical_fi(rho, h, povm, phi: float) -> float:
    """Classical Fisher information ``sum_k (d p_k / d phi)^2 / p_k`` of a fixed POVM.

    Outcomes with ``p_k <= PROB_FLOOR`` contribute nothing when their
    derivative is also below ``DERIV_FLOOR``; otherwise the information
    diverges and :class:`SingularProbability` is raised.
    """
    p, dp = outcome_probabilities(rho, h, povm, phi)
    total = 0.0
    for k, (pk, dk) in enumerate(zip(p, dp)):
        if pk <= PROB_FLOOR:
            if abs(dk) <= DERIV_FLOOR:
                continue
            raise SingularProbability(
                f"outcome {k}: p = {pk:.3e} with derivative {dk:.3e}"
            )
        total += dk * dk / pk
    return float(total)


@dataclass(frozen=True)
class BoundReport:
    qfi_mixed: float
    qfi_pure_of_purification: float
    lower_bound: float
    upper_bound_intermediate: float
    variance_bound: float
    chain_satisfied: bool
    slack_lower: float
    slack_upper: float

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(rho, h, tol: float = BOUND_TOL) -> BoundReport:
    """Evaluate the QFI together with its purity-loss bounds.

    ``chain_satisfied`` checks ``lower_bound <= qfi_mixed <= variance_bound``
    within ``tol``; the intermediate bound is reported but not part of the
    chain.
    """
    rho, h = _pair(rho, h)
    fq = qfi_mixed(rho, h)
    lower = qfi_lower_bound(rho, h)
    intermediate, var_bound = qfi_upper_bounds(rho, h)
    fq_psi = qfi_pure(purify(rho), h)
    return BoundReport(
        qfi_mixed=fq,
        qfi_pure_of_purification=fq_psi,
        lower_bound=lower,
        upper_bound_intermediate=intermediate,
        variance_bound=var_bound,
        chain_satisfied=bool(lower <= fq + tol and fq <= var_bound + tol),
        slack_lower=fq - lower,
        slack_upper=var_bound - fq,
    )
