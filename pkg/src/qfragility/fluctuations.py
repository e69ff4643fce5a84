"""Stochastic phase noise and the purity it destroys.

The encoded phase ``x`` is drawn from a wrapped (periodic) Gaussian centred on
``phi``.  Averaging ``U_x rho U_x^dagger`` over that distribution gives a more
mixed state; the drop in purity, divided by the noise variance, is the
fragility of the probe.

Averages are evaluated in the eigenbasis of ``H``: entry ``(a, b)`` of the
state picks up ``exp(-i (h_a - h_b) x)``, so only one scalar kernel per
distinct gap ``h_a - h_b`` has to be integrated.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ApproximationRegimeViolated, DimensionMismatch, QuadratureNotConverged
from .fisher import BoundReport, bound_report, commutator_spread, variance
from .states import (
    BipartitePureState,
    DensityMatrix,
    as_density,
    as_operator,
    eig_hermitian,
    embed_on_system,
    purify,
    purity,
    validate_density,
)

TWO_PI = 2.0 * math.pi
QUAD_TOL = 1e-10
DX_REGIME = 0.2
WINDOW_SIGMAS = 8.0
PANEL_ORDER = 16
MC_BLOCK = 8192


@dataclass(frozen=True)
class PeriodicGaussian:
    """Wrapped normal density on ``[0, 2 pi)`` with centre ``phi`` and width ``dx``."""

    phi: float
    dx: float
    wrap_terms: int | None = None

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError(f"width must be positive, got {self.dx}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)
        if self.wrap_terms is None:
            # smallest K with 2 pi K > 10 dx + pi
            k = math.floor((10.0 * self.dx + math.pi) / TWO_PI) + 1
            object.__setattr__(self, "wrap_terms", min(k, 20))
        elif self.wrap_terms < 1:
            raise ValueError("wrap_terms must be a positive integer")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        k = np.arange(-self.wrap_terms, self.wrap_terms + 1)
        z = (x[..., None] - self.phi + TWO_PI * k) / self.dx
        dens = np.exp(-0.5 * z * z).sum(axis=-1) / (self.dx * math.sqrt(TWO_PI))
        return dens if dens.ndim else float(dens)

    def sample(self, size=None, seed=None):
        """Normal deviates about ``phi`` reduced modulo ``2 pi``."""
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        x = np.mod(self.phi + self.dx * rng.standard_normal(size), TWO_PI)
        return float(x) if size is None else x

    def unwrap(self, x):
        """Representative of ``x`` (mod 2 pi) closest to ``phi``."""
        return self.phi + np.mod(np.asarray(x) - self.phi + math.pi, TWO_PI) - math.pi

    def window(self) -> tuple[float, float]:
        w = min(math.pi, WINDOW_SIGMAS * self.dx)
        return self.phi - w, self.phi + w

    def variance(self, n_nodes: int = 512) -> float:
        """Second central moment over the period centred on ``phi``, by quadrature.

        Integrates over ``phi +/- min(pi, 12 dx)``; the mass outside is below 1e-30.
        """
        half = min(math.pi, 12.0 * self.dx)
        x, w = gauss_legendre_nodes(self.phi - half, self.phi + half, n_nodes)
        p = w * self.pdf(np.mod(x, TWO_PI))
        mean = np.sum(p * x) / p.sum()
        return float(np.sum(p * (x - mean) ** 2) / p.sum())


def pdf(dist: PeriodicGaussian, x):
    return dist.pdf(x)


def sample(dist: PeriodicGaussian, seed=None, size=None):
    return dist.sample(size=size, seed=seed)


def gauss_legendre_nodes(a: float, b: float, n_nodes: int, order: int = PANEL_ORDER):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``.

    Uses ``ceil(n_nodes / order)`` equal panels of ``order`` points each.
    """
    panels = max(1, -(-n_nodes // order))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt


@dataclass(frozen=True, eq=False)
class AveragedState:
    rho_avg: DensityMatrix
    method: str
    nodes_or_samples: int
    dist: PeriodicGaussian
    seed: int | None = None
    purity_stderr: float | None = None


@dataclass(frozen=True)
class PurityLossResult:
    delta_gamma: float
    method: str
    fragility_ratio: float
    dx: float
    warning: str | None = field(default=None, compare=False)


class _GapBasis:
    """``rho`` and ``H`` in the eigenbasis of ``H`` with distinct gaps grouped."""

    def __init__(self, rho: DensityMatrix, h):
        h = as_operator(h)
        if h.dim != rho.dim:
            raise DimensionMismatch(f"state dim {rho.dim} vs operator dim {h.dim}")
        self.rho = rho
        self.energies, self.vecs = eig_hermitian(h.matrix)
        self.rho_h = self.vecs.conj().T @ rho.matrix @ self.vecs
        gaps = self.energies[:, None] - self.energies[None, :]
        # merge gaps equal to rounding so degenerate spectra cost one kernel each
        scale = max(1.0, float(np.max(np.abs(gaps))))
        keys = np.round(gaps / scale, 12)
        _, first, inverse = np.unique(keys.ravel(), return_index=True, return_inverse=True)
        self.gaps = gaps.ravel()[first]
        self.inverse = inverse.reshape(gaps.shape)

    def phases(self, x) -> np.ndarray:
        """``exp(-i g x)`` for every distinct gap ``g``, shape ``(n_gaps, len(x))``."""
        return np.exp(-1j * np.outer(self.gaps, x))

    def assemble(self, kernel) -> np.ndarray:
        """Map per-gap averages back to a matrix in the computational basis."""
        avg_h = self.rho_h * kernel[self.inverse]
        return self.vecs @ avg_h @ self.vecs.conj().T


def _coerce_pair(state, h):
    """Accept a mixed state or a purification; embed ``H`` when needed."""
    h = as_operator(h)
    if isinstance(state, BipartitePureState):
        if h.dim == state.dim_system:
            h = embed_on_system(h, state.dim_memory)
        return state.density(), h
    return as_density(state), h


def _quadrature_kernel(basis: _GapBasis, dist: PeriodicGaussian, n_nodes: int):
    lo, hi = dist.window()
    x, w = gauss_legendre_nodes(lo, hi, n_nodes)
    wp = w * dist.pdf(np.mod(x, TWO_PI))
    wp = wp / wp.sum()
    return basis.phases(x) @ wp


def average_state_quadrature(rho, h, dist: PeriodicGaussian, n_nodes: int = 256,
                             tol: float = QUAD_TOL) -> AveragedState:
    """Average ``U_x rho U_x^dagger`` over ``dist`` by composite Gauss-Legendre.

    The integral runs over ``phi +/- min(pi, 8 dx)`` with the weights
    renormalised to one.  The result is recomputed with twice the nodes and
    the finer value returned; a change above ``tol`` raises
    :class:`QuadratureNotConverged`.
    """
    if n_nodes < 64:
        raise ValueError("n_nodes must be at least 64")
    rho, h = _coerce_pair(rho, h)
    basis = _GapBasis(rho, h)
    coarse = basis.assemble(_quadrature_kernel(basis, dist, n_nodes))
    fine = basis.assemble(_quadrature_kernel(basis, dist, 2 * n_nodes))
    change = float(np.max(np.abs(fine - coarse)))
    if change > tol:
        raise QuadratureNotConverged(
            f"doubling {n_nodes} nodes changed the average by {change:.3e}"
        )
    return AveragedState(validate_density(fine), "quadrature", 2 * n_nodes, dist)


def _mc_block_seeds(seed, n_samples: int):
    n_blocks = -(-n_samples // MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    sizes = [MC_BLOCK] * n_blocks
    sizes[-1] = n_samples - MC_BLOCK * (n_blocks - 1)
    return list(zip(children, sizes))


def _mc_block(basis: _GapBasis, dist: PeriodicGaussian, child, size):
    x = dist.unwrap(dist.sample(size=size, seed=np.random.default_rng(child)))
    return x, basis.phases(x).sum(axis=1)


def average_state_montecarlo(rho, h, dist: PeriodicGaussian, n_samples: int,
                             seed: int = 0, workers: int = 1) -> AveragedState:
    """Empirical average of ``U_x rho U_x^dagger`` over ``n_samples`` draws.

    Samples come in fixed-size blocks, each with its own child of
    ``SeedSequence(seed)``, and block sums are reduced in block order.  The
    result is therefore bitwise identical for any ``workers``.

    ``purity_stderr`` is the delta-method standard error of the purity of
    the returned state.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rho, h = _coerce_pair(rho, h)
    basis = _GapBasis(rho, h)
    blocks = _mc_block_seeds(seed, n_samples)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda b: _mc_block(basis, dist, *b), blocks))
    else:
        results = [_mc_block(basis, dist, *b) for b in blocks]
    kernel = np.zeros(basis.gaps.shape[0], dtype=complex)
    for _, s in results:
        kernel += s
    kernel /= n_samples
    avg = validate_density(basis.assemble(kernel))

    stderr = None
    if n_samples > 1:
        # f_i = tr[rho_avg rho_{x_i}]; purity(avg) - E[purity] ~ 2 mean(f - mean f)
        avg_h = basis.vecs.conj().T @ avg.matrix @ basis.vecs
        coeff = np.zeros(basis.gaps.shape[0], dtype=complex)
        np.add.at(coeff, basis.inverse.ravel(), (avg_h.conj() * basis.rho_h).ravel())
        x = np.concatenate([xs for xs, _ in results])
        f = (coeff @ basis.phases(x)).real
        stderr = float(2.0 * np.std(f, ddof=1) / math.sqrt(n_samples))
    return AveragedState(avg, "montecarlo", n_samples, dist, seed, stderr)


def purity_loss_empirical(state, avg: AveragedState) -> PurityLossResult:
    """``purity(input) - purity(averaged)`` from a numerically averaged state."""
    if isinstance(state, BipartitePureState):
        p_in = 1.0
        dim = state.dim
    else:
        rho = as_density(state)
        p_in = purity(rho)
        dim = rho.dim
    if dim != avg.rho_avg.dim:
        raise DimensionMismatch(f"input dim {dim} vs averaged dim {avg.rho_avg.dim}")
    dg = p_in - purity(avg.rho_avg)
    dx = avg.dist.dx
    return PurityLossResult(dg, avg.method, dg / dx**2, dx)


def _regime_check(dx: float) -> str | None:
    if dx > DX_REGIME:
        msg = f"dx = {dx} exceeds {DX_REGIME}; second-order expansion unreliable"
        warnings.warn(msg, ApproximationRegimeViolated, stacklevel=3)
        return msg
    return None


def purity_loss_analytic_system(rho, h, dx: float) -> PurityLossResult:
    """Second-order purity loss of the probe: ``2 dx^2 (tr[rho^2 H^2] - tr[(rho H)^2])``."""
    spread = commutator_spread(rho, h)
    msg = _regime_check(dx)
    return PurityLossResult(2.0 * dx**2 * spread, "analytic", 2.0 * spread, dx, msg)


def purity_loss_analytic_purified(rho, h, dx: float) -> PurityLossResult:
    """Second-order purity loss of a purification: ``2 dx^2 (Delta H)^2_rho``."""
    var = variance(rho, h)
    msg = _regime_check(dx)
    return PurityLossResult(2.0 * dx**2 * var, "analytic", 2.0 * var, dx, msg)


@dataclass(frozen=True, eq=False)
class ChainResult:
    """QFI bracketed by purity-loss rates ``2 dgamma / dx^2``."""

    report: BoundReport
    system: PurityLossResult
    purified: PurityLossResult
    empirical_system: PurityLossResult | None = None
    empirical_purified: PurityLossResult | None = None
    empirical_chain_ok: bool | None = None

    @property
    def lower_rate(self) -> float:
        return 2.0 * self.system.fragility_ratio

    @property
    def upper_rate(self) -> float:
        return 2.0 * self.purified.fragility_ratio

    @property
    def chain_satisfied(self) -> bool:
        return self.report.chain_satisfied


def empirical_upper_slack(h, dx: float) -> float:
    """Relative shortfall allowed for the empirical upper rate.

    The exact loss of a Gaussian-averaged state is a sum of terms
    ``c (1 - exp(-g^2 dx^2))`` whose second-order form is ``c g^2 dx^2``; since
    ``1 - e^-y >= y (1 - y / 2)`` the empirical rate falls short of the
    analytic one by at most a factor ``1 - g_max^2 dx^2 / 2``.
    """
    w = np.linalg.eigvalsh(as_operator(h).matrix)
    return 0.5 * (w[-1] - w[0]) ** 2 * dx**2


def bound_chain(rho, h, dx: float, phi: float = 1.5, empirical: str | None = "quadrature",
                n_nodes: int = 256, n_samples: int = 100_000, seed: int = 0,
                tol: float = 1e-9) -> ChainResult:
    """Evaluate ``2 dgamma_rho / dx^2 <= F_q(rho) <= 2 dgamma_Psi / dx^2``.

    The analytic rates satisfy the chain exactly.  With ``empirical`` set to
    ``"quadrature"`` or ``"montecarlo"`` the losses are also computed from
    averaged states and checked up to the second-order slack of
    :func:`empirical_upper_slack` (plus three standard errors for Monte Carlo).
    """
    rho = as_density(rho)
    h = as_operator(h)
    report = bound_report(rho, h, tol)
    sys_an = purity_loss_analytic_system(rho, h, dx)
    pur_an = purity_loss_analytic_purified(rho, h, dx)
    if empirical is None:
        return ChainResult(report, sys_an, pur_an)

    dist = PeriodicGaussian(phi, dx)
    psi = purify(rho)
    if empirical == "quadrature":
        avg_s = average_state_quadrature(rho, h, dist, n_nodes)
        avg_p = average_state_quadrature(psi, h, dist, n_nodes)
    elif empirical == "montecarlo":
        avg_s = average_state_montecarlo(rho, h, dist, n_samples, seed)
        avg_p = average_state_montecarlo(psi, h, dist, n_samples, seed)
    else:
        raise ValueError(f"unknown empirical method {empirical!r}")
    emp_s = purity_loss_empirical(rho, avg_s)
    emp_p = purity_loss_empirical(psi, avg_p)
    ok = empirical_chain_ok(report.qfi_mixed, emp_s, emp_p, avg_s, avg_p,
                            empirical_upper_slack(h, dx), tol)
    return ChainResult(report, sys_an, pur_an, emp_s, emp_p, ok)


def _mc_rate_tol(avg: AveragedState, dx: float) -> float:
    """Three standard errors of ``2 dgamma / dx^2`` for Monte Carlo averages."""
    if avg.purity_stderr is None:
        return 0.0
    return 3.0 * 2.0 * avg.purity_stderr / dx**2


def empirical_lower_ok(fq: float, loss: PurityLossResult, avg: AveragedState,
                       tol: float = 1e-9) -> bool:
    return bool(2.0 * loss.fragility_ratio <= fq + tol + _mc_rate_tol(avg, loss.dx))


def empirical_upper_ok(fq: float, loss: PurityLossResult, avg: AveragedState,
                       rel_slack: float, tol: float = 1e-9) -> bool:
    upper = 2.0 * loss.fragility_ratio
    return bool(fq * (1.0 - rel_slack) <= upper + tol + _mc_rate_tol(avg, loss.dx))


def empirical_chain_ok(fq, emp_s, emp_p, avg_s, avg_p, rel_slack, tol) -> bool:
    return (empirical_lower_ok(fq, emp_s, avg_s, tol)
            and empirical_upper_ok(fq, emp_p, avg_p, rel_slack, tol))
