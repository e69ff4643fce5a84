"""Dense linear algebra for probe states.

Everything here works on plain ``numpy`` complex arrays.  The small wrapper
types (:class:`DensityMatrix`, :class:`PureState`, :class:`BipartitePureState`,
:class:`HermitianOperator`) validate on construction and are treated as
immutable afterwards, so they can be shared freely between threads.

Bipartite amplitudes use a row-major ``(system, memory)`` layout, i.e. the
system index varies slowest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    FileParseError,
    NotHermitian,
    NotNormalized,
    NotPSD,
    NotSquare,
    NotUnitTrace,
)


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-9
    trace: float = 1e-9
    norm: float = 1e-9
    psd: float = 1e-10
    recon: float = 1e-9
    ortho: float = 1e-9
    spec: float = 1e-9
    rank: float = 1e-10


DEFAULT_TOL = Tolerances()


def _readonly(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def fix_phases(vectors):
    """Rotate each column so its largest-magnitude component is real positive."""
    vectors = np.array(vectors, dtype=complex)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
    return vectors / phases


def eig_hermitian(a):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as orthonormal columns, each phase-fixed
    so that its largest-magnitude entry is real and positive.
    """
    if isinstance(a, HermitianOperator):
        a = a.matrix
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    try:
        w, v = np.linalg.eigh((a + a.conj().T) / 2)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    w = w[::-1]
    v = fix_phases(v[:, ::-1])
    return w, v


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix, typically the phase generator ``H``."""

    matrix: np.ndarray
    tol: float = DEFAULT_TOL.hermiticity

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise NotSquare(f"expected a square matrix, got shape {m.shape}")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if dev > self.tol:
            raise NotHermitian(f"operator deviates from Hermitian by {dev:.3e}")
        object.__setattr__(self, "matrix", _readonly((m + m.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eig(self):
        return eig_hermitian(self.matrix)


def as_operator(h) -> HermitianOperator:
    return h if isinstance(h, HermitianOperator) else HermitianOperator(h)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix with its spectrum.

    Build instances with :func:`validate_density` (or ``DensityMatrix.from_array``).
    The spectrum is computed eagerly, eigenvalues descending.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    corrections: tuple = ()

    @classmethod
    def from_array(cls, m, tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        return validate_density(m, tol)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def rank(self, tol: float = DEFAULT_TOL.rank) -> int:
        return int(np.sum(self.eigenvalues > tol))

    def support(self, tol: float = DEFAULT_TOL.rank):
        """Eigenvalues and eigenvectors restricted to the support of the state."""
        keep = self.eigenvalues > tol
        return self.eigenvalues[keep], self.eigenvectors[:, keep]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def validate_density(m, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Check that ``m`` is a density matrix and return it as a :class:`DensityMatrix`.

    Small defects are repaired and recorded in ``corrections``: the matrix is
    Hermitised and divided by its trace, and eigenvalues in ``[-psd_tol, 0)``
    are clamped to zero with the spectrum renormalised.

    Raises
    ------
    NotSquare, NotHermitian, NotUnitTrace, NotPSD
    """
    if isinstance(m, DensityMatrix):
        return m
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise NotSquare(f"expected a non-empty square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T))
    if dev > tol.hermiticity:
        raise NotHermitian(f"matrix deviates from Hermitian by {dev:.3e}")
    tr = np.trace(m).real
    if abs(tr - 1.0) > tol.trace:
        raise NotUnitTrace(f"trace is {tr!r}")

    # rounding-level repairs are applied silently
    corrections = []
    if dev > 1e-14:
        corrections.append(f"hermitised (deviation {dev:.1e})")
    rho = (m + m.conj().T) / 2
    if tr != 1.0:
        rho = rho / tr
        if abs(tr - 1.0) > 1e-14:
            corrections.append(f"trace renormalised (was {tr!r})")

    lam, vec = eig_hermitian(rho)
    if lam[-1] < -tol.psd:
        raise NotPSD(f"eigenvalue {lam[-1]:.3e} below -{tol.psd:.0e}")
    if lam[-1] < 0 or lam[0] > 1:
        lam = np.clip(lam, 0.0, 1.0)
        lam = lam / lam.sum()
        rho = (vec * lam) @ vec.conj().T
        corrections.append("spectrum clamped to [0, 1]")
    lam = np.array(lam, dtype=float)
    lam.setflags(write=False)
    return DensityMatrix(_readonly(rho), lam, _readonly(vec), tuple(corrections))


def as_density(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    if isinstance(rho, (PureState, BipartitePureState)):
        return rho.density()
    return validate_density(rho)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    tol: float = DEFAULT_TOL.norm

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        n = np.linalg.norm(a)
        if abs(n - 1.0) > self.tol:
            raise NotNormalized(f"state norm is {n!r}")
        object.__setattr__(self, "amplitudes", _readonly(a / n))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityMatrix:
        return validate_density(self.projector())


@dataclass(frozen=True, eq=False)
class BipartitePureState:
    """Pure state on system (x) memory, system index slowest."""

    dim_system: int
    dim_memory: int
    amplitudes: np.ndarray
    tol: float = DEFAULT_TOL.norm

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).ravel()
        if a.shape[0] != self.dim_system * self.dim_memory:
            raise DimensionMismatch(
                f"{a.shape[0]} amplitudes for dims {self.dim_system}x{self.dim_memory}"
            )
        n = np.linalg.norm(a)
        if abs(n - 1.0) > self.tol:
            raise NotNormalized(f"state norm is {n!r}")
        object.__setattr__(self, "amplitudes", _readonly(a / n))

    @property
    def dim(self) -> int:
        return self.dim_system * self.dim_memory

    def as_pure(self) -> PureState:
        return PureState(self.amplitudes)

    def density(self) -> DensityMatrix:
        """The joint projector ``|Psi><Psi|`` as a density matrix."""
        return self.as_pure().density()


def purify(rho) -> BipartitePureState:
    """Purification ``sum_k sqrt(lambda_k) |psi_k>|k>`` over the support of ``rho``.

    The memory dimension equals the rank of ``rho``.
    """
    rho = as_density(rho)
    lam, vec = rho.support()
    lam = lam / lam.sum()
    amps = vec * np.sqrt(lam)  # column k is sqrt(lambda_k) |psi_k>
    return BipartitePureState(rho.dim, lam.shape[0], amps.reshape(-1))


def partial_trace_memory(psi: BipartitePureState) -> DensityMatrix:
    a = psi.amplitudes.reshape(psi.dim_system, psi.dim_memory)
    return validate_density(a @ a.conj().T)


def unitary(h, x: float) -> np.ndarray:
    """``exp(-i H x)`` built from the eigendecomposition of ``H``."""
    w, v = eig_hermitian(as_operator(h).matrix)
    return (v * np.exp(-1j * w * x)) @ v.conj().T


def evolve(rho, h, x: float) -> DensityMatrix:
    """Return ``U rho U^dagger`` with ``U = exp(-i H x)``."""
    rho = as_density(rho)
    h = as_operator(h)
    if h.dim != rho.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs operator dim {h.dim}")
    u = unitary(h, x)
    return validate_density(u @ rho.matrix @ u.conj().T)


def purity(rho) -> float:
    """``tr[rho^2]``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_density(rho).matrix
    return float(np.sum(np.abs(m) ** 2))


def embed_on_system(h, dim_memory: int) -> HermitianOperator:
    """``H (x) 1_M``."""
    if dim_memory < 1:
        raise ValueError("memory dimension must be >= 1")
    h = as_operator(h)
    return HermitianOperator(np.kron(h.matrix, np.eye(dim_memory)))


# -- JSON interchange ------------------------------------------------------

def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        dim = int(obj.get("dim", re.shape[0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileParseError(f"malformed matrix object: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise FileParseError(f"matrix entries do not match dim {dim}")
    return re + 1j * im


def load_matrix(path) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FileParseError(f"cannot read matrix from {path}: {exc}") from exc
    return matrix_from_json(obj)


def save_matrix(m, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(m)), encoding="utf-8")
