import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DIAG31, MINUS, PLUS, SX, SZ
from qfragility.errors import DimensionMismatch, NotHermitian, NotPSD, NotSquare, NotUnitTrace
from qfragility.random_states import random_density, random_hermitian
from qfragility.states import (
    BipartitePureState,
    HermitianOperator,
    PureState,
    eig_hermitian,
    embed_on_system,
    evolve,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
    partial_trace_memory,
    purify,
    purity,
    save_matrix,
    validate_density,
)

seeds = st.integers(0, 2**32 - 1)


def contract_memory(amps, ds, dm):
    """Oracle: rho_{s s'} = sum_m Psi_{s m} Psi*_{s' m} by explicit loops."""
    out = np.zeros((ds, ds), dtype=complex)
    for s in range(ds):
        for t in range(ds):
            for m in range(dm):
                out[s, t] += amps[s * dm + m] * np.conj(amps[t * dm + m])
    return out


class TestValidateDensity:
    def test_maximally_mixed(self):
        rho = validate_density(np.eye(2) / 2)
        np.testing.assert_allclose(rho.eigenvalues, [0.5, 0.5])

    def test_diagonal(self):
        rho = validate_density(DIAG31)
        np.testing.assert_allclose(rho.eigenvalues, [0.75, 0.25])
        assert rho.corrections == ()

    def test_negative_eigenvalue(self):
        with pytest.raises(NotPSD):
            validate_density(np.diag([1.1, -0.1]))

    def test_errors(self):
        with pytest.raises(NotSquare):
            validate_density(np.ones((2, 3)) / 2)
        with pytest.raises(NotHermitian):
            validate_density(np.array([[0.5, 0.1], [0.0, 0.5]]))
        with pytest.raises(NotUnitTrace):
            validate_density(np.eye(2))

    def test_tiny_negative_is_clamped(self):
        rho = validate_density(np.diag([1 + 5e-11, -5e-11]))
        assert rho.eigenvalues.min() == 0.0
        assert abs(rho.eigenvalues.sum() - 1) < 1e-15
        assert any("clamped" in c for c in rho.corrections)

    def test_immutable(self):
        rho = validate_density(DIAG31)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1


class TestEig:
    def test_sigma_z(self):
        w, v = eig_hermitian(SZ)
        np.testing.assert_allclose(w, [1, -1])
        np.testing.assert_allclose(v, np.eye(2), atol=1e-15)

    def test_sigma_x(self):
        w, v = eig_hermitian(SX)
        np.testing.assert_allclose(w, [1, -1])
        np.testing.assert_allclose(v[:, 0], PLUS, atol=1e-15)
        # largest-magnitude entry real positive; ties resolve to the first entry
        np.testing.assert_allclose(v[:, 1], MINUS, atol=1e-15)
        np.testing.assert_allclose((v * w) @ v.conj().T, SX, atol=1e-15)

    def test_zero(self):
        w, _ = eig_hermitian(np.zeros((3, 3)))
        np.testing.assert_array_equal(w, 0)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, dim=st.integers(1, 16))
    def test_residual_and_orthonormality(self, seed, dim):
        a = random_hermitian(dim, seed=seed, scale=3.0).matrix
        w, v = eig_hermitian(a)
        assert np.all(np.diff(w) <= 0)
        assert np.max(np.abs(a - (v * w) @ v.conj().T)) < 1e-10
        assert np.max(np.abs(v.conj().T @ v - np.eye(dim))) < 1e-9
        piv = v[np.argmax(np.abs(v), axis=0), np.arange(dim)]
        np.testing.assert_allclose(piv.imag, 0, atol=1e-15)
        assert np.all(piv.real > 0)


class TestPurification:
    def test_maximally_mixed(self):
        psi = purify(np.eye(2) / 2)
        assert (psi.dim_system, psi.dim_memory) == (2, 2)
        a = psi.amplitudes.reshape(2, 2)
        # Schmidt coefficients all 1/sqrt(2)
        np.testing.assert_allclose(np.linalg.svd(a, compute_uv=False), [2**-0.5] * 2)
        np.testing.assert_allclose(partial_trace_memory(psi).matrix, np.eye(2) / 2, atol=1e-15)

    def test_pure(self):
        psi = purify(np.diag([1.0, 0.0]))
        assert psi.dim_memory == 1
        np.testing.assert_allclose(psi.amplitudes, [1, 0])

    def test_diag(self):
        psi = purify(DIAG31)
        np.testing.assert_allclose(psi.amplitudes, [np.sqrt(0.75), 0, 0, 0.5], atol=1e-15)
        np.testing.assert_allclose(
            contract_memory(psi.amplitudes, 2, 2), DIAG31, atol=1e-15
        )

    def test_partial_trace_examples(self):
        bell = BipartitePureState(2, 2, np.array([1, 0, 0, 1]) / np.sqrt(2))
        np.testing.assert_allclose(partial_trace_memory(bell).matrix, np.eye(2) / 2)
        v = np.array([0.6, 0.8j])
        prod = BipartitePureState(2, 2, np.kron(v, [1, 0]))
        np.testing.assert_allclose(partial_trace_memory(prod).matrix, np.outer(v, v.conj()))
        s = BipartitePureState(2, 2, [np.sqrt(0.75), 0, 0, 0.5])
        np.testing.assert_allclose(partial_trace_memory(s).matrix, DIAG31, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, dim=st.integers(1, 8), data=st.data())
    def test_round_trip(self, seed, dim, data):
        rank = data.draw(st.integers(1, dim))
        rho = random_density(dim, rank, seed=seed)
        psi = purify(rho)
        assert psi.dim_memory == rank
        back = contract_memory(psi.amplitudes, psi.dim_system, psi.dim_memory)
        assert np.max(np.abs(back - rho.matrix)) < 1e-10
        schmidt = np.linalg.svd(psi.amplitudes.reshape(dim, rank), compute_uv=False)
        np.testing.assert_allclose(schmidt**2, rho.eigenvalues[:rank], atol=1e-10)


class TestEvolve:
    def test_identity_at_zero(self, rng):
        rho = random_density(3, seed=rng)
        h = random_hermitian(3, seed=rng)
        np.testing.assert_allclose(evolve(rho, h, 0.0).matrix, rho.matrix, atol=1e-15)

    def test_plus_to_minus(self):
        out = evolve(np.outer(PLUS, PLUS), SZ / 2, np.pi)
        np.testing.assert_allclose(out.matrix, np.outer(MINUS, MINUS), atol=1e-15)

    def test_eigenstate_unchanged(self):
        rho = np.diag([0.0, 1.0])
        np.testing.assert_allclose(evolve(rho, SZ / 2, 0.77).matrix, rho, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            evolve(np.eye(2) / 2, np.eye(3), 0.1)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, dim=st.integers(1, 8), x=st.floats(-10, 10))
    def test_against_expm_and_spectrum(self, seed, dim, x):
        rng = np.random.default_rng(seed)
        rho = random_density(dim, seed=rng)
        h = random_hermitian(dim, seed=rng, scale=2.0)
        u = scipy.linalg.expm(-1j * h.matrix * x)
        out = evolve(rho, h, x)
        assert np.max(np.abs(out.matrix - u @ rho.matrix @ u.conj().T)) < 1e-10
        assert np.max(np.abs(out.eigenvalues - rho.eigenvalues)) < 1e-10


class TestPurity:
    def test_values(self):
        assert purity(np.eye(2) / 2) == pytest.approx(0.5, abs=1e-15)
        assert purity(np.outer(PLUS, PLUS)) == pytest.approx(1.0, abs=1e-15)
        assert purity(DIAG31) == pytest.approx(5 / 8, abs=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, dim=st.integers(1, 8), data=st.data())
    def test_bounds(self, seed, dim, data):
        rho = random_density(dim, data.draw(st.integers(1, dim)), seed=seed)
        p = purity(rho)
        assert 1 / dim - 1e-12 <= p <= 1 + 1e-12
        assert (abs(p - 1) < 1e-9) == (abs(rho.eigenvalues[0] - 1) < 1e-9)


class TestEmbed:
    def test_examples(self):
        np.testing.assert_array_equal(embed_on_system(SZ, 1).matrix, SZ)
        np.testing.assert_array_equal(embed_on_system(SZ, 2).matrix, np.diag([1, 1, -1, -1]))
        assert not np.any(embed_on_system(np.zeros((2, 2)), 3).matrix)
        assert embed_on_system(SZ, 3).dim == 6


def test_pure_state_requires_normalisation():
    with pytest.raises(ValueError):
        PureState([1.0, 1.0])
    with pytest.raises(NotHermitian):
        HermitianOperator([[0, 1], [0, 0]])


def test_matrix_json_round_trip(tmp_path):
    m = np.array([[0.5, 0.25j], [-0.25j, 0.5]])
    obj = json.loads(json.dumps(matrix_to_json(m)))
    assert obj["dim"] == 2 and set(obj) == {"dim", "re", "im"}
    np.testing.assert_array_equal(matrix_from_json(obj), m)
    save_matrix(m, tmp_path / "m.json")
    np.testing.assert_array_equal(load_matrix(tmp_path / "m.json"), m)
