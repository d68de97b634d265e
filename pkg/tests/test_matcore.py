import numpy as np
import pytest
from hypothesis import given, strategies as st

from mifisher.errors import DimMismatch, NotHermitian
from mifisher.matcore import (
    PAULI_X,
    BipartiteDims,
    allclose,
    embed,
    expi_hermitian,
    herm_eig,
    kron,
    kron_all,
    max_abs,
    partial_trace,
    projector,
)
from mifisher.states import random_density_matrix, random_hermitian

from conftest import seeds


def test_diagonal_input_gives_identity_columns():
    e = herm_eig(np.diag([0.25, 0.75]))
    assert np.allclose(e.eigenvalues, [0.25, 0.75], atol=1e-15)
    assert allclose(e.eigenvectors, np.eye(2), atol=1e-15)


def test_pauli_x_spectrum():
    e = herm_eig(PAULI_X)
    assert np.allclose(e.eigenvalues, [-1.0, 1.0], atol=1e-14)


def test_identity_ties_are_deterministic():
    e = herm_eig(np.eye(4))
    assert allclose(e.eigenvectors, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("seed", range(100))
def test_random_6x6_reconstruction(seed):
    h = random_hermitian(6, np.random.default_rng(seed))
    e = herm_eig(h)
    assert max_abs(e.reconstruct() - h) <= 1e-10
    assert max_abs(e.eigenvectors.conj().T @ e.eigenvectors - np.eye(6)) <= 1e-10
    assert np.all(np.diff(e.eigenvalues) >= 0)


@given(seeds, st.integers(min_value=2, max_value=8))
def test_reconstruction_and_unitarity(seed, dim):
    h = random_hermitian(dim, np.random.default_rng(seed))
    e = herm_eig(h)
    assert max_abs(e.reconstruct() - h) <= 1e-10
    assert max_abs(e.eigenvectors.conj().T @ e.eigenvectors - np.eye(dim)) <= 1e-10


def test_eigenvalues_match_lapack(rng):
    h = random_hermitian(5, rng)
    assert np.allclose(herm_eig(h).eigenvalues, np.linalg.eigvalsh(h), atol=1e-12)


def test_degenerate_spectrum(rng):
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    h = u @ np.diag([1.0, 1.0, 2.0, 2.0]) @ u.conj().T
    e = herm_eig(h)
    assert np.allclose(e.eigenvalues, [1, 1, 2, 2], atol=1e-12)
    assert max_abs(e.reconstruct() - h) <= 1e-10


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitian):
        herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_kron_examples():
    assert allclose(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert allclose(kron(np.diag([1, 0]), np.diag([0, 1])), np.diag([0, 1, 0, 0]))


@given(seeds)
def test_kron_mixed_product_and_associativity(seed):
    r = np.random.default_rng(seed)
    a, b, c, d = (r.normal(size=(2, 2)) + 1j * r.normal(size=(2, 2)) for _ in range(4))
    assert max_abs(kron(a, b) @ kron(c, d) - kron(a @ c, b @ d)) <= 1e-12
    assert max_abs(kron(kron(a, b), c) - kron(a, kron(b, c))) <= 1e-12
    assert max_abs(kron_all(a, b, c) - kron(a, kron(b, c))) <= 1e-12


@given(seeds)
def test_partial_trace_of_product(seed):
    r = np.random.default_rng(seed)
    ra, rb = random_density_matrix(2, r), random_density_matrix(3, r)
    dims = BipartiteDims(2, 3)
    assert max_abs(partial_trace(kron(ra, rb), dims, "a") - ra) <= 1e-12
    assert max_abs(partial_trace(kron(ra, rb), dims, "b") - rb) <= 1e-12


def test_partial_trace_bell_phase_is_maximally_mixed():
    for theta in np.linspace(0, 2 * np.pi, 7):
        psi = np.array([1, 0, 0, np.exp(1j * theta)]) / np.sqrt(2)
        for party in "ab":
            assert max_abs(partial_trace(projector(psi), BipartiteDims(2, 2), party) - np.eye(2) / 2) <= 1e-12


@given(seeds, st.floats(-2, 2), st.floats(-2, 2))
def test_partial_trace_linear_and_trace_preserving(seed, alpha, beta):
    r = np.random.default_rng(seed)
    dims = BipartiteDims(3, 2)
    x, y = random_hermitian(6, r), random_hermitian(6, r)
    for keep in "ab":
        lhs = partial_trace(alpha * x + beta * y, dims, keep)
        rhs = alpha * partial_trace(x, dims, keep) + beta * partial_trace(y, dims, keep)
        assert max_abs(lhs - rhs) <= 1e-12
        assert abs(np.trace(partial_trace(x, dims, keep)) - np.trace(x)) <= 1e-12


def test_partial_trace_dim_mismatch():
    with pytest.raises(DimMismatch):
        partial_trace(np.eye(5), BipartiteDims(2, 2), "a")


def test_embed_places_operator_on_party():
    z = np.diag([1.0, -1.0])
    assert allclose(embed(z, BipartiteDims(2, 3), "a"), np.kron(z, np.eye(3)))
    assert allclose(embed(z, BipartiteDims(3, 2), "b"), np.kron(np.eye(3), z))


@given(seeds)
def test_expi_hermitian_is_unitary(seed):
    h = random_hermitian(3, np.random.default_rng(seed))
    u = expi_hermitian(h)
    assert max_abs(u.conj().T @ u - np.eye(3)) <= 1e-12
