import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from helpers import rand_herm, rand_unit_herm
from qmereology.factorization import (build_split, factorization_unitary, from_gell_mann,
                                      gell_mann_basis, gell_mann_coefficients,
                                      gell_mann_generator, random_theta, split_hamiltonian,
                                      transform_hamiltonian)

dims = st.integers(2, 6)
seeds = st.integers(0, 2 ** 32 - 1)
shapes = st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3), (1, 3), (3, 1)])

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def test_gell_mann_d2_is_pauli():
    np.testing.assert_allclose(gell_mann_basis(2), PAULI)


def test_gell_mann_d3_standard_lambda8():
    lam8 = np.diag([1, 1, -2]) / np.sqrt(3)
    np.testing.assert_allclose(gell_mann_basis(3)[-1], lam8, atol=1e-15)


@given(dims)
def test_gell_mann_orthonormal_traceless_hermitian(D):
    b = gell_mann_basis(D)
    assert b.shape == (D * D - 1, D, D)
    np.testing.assert_allclose(np.einsum("aij,bji->ab", b, b), 2 * np.eye(D * D - 1), atol=1e-13)
    np.testing.assert_allclose(np.einsum("aii->a", b), 0, atol=1e-13)
    np.testing.assert_allclose(b, b.conj().transpose(0, 2, 1))


def test_gell_mann_basis_is_read_only():
    with pytest.raises(ValueError):
        gell_mann_basis(3)[0, 0, 0] = 5
    with pytest.raises(ValueError):
        gell_mann_basis(1)


@given(dims, seeds)
def test_generator_by_index_matches_basis(D, seed):
    theta = np.random.default_rng(seed).standard_normal(D * D - 1)
    np.testing.assert_allclose(gell_mann_generator(theta, D),
                               np.einsum("a,aij->ij", theta, gell_mann_basis(D)), atol=1e-13)


@given(dims, seeds)
def test_coefficients_roundtrip(D, seed):
    rng = np.random.default_rng(seed)
    X = rand_unit_herm(rng, D)
    c = gell_mann_coefficients(X)
    np.testing.assert_allclose(from_gell_mann(c, gell_mann_basis(D)), X, atol=1e-13)


@given(dims, seeds, st.floats(0.0, 3.0))
def test_unitary_is_special_unitary(D, seed, norm):
    rng = np.random.default_rng(seed)
    theta = random_theta(rng, D, norm)
    assert np.linalg.norm(theta) == pytest.approx(norm, abs=1e-12)
    U = factorization_unitary(theta, D)
    np.testing.assert_allclose(U @ U.conj().T, np.eye(D), atol=1e-12)
    assert abs(np.linalg.det(U) - 1) < 1e-10


def test_unitary_matches_expm(rng):
    theta = rng.standard_normal(8)
    G = np.einsum("a,aij->ij", theta, gell_mann_basis(3))
    np.testing.assert_allclose(factorization_unitary(theta, 3), expm(1j * G), atol=1e-12)
    np.testing.assert_allclose(factorization_unitary(theta, gell_mann_basis(3)), expm(1j * G),
                               atol=1e-12)
    np.testing.assert_allclose(factorization_unitary(np.zeros(8), 3), np.eye(3), atol=1e-15)


def test_unitary_input_checks():
    with pytest.raises(ValueError):
        factorization_unitary(np.zeros(7), 3)
    with pytest.raises(ValueError):
        factorization_unitary(np.full(8, np.nan), 3)


def test_transform_preserves_spectrum(rng):
    H = rand_herm(rng, 6)
    U = factorization_unitary(rng.standard_normal(35), 6)
    Hp = transform_hamiltonian(H, U)
    np.testing.assert_allclose(Hp, U.conj().T @ H @ U)
    np.testing.assert_allclose(np.linalg.eigvalsh(Hp), np.linalg.eigvalsh(H), atol=1e-12)


@given(shapes, seeds)
def test_split_reconstructs(shape, seed):
    rng = np.random.default_rng(seed)
    H = rand_herm(rng, shape[0] * shape[1])
    s = split_hamiltonian(H, shape)
    np.testing.assert_allclose(s.reconstruct(), H, atol=1e-12)
    assert np.all(np.diff(s.lambdas) <= 1e-12)
    assert s.n_int <= (shape[0] ** 2 - 1) * (shape[1] ** 2 - 1)
    for ops, d in ((s.a_ops, shape[0]), (s.b_ops, shape[1])):
        if s.n_int:
            gram = np.einsum("aij,bji->ab", ops, ops)
            np.testing.assert_allclose(gram, np.eye(s.n_int), atol=1e-12)
            np.testing.assert_allclose(np.einsum("aii->a", ops), 0, atol=1e-12)
            np.testing.assert_allclose(ops, ops.conj().transpose(0, 2, 1), atol=1e-13)
    assert abs(np.trace(s.h_a)) < 1e-12 and abs(np.trace(s.h_b)) < 1e-12


@given(shapes, seeds)
def test_split_norm_identity(shape, seed):
    # the pieces are Frobenius-orthogonal
    rng = np.random.default_rng(seed)
    H = rand_herm(rng, shape[0] * shape[1])
    s = split_hamiltonian(H, shape)
    D = shape[0] * shape[1]
    total = s.trace ** 2 / D + s.self_norm ** 2 + s.interaction_norm ** 2
    assert total == pytest.approx(np.linalg.norm(H) ** 2, rel=1e-12)


def test_split_recovers_product_term(rng):
    a, b = rand_unit_herm(rng, 3), rand_unit_herm(rng, 2)
    h_a, h_b = rand_unit_herm(rng, 3), rand_unit_herm(rng, 2)
    H = np.kron(h_a, np.eye(2)) + np.kron(np.eye(3), h_b) + 2.5 * np.kron(a, b) + 4 * np.eye(6)
    s = split_hamiltonian(H, (3, 2))
    assert s.n_int == 1
    assert s.lambdas[0] == pytest.approx(2.5)
    assert s.trace == pytest.approx(24.0)
    np.testing.assert_allclose(s.h_a, h_a, atol=1e-13)
    np.testing.assert_allclose(s.h_b, h_b, atol=1e-13)
    assert abs(abs(np.trace(s.a_ops[0] @ a)) - 1) < 1e-12
    np.testing.assert_allclose(s.lambdas[0] * np.kron(s.a_ops[0], s.b_ops[0]),
                               2.5 * np.kron(a, b), atol=1e-12)


def test_split_without_interaction():
    H = np.kron(np.diag([1.0, -1.0]), np.eye(3))
    s = split_hamiltonian(H, (2, 3))
    assert s.n_int == 0
    assert s.qml_ratio == 0
    assert split_hamiltonian(np.eye(4), (2, 2)).qml_ratio == np.inf


def test_split_shape_mismatch():
    with pytest.raises(ValueError):
        split_hamiltonian(np.eye(6), (2, 2))


def test_build_split_roundtrip(rng):
    a, b = rand_unit_herm(rng, 2), rand_unit_herm(rng, 2)
    s = build_split((2, 2), np.zeros((2, 2)), np.zeros((2, 2)), [(1.5, a, b)])
    t = split_hamiltonian(s.reconstruct(), (2, 2))
    assert t.lambdas == pytest.approx([1.5])
