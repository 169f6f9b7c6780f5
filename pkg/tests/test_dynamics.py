import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import (commuting_split, finite_diff, rand_herm, rand_ket, rand_product_state,
                     rand_unit_herm, single_term_split)
from qmereology.dynamics import (ProductState, decoherence_rates, decoherence_term,
                                 effective_hamiltonian, joint_eigenbasis, linear_entropy_at,
                                 pointer_distribution, pointer_entropy, pointer_entropy_at,
                                 reduced_evolution_terms, reduced_state_taylor, s_lin_ddot,
                                 s_lin_oracle, s_pointer_ddot, s_pointer_ddot_qml,
                                 variance_rate)
from qmereology.factorization import build_split, split_hamiltonian
from qmereology.gpo import build_gpo, gaussian_probe
from qmereology.hilbert import Propagator, commutator, partial_trace, variance
from qmereology.mereology import OscillatorModel, build_coupled_oscillators

seeds = st.integers(0, 2 ** 32 - 1)
shapes = st.sampled_from([(2, 2), (2, 3), (3, 2), (3, 3)])


def random_instance(rng, shape):
    H = rand_herm(rng, shape[0] * shape[1])
    return H, split_hamiltonian(H, shape), rand_product_state(rng, shape)


def exact_rho_a(H, state, t, prop=None):
    prop = Propagator(H) if prop is None else prop
    return partial_trace(prop.evolve(state.joint(), t), state.shape, "A")


def test_product_state_validation():
    st_ = ProductState(np.array([1.0, 0]), np.array([1.0, 1.0]) / np.sqrt(2))
    assert st_.shape == (2, 2)
    np.testing.assert_allclose(st_.joint(), [0.5 ** 0.5, 0.5 ** 0.5, 0, 0])
    with pytest.raises(ValueError, match="normalized"):
        ProductState(np.array([2.0, 0]), np.array([1.0]))
    with pytest.raises(ValueError):
        ProductState(np.zeros(2), np.array([1.0]))


def test_state_shape_mismatch(rng):
    _, split, _ = random_instance(rng, (2, 3))
    with pytest.raises(ValueError):
        s_lin_ddot(split, rand_product_state(rng, (3, 2)))


def test_s_lin_two_qubit_ising():
    # H = lam sz (x) sz on |+>|+>: rho_A coherence decays as cos(2 lam t)
    lam = 0.7
    sz = np.diag([1.0, -1.0])
    split = build_split((2, 2), np.zeros((2, 2)), np.zeros((2, 2)),
                        [(2 * lam, sz / np.sqrt(2), sz / np.sqrt(2))])
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    # S_lin = (1 - cos^2(2 lam t)) / 2 = 2 lam^2 t^2 + O(t^4)
    assert s_lin_ddot(split, ProductState(plus, plus)) == pytest.approx(2 * lam ** 2, rel=1e-12)


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3)])
def test_s_lin_matches_oracle(rng, shape):
    for _ in range(3):
        H, split, state = random_instance(rng, shape)
        assert s_lin_ddot(split, state) == pytest.approx(s_lin_oracle(H, state), rel=1e-2)


def test_s_lin_oracle_window_warning(rng):
    H, _, state = random_instance(rng, (2, 2))
    with pytest.warns(RuntimeWarning):
        s_lin_oracle(H, state, t_max=1.0 / np.linalg.norm(H))
    with pytest.raises(ValueError):
        s_lin_oracle(H, state, n_points=3)
    assert s_lin_oracle(np.zeros((4, 4)), state) == 0.0


@given(shapes, seeds)
def test_s_lin_single_term_identity(shape, seed):
    rng = np.random.default_rng(seed)
    split, lam, a, b = single_term_split(rng, shape)
    state = rand_product_state(rng, shape)
    expected = 2 * lam ** 2 * variance(a, state.psi_a) * variance(b, state.psi_b)
    assert abs(s_lin_ddot(split, state) - expected) < 1e-10


@given(shapes, seeds)
def test_s_lin_ignores_self_hamiltonians_and_is_nonnegative(shape, seed):
    rng = np.random.default_rng(seed)
    H, split, state = random_instance(rng, shape)
    bare = build_split(shape, np.zeros_like(split.h_a), np.zeros_like(split.h_b),
                       list(zip(split.lambdas, split.a_ops, split.b_ops)))
    val = s_lin_ddot(split, state)
    assert val == pytest.approx(s_lin_ddot(bare, state), abs=1e-12)
    assert val >= -1e-12


def test_s_lin_zero_on_eigenstate(rng):
    split, _, a, b = single_term_split(rng, (3, 3))
    _, va = np.linalg.eigh(a)
    state = ProductState(va[:, 1], rand_ket(rng, 3))
    assert abs(s_lin_ddot(split, state)) < 1e-12


def test_reduced_state_taylor_matches_evolution(rng):
    H, split, state = random_instance(rng, (2, 3))
    rho0, rho1, rho2 = reduced_state_taylor(split, state)
    prop = Propagator(H)
    h = 1e-3
    d1, d2 = finite_diff(lambda t: exact_rho_a(H, state, t, prop), h)
    np.testing.assert_allclose(rho0, state.rho_a)
    np.testing.assert_allclose(rho1, d1, atol=1e-5)
    np.testing.assert_allclose(2 * rho2, d2, atol=1e-4)
    assert abs(np.trace(rho1)) < 1e-12 and abs(np.trace(rho2)) < 1e-12


@given(shapes, seeds)
def test_variance_rate_general_matches_exact(shape, seed):
    rng = np.random.default_rng(seed)
    H, split, state = random_instance(rng, shape)
    O = rand_herm(rng, shape[0])
    prop = Propagator(H)

    def var(t):
        r = exact_rho_a(H, state, t, prop)
        return (np.trace(r @ O @ O) - np.trace(r @ O) ** 2).real

    d1, _ = finite_diff(var, 1e-4)
    assert variance_rate(split, O, state) == pytest.approx(d1, rel=1e-5, abs=1e-7)


def test_variance_rate_qml(rng):
    split = commuting_split(rng, (3, 2), n_terms=1)
    O = split.a_ops[0]
    state = rand_product_state(rng, (3, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        q = variance_rate(split, O, state, mode="qml")
    # O commutes with the interaction, so only H_A moves its variance
    g = variance_rate(split, O, state, mode="general")
    assert q == pytest.approx(g, abs=1e-12)
    with pytest.warns(RuntimeWarning, match="does not commute"):
        variance_rate(split, rand_herm(rng, 3), state, mode="qml")
    with pytest.raises(ValueError):
        variance_rate(split, O, state, mode="other")


@given(shapes, seeds)
def test_pointer_derivatives_match_finite_differences(shape, seed):
    rng = np.random.default_rng(seed)
    H, split, state = random_instance(rng, shape)
    _, basis = np.linalg.eigh(rand_herm(rng, shape[0]))
    dist = pointer_distribution(split, basis, state)
    prop = Propagator(H)
    pops = lambda t: np.einsum("ij,ik,kj->j", basis.conj(), exact_rho_a(H, state, t, prop),
                               basis).real
    d1, d2 = finite_diff(pops, 1e-3)
    np.testing.assert_allclose(dist.p_dot, d1, atol=1e-5 * max(1, np.linalg.norm(H)))
    np.testing.assert_allclose(dist.p_ddot, d2, atol=1e-3 * max(1, np.linalg.norm(H)) ** 2)
    _, s2 = finite_diff(lambda t: pointer_entropy_at(H, state, basis, t, prop), 1e-3)
    assert s_pointer_ddot(dist) == pytest.approx(s2, rel=1e-3, abs=1e-4)


def test_pointer_distribution_orders(rng):
    _, split, state = random_instance(rng, (2, 2))
    d0 = pointer_distribution(split, np.eye(2), state, order=0)
    assert d0.p_dot is None and d0.p.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        s_pointer_ddot(d0)
    with pytest.raises(ValueError):
        pointer_distribution(split, np.ones((2, 2)), state)
    assert pointer_entropy(state.rho_a, np.eye(2)) == pytest.approx(1 - np.sum(d0.p ** 2))


@given(st.sampled_from([(2, 2), (3, 2), (3, 3)]), seeds, st.integers(1, 3))
def test_qml_pointer_form_agrees_with_general(shape, seed, n_terms):
    rng = np.random.default_rng(seed)
    split = commuting_split(rng, shape, n_terms=n_terms)
    basis, _ = joint_eigenbasis(split.a_ops)
    state = rand_product_state(rng, shape)
    general = s_pointer_ddot(pointer_distribution(split, basis, state))
    assert s_pointer_ddot_qml(split, basis, state) == pytest.approx(general, abs=1e-8)


def test_joint_eigenbasis(rng):
    split = commuting_split(rng, (3, 2), n_terms=2)
    vecs, vals = joint_eigenbasis(split.a_ops)
    for a, v in zip(split.a_ops, vals):
        np.testing.assert_allclose(vecs.conj().T @ a @ vecs, np.diag(v), atol=1e-12)
    with pytest.raises(ValueError, match="do not commute"):
        joint_eigenbasis([rand_unit_herm(rng, 3), rand_unit_herm(rng, 3)])


def test_decoherence_rates_formula(rng):
    split, lam, a, b = single_term_split(rng, (3, 3))
    state = rand_product_state(rng, (3, 3))
    model = decoherence_rates(split, state)
    ev = np.diag(model.basis.conj().T @ a @ model.basis).real
    var_b = variance(b, state.psi_b)
    expected = lam ** 2 * var_b * (ev[:, None] - ev[None, :]) ** 2
    np.testing.assert_allclose(model.gamma, expected, atol=1e-12)
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_allclose(model.tau[off], np.sqrt(2 / expected[off]))
    assert np.all(np.isinf(np.diag(model.tau)))
    np.testing.assert_allclose(model.h_eff_a, effective_hamiltonian(split, state))


def test_decoherence_needs_interaction(rng):
    split = build_split((2, 2), rand_unit_herm(rng, 2), rand_unit_herm(rng, 2), [])
    state = rand_product_state(rng, (2, 2))
    with pytest.raises(ValueError):
        decoherence_rates(split, state)
    unitary, decoh, model = reduced_evolution_terms(split, state, 0.1)
    assert model is None
    np.testing.assert_allclose(decoh, 0)


@pytest.mark.parametrize("t", [1e-3, 3e-3])
def test_reduced_evolution_terms_sum_to_derivative(rng, t):
    H, split, state = random_instance(rng, (2, 3))
    unitary, decoh, model = reduced_evolution_terms(split, state, t)
    assert model is None  # generic A_a do not commute
    prop = Propagator(H)
    h = 1e-5
    deriv = (exact_rho_a(H, state, t + h, prop) - exact_rho_a(H, state, t - h, prop)) / (2 * h)
    err = np.linalg.norm(unitary + decoh - deriv)
    assert err < 50 * (t * np.linalg.norm(H)) ** 2


def test_decoherence_term_is_linear_in_t(rng):
    split, *_ = single_term_split(rng, (3, 2))
    state = rand_product_state(rng, (3, 2))
    np.testing.assert_allclose(decoherence_term(split, state, 0.2),
                               2 * decoherence_term(split, state, 0.1), atol=1e-14)
    # trace preserving and Hermitian
    D = decoherence_term(split, state, 0.1)
    assert abs(np.trace(D)) < 1e-13
    np.testing.assert_allclose(D, D.conj().T, atol=1e-13)


def test_linear_entropy_at_zero_time(rng):
    H, _, state = random_instance(rng, (2, 2))
    assert abs(linear_entropy_at(H, state, 0.0)) < 1e-12


def test_oracle_zero_interaction(rng):
    H = np.kron(rand_herm(rng, 3), np.eye(3)) + np.kron(np.eye(3), rand_herm(rng, 3))
    state = rand_product_state(rng, (3, 3))
    assert abs(s_lin_oracle(H, state)) < 1e-8 * np.linalg.norm(H) ** 2


def test_oracle_single_term_and_window_convergence(rng):
    split, lam, a, b = single_term_split(rng, (3, 3))
    H = split.reconstruct()
    state = rand_product_state(rng, (3, 3))
    expected = 2 * lam ** 2 * variance(a, state.psi_a) * variance(b, state.psi_b)
    assert s_lin_oracle(H, state) == pytest.approx(expected, rel=1e-2)
    H = rand_herm(rng, 9)
    t = 0.04 / np.linalg.norm(H)
    c1, c2 = s_lin_oracle(H, state, t_max=t), s_lin_oracle(H, state, t_max=t / 2)
    assert abs(c2 - c1) < 5e-3 * abs(c1)


def test_variance_rate_phi_on_oscillator():
    H, split = build_coupled_oscillators(OscillatorModel(d=5, mass=1.0, omega=1.0))
    g = build_gpo(5)
    rng = np.random.default_rng(3)
    # a complex probe so the rate does not vanish by symmetry
    psi_a = gaussian_probe(g, 1.0, center=0.5) * np.exp(1j * rng.uniform(0, 1, 5))
    state = ProductState(psi_a, gaussian_probe(g, 1.0, center=-0.3))
    prop = Propagator(H)

    def var(t):
        r = exact_rho_a(H, state, t, prop)
        return (np.trace(r @ g.phi @ g.phi) - np.trace(r @ g.phi) ** 2).real

    d1, _ = finite_diff(var, 1e-4 / np.linalg.norm(H))
    assert variance_rate(split, g.phi, state) == pytest.approx(d1, rel=1e-2)


def test_variance_rate_zero_for_conserved_observable(rng):
    split = commuting_split(rng, (3, 2), n_terms=1, self_scale=0.0)
    state = rand_product_state(rng, (3, 2))
    O = np.diag(rng.standard_normal(3)).astype(complex)
    for mode in ("general", "qml"):
        assert abs(variance_rate(split, O, state, mode=mode)) < 1e-12


def test_qml_general_gap_is_interaction_bracket(rng):
    _, split, state = random_instance(rng, (3, 2))
    O = rand_herm(rng, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        gap = variance_rate(split, O, state) - variance_rate(split, O, state, mode="qml")
    b_means = [np.vdot(state.psi_b, b @ state.psi_b).real for b in split.b_ops]
    h = sum(lam * bm * a for lam, bm, a in zip(split.lambdas, b_means, split.a_ops))
    psi = state.psi_a
    ev = lambda X: np.vdot(psi, X @ psi)
    bracket = ev(1j * commutator(h, O @ O)) - 2 * ev(1j * commutator(h, O)) * ev(O)
    assert gap == pytest.approx(bracket.real, abs=1e-12)
