"""Short-time entanglement and pointer-entropy dynamics of a split Hamiltonian.

Everything here is evaluated for an initial product state
``|psi_A> (x) |psi_B>`` and expanded around ``t = 0``.  The reduced state of
``A`` is written ``rho_A(t) = rho0 + t rho1 + t^2 rho2 + O(t^3)``; all
closed forms below are built from that expansion, and exact-evolution
oracles (``s_lin_oracle`` and friends) are provided to check them.

Note that the entanglement coefficient ``s_lin_ddot`` is the coefficient of
``t^2`` in ``S_lin(t)`` itself, not half the second derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_state, check_hermitian
from .factorization import HamiltonianSplit
from .hilbert import (Propagator, as_shape, commutator, expectation, fix_phases,
                      linear_entropy, partial_trace)


@dataclass(frozen=True, eq=False)
class ProductState:
    """Unentangled pure state ``psi_A (x) psi_B``."""

    psi_a: np.ndarray
    psi_b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "psi_a", as_state(self.psi_a, "psi_A"))
        object.__setattr__(self, "psi_b", as_state(self.psi_b, "psi_B"))

    @property
    def shape(self):
        return as_shape((self.psi_a.size, self.psi_b.size))

    @property
    def rho_a(self):
        return np.outer(self.psi_a, self.psi_a.conj())

    @property
    def rho_b(self):
        return np.outer(self.psi_b, self.psi_b.conj())

    def joint(self):
        return np.kron(self.psi_a, self.psi_b)


def _check_state(split, state):
    if tuple(state.shape) != tuple(split.shape):
        raise ValueError(f"state shape {tuple(state.shape)} does not match split "
                         f"shape {tuple(split.shape)}")


def _mean_ops(ops, psi):
    """``<psi|X_k|psi>`` for a stack of operators."""
    return np.einsum("i,kij,j->k", psi.conj(), ops, psi)


def _second_moments(ops, psi):
    """``G[k, m] = <psi|X_k X_m|psi>``."""
    v = ops @ psi  # (K, d)
    # <X_k X_m> = (X_k^dag psi)^dag (X_m psi) = (X_k psi)^* . (X_m psi) for Hermitian X
    return v.conj() @ v.T


# ---------------------------------------------------------------------------
# entanglement growth

def s_lin_ddot(split: HamiltonianSplit, state: ProductState) -> float:
    """Coefficient of ``t^2`` in the linear entanglement entropy of ``A``.

    ``2 sum_{ab} lambda_a lambda_b Re[Cov_A(a, b) Cov_B(a, b)]`` with
    ``Cov(a, b) = <X_a X_b> - <X_a><X_b>`` in the initial product state.  The
    self Hamiltonians do not contribute at this order.
    """
    _check_state(split, state)
    if split.n_int == 0:
        return 0.0
    lam = split.lambdas
    ma = _mean_ops(split.a_ops, state.psi_a)
    mb = _mean_ops(split.b_ops, state.psi_b)
    cov_a = _second_moments(split.a_ops, state.psi_a) - np.outer(ma, ma)
    cov_b = _second_moments(split.b_ops, state.psi_b) - np.outer(mb, mb)
    val = 2.0 * np.sum(np.outer(lam, lam) * (cov_a * cov_b).real)
    return float(val)


def linear_entropy_at(H, state, t, propagator=None):
    """``S_lin(rho_A(t))`` under exact evolution of the joint pure state."""
    prop = Propagator(H) if propagator is None else propagator
    psi = prop.evolve(state.joint(), t)
    return linear_entropy(partial_trace(psi, state.shape, "A"))


def s_lin_oracle(H, state, shape=None, t_max=None, n_points=9):
    """Fit ``S_lin(t) ~ c t^2`` to exact evolution and return ``c``.

    Times are sampled symmetrically on ``[-t_max, t_max]`` (zero excluded), so
    the odd ``t^3`` correction drops out of the least-squares fit and the bias
    is ``O((t_max ||H||)^2)``.  The default window is ``t_max = 0.01/||H||_F``;
    windows beyond ``0.05/||H||_F`` trigger a warning.
    """
    H = check_hermitian(H, "H")
    shape = state.shape if shape is None else as_shape(shape)
    shape.check(H.shape[0], "Hamiltonian")
    if tuple(shape) != tuple(state.shape):
        raise ValueError("state does not match shape")
    if n_points < 5:
        raise ValueError(f"n_points must be >= 5, got {n_points}")
    norm = np.linalg.norm(H)
    if norm == 0:
        return 0.0
    if t_max is None:
        t_max = 0.01 / norm
    if t_max * norm > 0.05:
        warnings.warn(f"oracle window t_max*||H||_F = {t_max * norm:.3g} exceeds "
                      "0.05; the quadratic fit may be biased", RuntimeWarning, stacklevel=2)
    half = np.linspace(t_max / n_points, t_max, n_points)
    ts = np.concatenate([-half[::-1], half])
    prop = Propagator(H)
    s = np.array([linear_entropy_at(H, state, t, prop) for t in ts])
    t2 = ts ** 2
    return float(t2 @ s / (t2 @ t2))


# ---------------------------------------------------------------------------
# reduced-state expansion

def _term_stack(split):
    """Write ``H = sum_k X_k (x) Y_k`` (the trace term is dropped: it commutes)."""
    d_a, d_b = split.shape
    xs = [split.h_a, np.eye(d_a, dtype=complex)]
    ys = [np.eye(d_b, dtype=complex), split.h_b]
    for lam, a, b in zip(split.lambdas, split.a_ops, split.b_ops):
        xs.append(lam * a)
        ys.append(b)
    return np.array(xs), np.array(ys)


def effective_hamiltonian(split, state, b_means=None):
    """``H_A + sum_a lambda_a <B_a> A_a`` with ``<B_a>`` in the initial state
    unless ``b_means`` is given."""
    if b_means is None:
        b_means = _mean_ops(split.b_ops, state.psi_b).real if split.n_int else np.zeros(0)
    out = np.array(split.h_a, dtype=complex)
    for lam, b, a in zip(split.lambdas, b_means, split.a_ops):
        out = out + lam * b * a
    return out


def reduced_state_taylor(split, state):
    """``(rho0, rho1, rho2)`` with ``rho_A(t) = rho0 + t rho1 + t^2 rho2 + O(t^3)``.

    ``rho1 = -i[H_eff, rho0]`` and ``rho2 = -Tr_B [H, [H, rho]] / 2`` expanded
    over the product terms of the split.
    """
    _check_state(split, state)
    rho0 = state.rho_a
    xs, ys = _term_stack(split)
    y_mean = _mean_ops(ys, state.psi_b)
    g = _second_moments(ys, state.psi_b)  # <Y_k Y_m>
    h_eff = np.einsum("k,kij->ij", y_mean, xs)
    rho1 = -1j * commutator(h_eff, rho0)
    xx = np.einsum("km,kij,mjl->il", g, xs, xs)  # sum G_km X_k X_m
    xrx = np.einsum("mk,kij,jl,mln->in", g, xs, rho0, xs)  # sum G_mk X_k rho X_m
    rho2 = -0.5 * (xx @ rho0 + rho0 @ xx - 2.0 * xrx)
    return rho0, rho1, rho2


# ---------------------------------------------------------------------------
# pointer observables

def variance_rate(split, O_a, state, mode="general", qml_atol=None):
    """Initial rate of change of ``Var(O_A)``.

    ``mode='general'`` uses ``H_eff = H_A + sum lambda <B> A``; ``mode='qml'``
    keeps only ``H_A``.  The rate is ``<i[H, O^2]> - 2 <i[H, O]> <O>``.

    In ``qml`` mode the interaction commutator norm
    ``sqrt(sum lambda^2 ||[O_A, A_a]||_F^2)`` is compared to ``qml_atol``
    (default ``1e-8 ||H_int||_F``) and a ``RuntimeWarning`` reporting it is
    emitted when exceeded.
    """
    _check_state(split, state)
    O = check_hermitian(O_a, "O_A", dim=split.shape.d_a)
    if mode == "general":
        h = effective_hamiltonian(split, state)
    elif mode == "qml":
        h = split.h_a
        norm = qml_commutator_norm(split, O)
        atol = 1e-8 * split.interaction_norm if qml_atol is None else qml_atol
        if norm > atol:
            warnings.warn(f"pointer observable does not commute with the interaction "
                          f"(norm {norm:.3e} > {atol:.3e}); qml rate is approximate",
                          RuntimeWarning, stacklevel=2)
    else:
        raise ValueError(f"mode must be 'general' or 'qml', got {mode!r}")
    psi = state.psi_a
    rate = (expectation(1j * commutator(h, O @ O), psi)
            - 2.0 * expectation(1j * commutator(h, O), psi) * expectation(O, psi))
    return float(rate.real)


def qml_commutator_norm(split, O_a):
    """``sqrt(sum_a lambda_a^2 ||[O_A, A_a]||_F^2)``."""
    if split.n_int == 0:
        return 0.0
    comm = np.einsum("ij,kjl->kil", O_a, split.a_ops) - np.einsum("kij,jl->kil", split.a_ops, O_a)
    return float(np.sqrt(np.sum(split.lambdas ** 2 * np.sum(np.abs(comm) ** 2, axis=(1, 2)))))


@dataclass(frozen=True, eq=False)
class PointerDistribution:
    """Populations ``p_j`` of the pointer basis with their first two time
    derivatives at ``t = 0`` (``None`` when not requested)."""

    basis: np.ndarray = field(repr=False)
    p: np.ndarray
    p_dot: np.ndarray | None = None
    p_ddot: np.ndarray | None = None


def _check_orthonormal(basis, dim, atol=1e-10):
    basis = np.asarray(basis, dtype=complex)
    if basis.shape != (dim, dim):
        raise ValueError(f"pointer basis must be {dim}x{dim}, got {basis.shape}")
    if not np.allclose(basis.conj().T @ basis, np.eye(dim), rtol=0, atol=atol):
        raise ValueError("pointer basis is not orthonormal")
    return basis


def _diag_in(basis, X):
    return np.einsum("ij,ik,kj->j", basis.conj(), X, basis)


def pointer_distribution(split, basis, state, order=2):
    """Pointer populations ``p_j = <a_j|rho_A|a_j>`` and derivatives.

    ``basis`` holds the pointer states as columns.  ``p_ddot`` is twice the
    ``t^2`` coefficient of ``p_j(t)``, from the full second-order expansion of
    the reduced state.
    """
    _check_state(split, state)
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order!r}")
    basis = _check_orthonormal(basis, split.shape.d_a)
    rho0, rho1, rho2 = reduced_state_taylor(split, state)
    p = _diag_in(basis, rho0).real
    p_dot = _diag_in(basis, rho1).real if order >= 1 else None
    p_ddot = 2.0 * _diag_in(basis, rho2).real if order >= 2 else None
    return PointerDistribution(basis=basis, p=p, p_dot=p_dot, p_ddot=p_ddot)


def pointer_entropy(rho_a, basis):
    """``1 - sum_j p_j^2`` for the populations of ``rho_A`` in ``basis``."""
    p = _diag_in(np.asarray(basis), np.asarray(rho_a)).real
    return float(1.0 - p @ p)


def s_pointer_ddot(dist):
    """Second time derivative of the pointer entropy at ``t = 0``:
    ``-2 sum_j (p_dot_j^2 + p_j p_ddot_j)``."""
    if dist.p_dot is None or dist.p_ddot is None:
        raise ValueError("pointer distribution lacks derivative data (use order=2)")
    return float(-2.0 * np.sum(dist.p_dot ** 2 + dist.p * dist.p_ddot))


def s_pointer_ddot_qml(split, basis, state):
    """Closed form of the pointer-entropy curvature valid when every pointer
    projector commutes with every ``A_a``.

    ``2 sum <[O_j, H_A]>^2 + 2 sum p_j <O_j H_A^2 + H_A^2 O_j - 2 H_A O_j H_A>
    + 2 sum p_j sum_a lambda_a <B_a> <[O_j, [H_A, A_a]]>``.
    """
    _check_state(split, state)
    basis = _check_orthonormal(basis, split.shape.d_a)
    psi = state.psi_a
    h = split.h_a
    h2 = h @ h
    b_means = _mean_ops(split.b_ops, state.psi_b).real if split.n_int else np.zeros(0)
    inner = np.zeros_like(h)
    for lam, bm, a in zip(split.lambdas, b_means, split.a_ops):
        inner = inner + lam * bm * commutator(h, a)
    total = 0j
    for j in range(basis.shape[1]):
        O = np.outer(basis[:, j], basis[:, j].conj())
        p = expectation(O, psi).real
        total += expectation(commutator(O, h), psi) ** 2
        total += p * expectation(O @ h2 + h2 @ O - 2.0 * h @ O @ h, psi)
        total += p * expectation(commutator(O, inner), psi)
    return float(2.0 * total.real)


def pointer_entropy_at(H, state, basis, t, propagator=None):
    """Pointer entropy of ``rho_A(t)`` under exact evolution."""
    prop = Propagator(H) if propagator is None else propagator
    psi = prop.evolve(state.joint(), t)
    return pointer_entropy(partial_trace(psi, state.shape, "A"), basis)


# ---------------------------------------------------------------------------
# decoherence

def joint_eigenbasis(ops, atol=1e-8):
    """Common eigenbasis of mutually commuting Hermitian operators.

    Returns ``(vectors, eigenvalues)`` where ``eigenvalues[a, j]`` is the
    eigenvalue of ``ops[a]`` on column ``j``.  Columns are ordered
    lexicographically by their eigenvalue tuple and phase-fixed.  Raises
    ``ValueError`` if the operators do not commute within ``atol``.
    """
    ops = np.asarray(ops, dtype=complex)
    n, d = ops.shape[0], ops.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            c = np.linalg.norm(commutator(ops[i], ops[j]))
            if c > atol:
                raise ValueError(f"interaction terms {i} and {j} do not commute "
                                 f"(||[A_i, A_j]||_F = {c:.3e}); no consistent pointer basis")
    # a generic combination separates every joint eigenspace
    weights = np.sqrt(np.arange(2, n + 2, dtype=float)) / np.pi
    combo = np.einsum("a,aij->ij", weights, ops) if n else np.zeros((d, d), complex)
    _, vecs = np.linalg.eigh(0.5 * (combo + combo.conj().T))
    vals = np.einsum("ij,aik,kj->aj", vecs.conj(), ops, vecs).real
    keys = np.round(vals, 9)
    order = np.lexsort(keys[::-1]) if n else np.arange(d)
    return fix_phases(vecs[:, order]), vals[:, order]


@dataclass(frozen=True, eq=False)
class DecoherenceModel:
    """Leading-order suppression of pointer-basis coherences.

    ``gamma[j, k]`` is the Gaussian rate in ``|rho_jk(t)| ~ exp(-gamma t^2 / 2)``
    and ``tau = sqrt(2 / gamma)`` (infinite on the diagonal or for ``gamma = 0``).
    """

    h_eff_a: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    gamma: np.ndarray
    tau: np.ndarray


def decoherence_rates(split, state, atol=1e-8):
    """Rates ``Gamma_jk = sum_a lambda_a^2 Var(B_a) (a_j - a_k)^2``."""
    _check_state(split, state)
    if split.n_int == 0:
        raise ValueError("no interaction terms: nothing monitors the system")
    basis, vals = joint_eigenbasis(split.a_ops, atol)
    var_b = np.array([expectation(b @ b, state.psi_b).real - expectation(b, state.psi_b).real ** 2
                      for b in split.b_ops])
    diff2 = (vals[:, :, None] - vals[:, None, :]) ** 2
    gamma = np.einsum("a,ajk->jk", split.lambdas ** 2 * var_b, diff2)
    gamma = 0.5 * (gamma + gamma.T)
    np.fill_diagonal(gamma, 0.0)
    with np.errstate(divide="ignore"):
        tau = np.where(gamma > 0, np.sqrt(2.0 / np.where(gamma > 0, gamma, 1.0)), np.inf)
    return DecoherenceModel(h_eff_a=effective_hamiltonian(split, state), basis=basis,
                            eigenvalues=vals, gamma=gamma, tau=tau)


def decoherence_term(split, state, t):
    """The ``O(t)`` non-unitary part of ``d rho_A / dt``.

    ``-t sum_{ab} lambda_a lambda_b [(A_a A_b rho - A_b rho A_a) C(a, b)
    + (rho A_b A_a - A_a rho A_b) C(b, a)]`` with the connected correlator
    ``C(a, b) = <B_a B_b> - <B_a><B_b>`` of the environment.
    """
    _check_state(split, state)
    d_a = split.shape.d_a
    if split.n_int == 0:
        return np.zeros((d_a, d_a), dtype=complex)
    rho = state.rho_a
    A = split.lambdas[:, None, None] * split.a_ops
    mb = _mean_ops(split.b_ops, state.psi_b)
    c = _second_moments(split.b_ops, state.psi_b) - np.outer(mb, mb)
    aar = np.einsum("ab,aij,bjk,kl->il", c, A, A, rho)
    ara = np.einsum("ab,bij,jk,akl->il", c, A, rho, A)
    raa = np.einsum("ba,ij,bjk,akl->il", c, rho, A, A)
    ara2 = np.einsum("ba,aij,jk,bkl->il", c, A, rho, A)
    return -t * (aar - ara + raa - ara2)


def reduced_evolution_terms(split, state, t):
    """Split ``d rho_A / dt`` at time ``t`` into unitary and decoherence parts.

    The unitary part is ``-i[H_eff(t), rho_A(t)]`` where ``H_eff(t)`` uses
    ``<B_a>`` in the self-evolved environment state and ``rho_A(t)`` is exact.
    Their sum matches the true derivative up to ``O(t^2)``.  The third return
    value is the :class:`DecoherenceModel` when the ``A_a`` commute, else
    ``None``.
    """
    _check_state(split, state)
    H = split.reconstruct()
    psi_t = Propagator(H).evolve(state.joint(), t)
    rho_t = partial_trace(psi_t, split.shape, "A")
    if split.n_int:
        psi_b_t = Propagator(split.h_b).evolve(state.psi_b, t)
        b_t = _mean_ops(split.b_ops, psi_b_t).real
    else:
        b_t = np.zeros(0)
    h_eff_t = effective_hamiltonian(split, state, b_means=b_t)
    unitary = -1j * commutator(h_eff_t, rho_t)
    decoh = decoherence_term(split, state, t)
    try:
        model = decoherence_rates(split, state) if split.n_int else None
    except ValueError:
        model = None
    return unitary, decoh, model
