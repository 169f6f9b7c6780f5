"""Dense linear-algebra substrate: tensor products, partial traces, evolution
and entropy primitives.

Operators and states are plain numpy arrays (``(D, D)`` complex matrices and
``(D,)`` complex vectors).  Bipartite indices follow the fixed convention
``(i_A, i_B) -> i_A * d_B + i_B``, which is what :func:`numpy.kron` produces.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ._validation import ATOL, as_operator, check_hermitian


class BipartiteShape(NamedTuple):
    """Dimensions ``(d_a, d_b)`` of a bipartite split ``H = A (x) B``."""

    d_a: int
    d_b: int

    @property
    def dim(self):
        return self.d_a * self.d_b

    def check(self, dim, what="operator"):
        if self.d_a < 1 or self.d_b < 1:
            raise ValueError(f"invalid bipartite shape {tuple(self)}")
        if dim != self.dim:
            raise ValueError(f"{what} of dimension {dim} does not match shape "
                             f"{self.d_a}x{self.d_b}")


def as_shape(shape):
    if isinstance(shape, BipartiteShape):
        return shape
    d_a, d_b = shape
    if int(d_a) != d_a or int(d_b) != d_b or d_a < 1 or d_b < 1:
        raise ValueError(f"invalid bipartite shape {tuple(shape)}")
    return BipartiteShape(int(d_a), int(d_b))


def tensor_product(x, y):
    """Kronecker product of two operators or of two state vectors."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != y.ndim or x.ndim not in (1, 2):
        raise ValueError("tensor_product needs two vectors or two matrices, "
                         f"got ndim {x.ndim} and {y.ndim}")
    return np.kron(x, y)


def ket_to_dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def partial_trace(rho, shape, keep="A"):
    """Reduce a bipartite operator (or pure state vector) to one factor.

    Parameters
    ----------
    rho : array_like
        ``(D, D)`` operator or ``(D,)`` pure state on ``d_a * d_b``.
    shape : BipartiteShape or (int, int)
    keep : {'A', 'B'}
        Factor that survives the trace.
    """
    shape = as_shape(shape)
    rho = np.asarray(rho, dtype=complex)
    if keep not in ("A", "B"):
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")
    if rho.ndim == 1:
        shape.check(rho.size, "state")
        m = rho.reshape(shape.d_a, shape.d_b)
        return m @ m.conj().T if keep == "A" else m.T @ m.conj()
    rho = as_operator(rho)
    shape.check(rho.shape[0])
    r = rho.reshape(shape.d_a, shape.d_b, shape.d_a, shape.d_b)
    if keep == "A":
        return np.einsum("ikjk->ij", r)
    return np.einsum("kikj->ij", r)


def commutator(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x @ y - y @ x


def anticommutator(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x @ y + y @ x


def frobenius_norm(x):
    return float(np.linalg.norm(np.asarray(x)))


def expectation(op, state):
    """``<op>`` in a pure state (vector) or a density matrix."""
    op = np.asarray(op)
    state = np.asarray(state)
    if state.ndim == 1:
        if op.shape != (state.size, state.size):
            raise ValueError(f"dimension mismatch: {op.shape} vs state {state.shape}")
        return complex(np.vdot(state, op @ state))
    if op.shape != state.shape:
        raise ValueError(f"dimension mismatch: {op.shape} vs {state.shape}")
    return complex(np.einsum("ij,ji->", op, state))


def variance(op, state):
    """Variance of a Hermitian operator in a state (real part)."""
    mean = expectation(op, state).real
    return expectation(op @ op, state).real - mean ** 2


def linear_entropy(rho):
    """``1 - Tr rho^2`` (second-order Tsallis entropy)."""
    rho = np.asarray(rho)
    if rho.ndim == 1:
        return 0.0
    return float(1.0 - np.einsum("ij,ji->", rho, rho).real)


class Propagator:
    """Spectral propagator ``U(t) = exp(-i H t)`` of a Hermitian ``H``.

    The eigendecomposition is computed once, so repeated evolution at many
    times costs two matrix products each.
    """

    def __init__(self, H):
        H = check_hermitian(H, "Hamiltonian")
        H = 0.5 * (H + H.conj().T)
        self.energies, self.vectors = np.linalg.eigh(H)

    def unitary(self, t):
        v = self.vectors
        return (v * np.exp(-1j * self.energies * t)) @ v.conj().T

    def evolve(self, x, t):
        x = np.asarray(x, dtype=complex)
        v = self.vectors
        phase = np.exp(-1j * self.energies * t)
        if x.ndim == 1:
            return v @ (phase * (v.conj().T @ x))
        y = v.conj().T @ x @ v
        y = phase[:, None] * y * phase.conj()[None, :]
        return v @ y @ v.conj().T


def evolve(H, x, t):
    """Evolve a pure state or density matrix under ``exp(-i H t)`` (hbar = 1)."""
    return Propagator(H).evolve(x, t)


def eigh_hermitian(H, atol=ATOL):
    H = check_hermitian(H, atol=atol)
    return np.linalg.eigh(0.5 * (H + H.conj().T))


def fix_phases(vectors, atol=1e-12):
    """Rotate each column so its first non-negligible component is real positive."""
    vectors = np.array(vectors, dtype=complex)
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        idx = np.flatnonzero(np.abs(col) > max(atol, 1e-8 * np.abs(col).max()))
        if idx.size:
            c = col[idx[0]]
            vectors[:, k] = col * (abs(c) / c)
    return vectors
