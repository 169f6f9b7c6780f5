"""Factorization changes and bipartite Hamiltonian splits.

A factorization is parametrized by ``theta`` in ``R^{D^2-1}`` through
``U(theta) = exp(i sum_a theta_a Lambda_a)`` with generalized Gell-Mann
generators ``Lambda_a``.  A Hamiltonian is re-expressed in the rotated
factorization as ``U^dag H U`` and split into self terms plus a diagonal
interaction ``sum_alpha lambda_alpha A_alpha (x) B_alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._validation import ATOL, as_operator, check_hermitian, check_unitary
from .hilbert import BipartiteShape, as_shape, partial_trace

GELL_MANN_NORM2 = 2.0  # Tr(Lambda_a Lambda_a)


@lru_cache(maxsize=32)
def _gell_mann(D):
    gens = []
    for j in range(D):
        for k in range(j + 1, D):
            m = np.zeros((D, D), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            gens.append(m)
    for j in range(D):
        for k in range(j + 1, D):
            m = np.zeros((D, D), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            gens.append(m)
    for l in range(1, D):
        diag = np.zeros(D)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(complex))
    out = np.array(gens)
    out.setflags(write=False)
    return out


def gell_mann_basis(D):
    """The ``D^2 - 1`` generalized Gell-Mann matrices as a ``(D^2-1, D, D)`` array.

    Order: symmetric ``E^{jk} + E^{kj}`` then antisymmetric
    ``-i(E^{jk} - E^{kj})`` for ``j < k`` lexicographically, then the
    ``D - 1`` diagonal generators.  The returned array is read-only and shared.
    """
    if isinstance(D, bool) or int(D) != D or D < 2:
        raise ValueError(f"Gell-Mann basis needs integer D >= 2, got {D!r}")
    return _gell_mann(int(D))


def gell_mann_coefficients(X, basis=None):
    """Real coordinates ``Tr(X Lambda_a) / 2`` of a traceless Hermitian ``X``."""
    X = np.asarray(X)
    basis = gell_mann_basis(X.shape[0]) if basis is None else basis
    return np.einsum("aij,ji->a", basis, X).real / GELL_MANN_NORM2


def from_gell_mann(coeffs, basis):
    return np.einsum("a,aij->ij", np.asarray(coeffs, dtype=float), basis)


def gell_mann_generator(theta, D):
    """``sum_a theta_a Lambda_a`` assembled by index, without materializing
    the basis (same ordering as :func:`gell_mann_basis`)."""
    theta = np.asarray(theta, dtype=float)
    n_off = D * (D - 1) // 2
    if theta.shape != (D * D - 1,):
        raise ValueError(f"theta has length {theta.size}, expected {D * D - 1}")
    j, k = np.triu_indices(D, 1)
    G = np.zeros((D, D), dtype=complex)
    G[j, k] = theta[:n_off] - 1j * theta[n_off:2 * n_off]
    G[k, j] = theta[:n_off] + 1j * theta[n_off:2 * n_off]
    ls = np.arange(1, D)
    diag_gen = np.where(np.arange(D)[None, :] < ls[:, None], 1.0, 0.0)
    diag_gen[ls - 1, ls] = -ls
    diag_gen *= np.sqrt(2.0 / (ls * (ls + 1)))[:, None]
    G[np.diag_indices(D)] = theta[2 * n_off:] @ diag_gen
    return G


def factorization_unitary(theta, basis):
    """``exp(i sum_a theta_a Lambda_a)``, computed spectrally.

    ``basis`` is a stacked Gell-Mann basis or just the dimension ``D``.
    """
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    if np.ndim(basis) == 0:
        G = gell_mann_generator(theta, int(basis))
    else:
        basis = np.asarray(basis)
        if theta.ndim != 1 or theta.size != basis.shape[0]:
            raise ValueError(f"theta has length {theta.size}, expected {basis.shape[0]}")
        G = np.einsum("a,aij->ij", theta, basis)
    w, v = np.linalg.eigh(0.5 * (G + G.conj().T))
    return (v * np.exp(1j * w)) @ v.conj().T


def transform_hamiltonian(H, U):
    """Re-express ``H`` in the factorization rotated by ``U``: ``U^dag H U``."""
    H = as_operator(H, "H")
    U = check_unitary(U, dim=H.shape[0])
    return U.conj().T @ H @ U


def _canonical_sign(op):
    """+1 or -1 so that the largest-magnitude entry of ``sign * op`` has
    positive real part (imaginary part if the real part vanishes)."""
    flat = op.ravel()
    c = flat[np.argmax(np.abs(flat))]
    ref = c.real if abs(c.real) > 1e-12 * abs(c) else c.imag
    return -1.0 if ref < 0 else 1.0


@dataclass(frozen=True, eq=False)
class HamiltonianSplit:
    """``H = (h0/D) I + H_A (x) I + I (x) H_B + sum lambda_a A_a (x) B_a``.

    ``a_ops``/``b_ops`` are stacked ``(n_int, d, d)`` arrays of Hermitian,
    traceless, unit-Frobenius operators; ``lambdas`` is sorted descending.
    """

    shape: BipartiteShape
    h_a: np.ndarray = field(repr=False)
    h_b: np.ndarray = field(repr=False)
    trace: float
    lambdas: np.ndarray
    a_ops: np.ndarray = field(repr=False)
    b_ops: np.ndarray = field(repr=False)
    coeff_matrix: np.ndarray = field(repr=False)

    @property
    def n_int(self):
        return int(self.lambdas.size)

    def interaction(self):
        D = self.shape.dim
        out = np.zeros((D, D), dtype=complex)
        for lam, a, b in zip(self.lambdas, self.a_ops, self.b_ops):
            out += lam * np.kron(a, b)
        return out

    def self_part(self):
        return (np.kron(self.h_a, np.eye(self.shape.d_b))
                + np.kron(np.eye(self.shape.d_a), self.h_b))

    def reconstruct(self):
        D = self.shape.dim
        return self.trace / D * np.eye(D) + self.self_part() + self.interaction()

    @property
    def interaction_norm(self):
        # A_a (x) B_a are Frobenius-orthonormal
        return float(np.sqrt(np.sum(self.lambdas ** 2)))

    @property
    def self_norm(self):
        return float(np.sqrt(self.shape.d_b * np.linalg.norm(self.h_a) ** 2
                             + self.shape.d_a * np.linalg.norm(self.h_b) ** 2))

    @property
    def qml_ratio(self):
        """``||H_int||_F / ||H_self||_F`` (inf without self terms)."""
        s = self.self_norm
        return np.inf if s == 0 else self.interaction_norm / s


def split_hamiltonian(H, shape, rtol=1e-12):
    """Split a Hermitian ``H`` into self and diagonal interaction terms (plus its trace).

    The interaction is expanded in ``Lambda^A_a (x) Lambda^B_b`` with real
    coefficients ``h_ab``; a real SVD ``h = U S V^T`` gives Hermitian factors
    ``A_alpha = sum_a U_a,alpha Lambda_a / sqrt 2`` (likewise ``B``) and
    ``lambda_alpha = 2 S_alpha``.  Terms below ``rtol * max(lambda)`` are
    dropped.
    """
    shape = as_shape(shape)
    H = check_hermitian(H, "H")
    shape.check(H.shape[0], "Hamiltonian")
    d_a, d_b = shape
    D = shape.dim
    H = 0.5 * (H + H.conj().T)

    h0 = float(np.trace(H).real)
    H0 = H - h0 / D * np.eye(D)
    h_a = partial_trace(H0, shape, "A") / d_b
    h_b = partial_trace(H0, shape, "B") / d_a
    rest = H0 - np.kron(h_a, np.eye(d_b)) - np.kron(np.eye(d_a), h_b)

    lam_a = gell_mann_basis(d_a) if d_a > 1 else np.zeros((0, 1, 1))
    lam_b = gell_mann_basis(d_b) if d_b > 1 else np.zeros((0, 1, 1))
    r = rest.reshape(d_a, d_b, d_a, d_b)
    # Tr(rest (La (x) Lb)) = sum r[i,k,j,l] La[j,i] Lb[l,k]
    coeffs = np.einsum("ikjl,aji,blk->ab", r, lam_a, lam_b).real / GELL_MANN_NORM2 ** 2

    empty = (np.zeros(0), np.zeros((0, d_a, d_a), complex), np.zeros((0, d_b, d_b), complex))
    if coeffs.size == 0:
        lambdas, a_ops, b_ops = empty
    else:
        u, s, vt = np.linalg.svd(coeffs, full_matrices=False)
        lambdas = GELL_MANN_NORM2 * s
        scale = max(lambdas.max(), np.linalg.norm(H) * 1e-3) if lambdas.size else 0.0
        keep = lambdas > rtol * scale
        if not keep.any():
            lambdas, a_ops, b_ops = empty
        else:
            lambdas = lambdas[keep]
            norm = np.sqrt(GELL_MANN_NORM2)
            a_ops = np.einsum("an,aij->nij", u[:, keep], lam_a) / norm
            b_ops = np.einsum("bn,bij->nij", vt[keep].T, lam_b) / norm
            for n in range(lambdas.size):
                sign = _canonical_sign(a_ops[n])
                a_ops[n] *= sign
                b_ops[n] *= sign

    return HamiltonianSplit(shape=shape, h_a=h_a, h_b=h_b, trace=h0,
                            lambdas=np.asarray(lambdas, dtype=float),
                            a_ops=np.asarray(a_ops), b_ops=np.asarray(b_ops),
                            coeff_matrix=coeffs)


def build_split(shape, h_a, h_b, terms, trace=0.0):
    """Assemble a :class:`HamiltonianSplit` from explicit parts.

    ``terms`` is a sequence of ``(lambda, A, B)``; this is a convenience for
    constructing test instances and is not normalized or re-diagonalized, so
    only use it with unit-Frobenius traceless Hermitian factors.
    """
    shape = as_shape(shape)
    lambdas = np.array([t[0] for t in terms], dtype=float)
    a_ops = np.array([t[1] for t in terms], dtype=complex).reshape(-1, shape.d_a, shape.d_a)
    b_ops = np.array([t[2] for t in terms], dtype=complex).reshape(-1, shape.d_b, shape.d_b)
    return HamiltonianSplit(shape=shape, h_a=np.asarray(h_a, dtype=complex),
                            h_b=np.asarray(h_b, dtype=complex), trace=float(trace),
                            lambdas=lambdas, a_ops=a_ops, b_ops=b_ops,
                            coeff_matrix=np.zeros((0, 0)))


def random_theta(rng, D, norm):
    """Gaussian direction in ``R^{D^2-1}`` scaled to the given Euclidean norm."""
    v = rng.standard_normal(D * D - 1)
    return norm * v / np.linalg.norm(v)
