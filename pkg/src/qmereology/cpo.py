"""Candidate pointer observables and the peaked trial states built from them.

The candidate pointer observable (CPO) is the product ``O_A (x) O_B`` of
traceless, Hermitian, unit-Frobenius factors minimizing
``||[H_int, O_A (x) O_B]||_F``.  For a fixed ``O_B`` the squared residual is a
positive semidefinite quadratic form in the real Gell-Mann coordinates of
``O_A`` (and vice versa), so each half-step is an exact minimization by the
smallest eigenvector of that form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ProductState
from .factorization import _canonical_sign, gell_mann_basis
from .hilbert import fix_phases


@dataclass(frozen=True, eq=False)
class CandidatePointerObservable:
    """Result of :func:`find_cpo`.

    ``coeffs_a``/``coeffs_b`` are unit vectors of Gell-Mann coordinates with
    ``O = sum_a c_a Lambda_a / sqrt 2``.  ``tie_broken`` is set when several
    restarts reached the same residual and the deterministic tie-break decided.
    """

    o_a: np.ndarray = field(repr=False)
    o_b: np.ndarray = field(repr=False)
    coeffs_a: np.ndarray = field(repr=False)
    coeffs_b: np.ndarray = field(repr=False)
    residual: float
    restarts_used: int
    converged: bool
    tie_broken: bool = False
    history: tuple = field(default=(), repr=False)


def _scaled_basis(d):
    return gell_mann_basis(d) / np.sqrt(2.0)


def _quadratic_form(h_int, basis, other, side):
    """``G_ab = Re Tr(M_a^dag M_b)`` with ``M_a = [H_int, basis_a (x) other]``
    (or ``other (x) basis_a`` for ``side='B'``)."""
    if side == "A":
        kron = np.einsum("aij,kl->aikjl", basis, other)
    else:
        kron = np.einsum("ij,akl->aikjl", other, basis)
    n = basis.shape[0]
    D = h_int.shape[0]
    kron = kron.reshape(n, D, D)
    m = h_int @ kron - kron @ h_int
    flat = m.reshape(n, -1)
    return (flat.conj() @ flat.T).real


def _minimize(G, reference, rtol):
    """Unit minimizer of ``x^T G x``; if the minimum is degenerate, the
    normalized projection of ``reference`` onto the minimal eigenspace."""
    w, v = np.linalg.eigh(0.5 * (G + G.T))
    scale = max(abs(w[-1]), 1e-300)
    block = v[:, w - w[0] <= rtol * scale]
    x = v[:, 0]
    if block.shape[1] > 1 and reference is not None:
        proj = block @ (block.T @ reference)
        if np.linalg.norm(proj) > 1e-6:
            x = proj / np.linalg.norm(proj)
    return x, max(float(x @ G @ x), 0.0)


def _residual(h_int, o_a, o_b):
    p = np.kron(o_a, o_b)
    return float(np.linalg.norm(h_int @ p - p @ h_int))


def _random_unit(rng, n):
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)


def _alternate(h_int, basis_a, basis_b, x_b, ref_a, ref_b, max_iters, tol, rtol):
    history = []
    o_b = np.einsum("a,aij->ij", x_b, basis_b)
    prev = np.inf
    converged = False
    x_a = None
    for _ in range(max_iters):
        x_a, r2 = _minimize(_quadratic_form(h_int, basis_a, o_b, "A"), ref_a, rtol)
        history.append(np.sqrt(r2))
        o_a = np.einsum("a,aij->ij", x_a, basis_a)
        x_b, r2 = _minimize(_quadratic_form(h_int, basis_b, o_a, "B"), ref_b, rtol)
        history.append(np.sqrt(r2))
        o_b = np.einsum("a,aij->ij", x_b, basis_b)
        cur = np.sqrt(r2)
        if prev - cur < tol:
            converged = True
            break
        prev = cur
    return x_a, x_b, converged, history


def find_cpo(split, n_restarts=8, max_iters=200, tol=1e-12, seed=0):
    """Alternating minimization of ``||[H_int, O_A (x) O_B]||_F``.

    Restart 0 starts from the leading interaction factor ``B_1``; the others
    start from random unit vectors drawn from independent streams spawned from
    ``seed``.  When a half-step minimum is degenerate, the projection of the
    leading factor's coordinates onto the minimal eigenspace is taken.  Among
    restarts within ``tol`` of the best residual the winner has the smallest
    ``||[H_int, O_A (x) I]||_F``, then the largest overlap with the leading
    factor ``A_1``, then the lexicographically smallest rounded coordinates.
    """
    if split.n_int == 0:
        raise ValueError("split has no interaction terms; the CPO is undefined")
    if int(n_restarts) < 1:
        raise ValueError(f"n_restarts must be >= 1, got {n_restarts!r}")
    if int(max_iters) < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters!r}")
    d_a, d_b = split.shape
    if d_a < 2 or d_b < 2:
        raise ValueError("both factors need dimension >= 2")
    h_int = split.interaction()
    scale = split.interaction_norm
    basis_a = _scaled_basis(d_a)
    basis_b = _scaled_basis(d_b)
    ref_a = np.einsum("aij,ji->a", basis_a, split.a_ops[0]).real
    ref_b = np.einsum("aij,ji->a", basis_b, split.b_ops[0]).real
    rtol = 1e-9

    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(int(n_restarts))]
    runs = []
    for r in range(int(n_restarts)):
        start = ref_b if r == 0 else _random_unit(rngs[r], basis_b.shape[0])
        x_a, x_b, conv, hist = _alternate(h_int, basis_a, basis_b, start, ref_a, ref_b,
                                          int(max_iters), tol * max(scale, 1.0), rtol)
        o_a = np.einsum("a,aij->ij", x_a, basis_a)
        o_b = np.einsum("a,aij->ij", x_b, basis_b)
        sign = _canonical_sign(o_a)
        x_a, x_b, o_a, o_b = sign * x_a, sign * x_b, sign * o_a, sign * o_b
        res = _residual(h_int, o_a, o_b)
        pa = np.kron(o_a, np.eye(d_b))
        side = float(np.linalg.norm(h_int @ pa - pa @ h_int))
        runs.append((res, side, x_a, x_b, o_a, o_b, conv, hist))

    best = min(r[0] for r in runs)
    window = max(tol * max(scale, 1.0), 1e-10 * scale)
    tied = [r for r in runs if r[0] - best <= window]
    key = lambda r: (round(r[1] / max(scale, 1e-300), 8), -round(abs(r[2] @ ref_a), 8),
                     tuple(np.round(r[2], 8)), tuple(np.round(r[3], 8)))
    res, _, x_a, x_b, o_a, o_b, conv, hist = min(tied, key=key)
    return CandidatePointerObservable(
        o_a=o_a, o_b=o_b, coeffs_a=x_a, coeffs_b=x_b,
        residual=res, restarts_used=int(n_restarts), converged=bool(conv),
        tie_broken=len(tied) > 1, history=tuple(hist))


@dataclass(frozen=True, eq=False)
class PeakedStateSet:
    """One trial product state per eigenvector of ``O_A``."""

    states: tuple
    width: float
    eigenvalues: np.ndarray
    pointer_basis: np.ndarray = field(repr=False)


def sorted_eigenbasis(O):
    """Eigenvalues ascending with phase-fixed eigenvectors as columns."""
    O = np.asarray(O, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (O + O.conj().T))
    return w, fix_phases(v)


def peaked_amplitudes(d, center, width):
    """Discrete Gaussian ``exp(-(k - j)^2 / (4 w^2))`` over eigen-index distance;
    ``width = 0`` gives the indicator of ``center``."""
    if width < 0:
        raise ValueError(f"width must be nonnegative, got {width!r}")
    k = np.arange(d)
    if width == 0:
        amp = (k == center).astype(float)
    else:
        amp = np.exp(-((k - center) ** 2) / (4.0 * width ** 2))
    return amp / np.linalg.norm(amp)


def peaked_states(cpo, width=0.0):
    """``d_A`` product states: ``psi_A`` peaked on each ``O_A`` eigenvector and
    ``psi_B`` the uniform superposition of ``O_B`` eigenvectors."""
    _, va = sorted_eigenbasis(cpo.o_a)
    evals, _ = np.linalg.eigh(cpo.o_a)
    _, vb = sorted_eigenbasis(cpo.o_b)
    d_a, d_b = va.shape[0], vb.shape[0]
    psi_b = vb @ np.full(d_b, 1.0 / np.sqrt(d_b))
    psi_b = psi_b / np.linalg.norm(psi_b)
    states = tuple(ProductState(va @ peaked_amplitudes(d_a, j, width), psi_b)
                   for j in range(d_a))
    return PeakedStateSet(states=states, width=float(width), eigenvalues=evals,
                          pointer_basis=va)
