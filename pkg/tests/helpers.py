"""Random instances shared by the test modules."""

import numpy as np

from qmereology.dynamics import ProductState
from qmereology.factorization import build_split


def rand_herm(rng, d, scale=1.0):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * 0.5 * (m + m.conj().T)


def rand_ket(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def rand_product_state(rng, shape):
    return ProductState(rand_ket(rng, shape[0]), rand_ket(rng, shape[1]))


def traceless_unit(X):
    X = X - np.trace(X) / X.shape[0] * np.eye(X.shape[0])
    return X / np.linalg.norm(X)


def rand_unit_herm(rng, d):
    return traceless_unit(rand_herm(rng, d))


def single_term_split(rng, shape, lam=None, with_self=True):
    """``H_A + H_B + lam A (x) B`` with unit traceless ``A, B``."""
    d_a, d_b = shape
    lam = rng.uniform(0.5, 3.0) if lam is None else lam
    a, b = rand_unit_herm(rng, d_a), rand_unit_herm(rng, d_b)
    h_a = traceless_unit(rand_herm(rng, d_a)) * rng.uniform(0.1, 1) if with_self else np.zeros((d_a, d_a))
    h_b = traceless_unit(rand_herm(rng, d_b)) * rng.uniform(0.1, 1) if with_self else np.zeros((d_b, d_b))
    return build_split(shape, h_a, h_b, [(lam, a, b)]), lam, a, b


def commuting_split(rng, shape, n_terms=2, self_scale=0.05):
    """Interaction terms sharing a common ``A`` eigenbasis (diagonal ``A_a``)."""
    d_a, d_b = shape
    terms = []
    for _ in range(n_terms):
        a = traceless_unit(np.diag(rng.standard_normal(d_a)).astype(complex))
        terms.append((rng.uniform(1.0, 3.0), a, rand_unit_herm(rng, d_b)))
    h_a = self_scale * rand_unit_herm(rng, d_a)
    h_b = self_scale * rand_unit_herm(rng, d_b)
    return build_split(shape, h_a, h_b, terms)


def finite_diff(f, h):
    """Centered first and second derivatives of ``f`` at 0."""
    fp, f0, fm = f(h), f(0.0), f(-h)
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / h ** 2
