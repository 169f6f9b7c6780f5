"""scikit-learn style wrappers around the functional core.

The estimators hold hyperparameters in ``__init__`` (so ``get_params`` and
``set_params`` work and they can be cloned) and expose learned quantities as
trailing-underscore attributes after ``fit``.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_hermitian
from .cpo import find_cpo, peaked_states
from .factorization import HamiltonianSplit, factorization_unitary, split_hamiltonian
from .gpo import build_gpo, schwinger_expand, shift_profile
from .hilbert import as_shape
from .mereology import SweepConfig, sweep


def _seed(random_state):
    """Integer seed from ``None``/int/``RandomState``-like input."""
    if random_state is None:
        return 0
    if isinstance(random_state, numbers.Integral):
        return int(random_state)
    return int(random_state.randint(0, 2 ** 31 - 1))


def _operator_stack(X, d):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (d, d):
        raise ValueError(f"expected operators of shape (n, {d}, {d}), got {X.shape}")
    return X


class HamiltonianSplitter(TransformerMixin, BaseEstimator):
    """Split a Hamiltonian into self and diagonal interaction terms.

    Parameters
    ----------
    d_a, d_b : int
        Factor dimensions.
    rtol : float
        Relative cutoff below which interaction terms are dropped.

    Attributes
    ----------
    split_ : HamiltonianSplit
    lambdas_ : ndarray
    n_int_ : int
    """

    def __init__(self, d_a=2, d_b=2, rtol=1e-12):
        self.d_a = d_a
        self.d_b = d_b
        self.rtol = rtol

    def fit(self, X, y=None):
        H = check_hermitian(X, "H", dim=self.d_a * self.d_b)
        self.split_ = split_hamiltonian(H, (self.d_a, self.d_b), rtol=self.rtol)
        self.lambdas_ = self.split_.lambdas
        self.n_int_ = self.split_.n_int
        return self

    def transform(self, X):
        """Split a new Hamiltonian of the same shape."""
        check_is_fitted(self, "split_")
        return split_hamiltonian(check_hermitian(X, "H"), (self.d_a, self.d_b), rtol=self.rtol)


class CollimationProfiler(TransformerMixin, BaseEstimator):
    """Map operators to their normalized shift profiles along one axis.

    ``transform`` returns an ``(n, d)`` array of shift weights (columns
    indexed ``-l..l``); ``collimation`` returns the ``(n,)`` collimations.
    """

    def __init__(self, d=27, alpha=None, axis="phi"):
        self.d = d
        self.alpha = alpha
        self.axis = axis

    def fit(self, X=None, y=None):
        if self.axis not in ("phi", "pi"):
            raise ValueError(f"axis must be 'phi' or 'pi', got {self.axis!r}")
        self.gpo_ = build_gpo(self.d, self.alpha)
        return self

    def _profiles(self, X):
        check_is_fitted(self, "gpo_")
        return [shift_profile(schwinger_expand(M, self.gpo_), self.axis)
                for M in _operator_stack(X, self.d)]

    def transform(self, X):
        return np.array([p.weights for p in self._profiles(X)])

    def collimation(self, X):
        return np.array([p.collimation for p in self._profiles(X)])


class CandidatePointerSearch(BaseEstimator):
    """Find the candidate pointer observable of a split (or of ``H``).

    Attributes
    ----------
    cpo_ : CandidatePointerObservable
    residual_ : float
    """

    def __init__(self, d_a=None, d_b=None, n_restarts=8, max_iters=200, tol=1e-12,
                 random_state=None):
        self.d_a = d_a
        self.d_b = d_b
        self.n_restarts = n_restarts
        self.max_iters = max_iters
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        if isinstance(X, HamiltonianSplit):
            split = X
        else:
            if self.d_a is None or self.d_b is None:
                raise ValueError("d_a and d_b are required when fitting on a matrix")
            split = split_hamiltonian(X, (self.d_a, self.d_b))
        self.split_ = split
        self.cpo_ = find_cpo(split, self.n_restarts, self.max_iters, self.tol,
                             seed=_seed(self.random_state))
        self.residual_ = self.cpo_.residual
        return self

    def peaked_states(self, width=0.0):
        check_is_fitted(self, "cpo_")
        return peaked_states(self.cpo_, width)


class QuantumMereology(TransformerMixin, BaseEstimator):
    """Sweep factorizations of ``H`` and keep the minimum Schwinger entropy.

    ``fit(H)`` runs the sweep; ``transform(H)`` re-expresses a Hamiltonian in
    the selected factorization, ``U^dag H U``.

    Attributes
    ----------
    records_ : list of SweepRecord
    argmin_ : int or None
    best_theta_ : ndarray
    unitary_ : ndarray
    """

    def __init__(self, d_a=5, d_b=5, n_samples=50, step_sigma=0.05, walk_mode="cumulative",
                 state_width=0.0, time_mode="coefficient", qml_guard=2.0,
                 aggregate="mean_of_max", n_restarts=8, max_iters=200, tol=1e-12,
                 descent=False, random_state=None, n_jobs=1):
        self.d_a = d_a
        self.d_b = d_b
        self.n_samples = n_samples
        self.step_sigma = step_sigma
        self.walk_mode = walk_mode
        self.state_width = state_width
        self.time_mode = time_mode
        self.qml_guard = qml_guard
        self.aggregate = aggregate
        self.n_restarts = n_restarts
        self.max_iters = max_iters
        self.tol = tol
        self.descent = descent
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self):
        return SweepConfig(seed=_seed(self.random_state), n_samples=self.n_samples,
                           step_sigma=self.step_sigma, walk_mode=self.walk_mode,
                           state_width=self.state_width, time_mode=self.time_mode,
                           qml_guard=self.qml_guard, aggregate=self.aggregate,
                           n_restarts=self.n_restarts, max_iters=self.max_iters, tol=self.tol,
                           descent=self.descent)

    def fit(self, X, y=None):
        shape = as_shape((self.d_a, self.d_b))
        H = check_hermitian(X, "H", dim=shape.dim)
        self.records_, self.argmin_ = sweep(H, shape, self._config(), n_jobs=self.n_jobs)
        idx = 0 if self.argmin_ is None else self.argmin_
        self.best_theta_ = self.records_[idx].theta
        self.unitary_ = factorization_unitary(self.best_theta_, shape.dim)
        self.s_schwinger_ = np.array([r.s_schwinger for r in self.records_])
        return self

    def transform(self, X):
        check_is_fitted(self, "unitary_")
        H = check_hermitian(X, "H", dim=self.unitary_.shape[0])
        U = self.unitary_
        return U.conj().T @ H @ U
