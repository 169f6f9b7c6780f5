"""Search over bipartite factorizations for the minimum Schwinger entropy.

For each factorization ``theta`` the Hamiltonian is rotated, split, the
candidate pointer observable is found, peaked trial states are built around
its eigenvectors and the entanglement and pointer-entropy growth of each
state are combined into the Schwinger entropy of that factorization.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_hermitian, check_positive
from .cpo import find_cpo, peaked_amplitudes, peaked_states, sorted_eigenbasis
from .dynamics import (ProductState, linear_entropy_at, pointer_distribution,
                       pointer_entropy, pointer_entropy_at, s_lin_ddot, s_pointer_ddot)
from .factorization import factorization_unitary, split_hamiltonian, transform_hamiltonian
from .gpo import build_gpo
from .hilbert import Propagator, as_shape

log = logging.getLogger(__name__)

WALK_MODES = ("independent", "cumulative")
TIME_MODES = ("coefficient", "evolved_t0")
AGGREGATES = ("mean_of_max", "max_of_mean")
TARGET_QML_RATIO = 5.0

SWEEP_COLUMNS = ("index", "theta_norm", "s_lin_ddot_avg", "s_pointer_ddot_avg", "s_schwinger",
                 "cpo_residual", "qml_ratio", "flags", "h_a_norm", "h_b_norm", "h_int_norm",
                 "n_int")


@dataclass(frozen=True)
class OscillatorModel:
    """Two finite-dimensional oscillators coupled through ``phi_A phi_B``.

    ``lam=None`` picks the coupling that puts the interaction norm at
    ``TARGET_QML_RATIO`` times the self norm.  ``d_b=None`` means ``d_b = d``.
    The default heavy, slow oscillator (``m omega^2 = 1``) keeps the kinetic
    term small in the ``phi`` basis, which makes ``phi`` a predictable
    pointer observable.
    """

    d: int = 5
    mass: float = 9.0
    omega: float = 1.0 / 3.0
    lam: float | None = None
    alpha: float | None = None
    d_b: int | None = None

    @property
    def shape(self):
        return as_shape((self.d, self.d if self.d_b is None else self.d_b))


def oscillator_self_hamiltonian(g, mass=1.0, omega=1.0):
    return g.pi @ g.pi / (2 * mass) + 0.5 * mass * omega ** 2 * (g.phi @ g.phi)


def build_coupled_oscillators(model=OscillatorModel(), qml_guard=2.0):
    """``H = H_A (x) I + I (x) H_B + lam phi_A (x) phi_B`` and its split."""
    check_positive(model.mass, "mass")
    check_positive(model.omega, "omega")
    shape = model.shape
    ga = build_gpo(shape.d_a, model.alpha)
    gb = ga if shape.d_b == shape.d_a else build_gpo(shape.d_b, model.alpha)
    h0 = (np.kron(oscillator_self_hamiltonian(ga, model.mass, model.omega), np.eye(shape.d_b))
          + np.kron(np.eye(shape.d_a), oscillator_self_hamiltonian(gb, model.mass, model.omega)))
    coupling = np.kron(ga.phi, gb.phi)
    lam = model.lam
    if lam is None:
        lam = TARGET_QML_RATIO * split_hamiltonian(h0, shape).self_norm / np.linalg.norm(coupling)
    H = h0 + lam * coupling
    split = split_hamiltonian(H, shape)
    if lam != 0 and split.qml_ratio <= qml_guard:
        warnings.warn(f"oscillator model has QML ratio {split.qml_ratio:.3g} <= guard "
                      f"{qml_guard}", RuntimeWarning, stacklevel=2)
    return H, split


def default_coupling(model):
    """Coupling ``lam`` that ``lam=None`` resolves to for this model."""
    model = replace(model, lam=None)
    shape = model.shape
    _, split = build_coupled_oscillators(model)
    phi_a = build_gpo(shape.d_a, model.alpha).phi
    phi_b = build_gpo(shape.d_b, model.alpha).phi
    return float(split.lambdas[0] / (np.linalg.norm(phi_a) * np.linalg.norm(phi_b)))


@dataclass(frozen=True)
class SweepConfig:
    """Parameters of a factorization sweep.

    ``aggregate`` chooses how the per-state entropies are combined:
    ``mean_of_max`` (default) takes the max per state and averages over
    states, ``max_of_mean`` averages each quantity first.
    """

    seed: int = 0
    n_samples: int = 50
    step_sigma: float = 0.05
    walk_mode: str = "cumulative"
    state_width: float = 0.0
    time_mode: str = "coefficient"
    qml_guard: float = 2.0
    aggregate: str = "mean_of_max"
    n_restarts: int = 8
    max_iters: int = 200
    tol: float = 1e-12
    descent: bool = False

    def __post_init__(self):
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be an unsigned integer, got {self.seed!r}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        check_positive(self.step_sigma, "step_sigma")
        check_positive(self.qml_guard, "qml_guard")
        if self.state_width < 0:
            raise ValueError(f"state_width must be nonnegative, got {self.state_width!r}")
        for name, value, allowed in (("walk_mode", self.walk_mode, WALK_MODES),
                                     ("time_mode", self.time_mode, TIME_MODES),
                                     ("aggregate", self.aggregate, AGGREGATES)):
            if value not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {value!r}")
        if int(self.n_restarts) < 1 or int(self.max_iters) < 1:
            raise ValueError("n_restarts and max_iters must be >= 1")
        check_positive(self.tol, "tol")

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SweepRecord:
    """Scores of one factorization.  In ``evolved_t0`` mode the two averages
    hold ``S_lin(t0)`` and ``S_pointer(t0) - S_pointer(0)`` instead of
    second-order coefficients."""

    index: int
    theta_norm: float
    s_lin_ddot_avg: float
    s_pointer_ddot_avg: float
    s_schwinger: float
    cpo_residual: float
    qml_ratio: float
    flags: frozenset = frozenset()
    h_a_norm: float = 0.0
    h_b_norm: float = 0.0
    h_int_norm: float = 0.0
    n_int: int = 0
    theta: np.ndarray = field(default=None, repr=False)

    def row(self):
        """Values in ``SWEEP_COLUMNS`` order (flags joined with ``|``)."""
        out = []
        for col in SWEEP_COLUMNS:
            v = getattr(self, col)
            out.append("|".join(sorted(v)) if col == "flags" else v)
        return out


def _trial_states(split, config, seed):
    """Pointer basis, trial states, CPO residual and flags for a split."""
    flags = set()
    if split.n_int == 0:
        # nothing to measure against: fall back to the self-Hamiltonian eigenbasis
        flags.add("no_interaction")
        _, va = sorted_eigenbasis(split.h_a)
        _, vb = sorted_eigenbasis(split.h_b)
        d_a, d_b = split.shape
        psi_b = vb @ np.full(d_b, 1.0 / np.sqrt(d_b))
        states = [ProductState(va @ peaked_amplitudes(d_a, j, config.state_width), psi_b)
                  for j in range(d_a)]
        return va, states, 0.0, flags
    cpo = find_cpo(split, config.n_restarts, config.max_iters, config.tol, seed=seed)
    if not cpo.converged:
        flags.add("cpo_nonconverged")
    if cpo.tie_broken:
        flags.add("cpo_tie_broken")
    peaked = peaked_states(cpo, config.state_width)
    return peaked.pointer_basis, list(peaked.states), cpo.residual, flags


def evaluate_factorization(H, theta, shape, config=SweepConfig(), index=0):
    """Schwinger entropy of the factorization rotated by ``theta``."""
    shape = as_shape(shape)
    H = check_hermitian(H, "H")
    shape.check(H.shape[0], "Hamiltonian")
    theta = np.asarray(theta, dtype=float)
    Hp = transform_hamiltonian(H, factorization_unitary(theta, shape.dim))
    Hp = 0.5 * (Hp + Hp.conj().T)
    split = split_hamiltonian(Hp, shape)
    cpo_seed = np.random.SeedSequence([config.seed, index]).generate_state(1)[0]
    pointer_basis, states, residual, flags = _trial_states(split, config, int(cpo_seed))

    if config.time_mode == "coefficient":
        lin = np.array([s_lin_ddot(split, st) for st in states])
        ptr = np.array([s_pointer_ddot(pointer_distribution(split, pointer_basis, st))
                        for st in states])
    else:
        t0 = 1.0 / np.linalg.norm(H)
        prop = Propagator(Hp)
        lin = np.array([linear_entropy_at(Hp, st, t0, prop) for st in states])
        ptr = np.array([pointer_entropy_at(Hp, st, pointer_basis, t0, prop)
                        - pointer_entropy(st.rho_a, pointer_basis) for st in states])
    if config.aggregate == "mean_of_max":
        s_schwinger = float(np.mean(np.maximum(lin, ptr)))
    else:
        s_schwinger = float(max(lin.mean(), ptr.mean()))

    ratio = split.qml_ratio
    if ratio < config.qml_guard:
        flags.add("qml_violated")
    d_a, d_b = shape
    return SweepRecord(index=int(index), theta_norm=float(np.linalg.norm(theta)),
                       s_lin_ddot_avg=float(lin.mean()), s_pointer_ddot_avg=float(ptr.mean()),
                       s_schwinger=s_schwinger, cpo_residual=float(residual),
                       qml_ratio=float(ratio), flags=frozenset(flags),
                       h_a_norm=float(np.linalg.norm(split.h_a)),
                       h_b_norm=float(np.linalg.norm(split.h_b)),
                       h_int_norm=split.interaction_norm, n_int=split.n_int, theta=theta)


def theta_increments(config, D):
    """Gaussian increments for samples ``1..n_samples-1``, one independent
    stream per sample index.  Each component has standard deviation
    ``step_sigma / sqrt(D^2 - 1)`` so the increment norm is about ``step_sigma``."""
    n = D * D - 1
    sigma = config.step_sigma / np.sqrt(n)
    seqs = np.random.SeedSequence(config.seed).spawn(config.n_samples)
    return np.array([np.random.default_rng(s).normal(0.0, sigma, n) for s in seqs[1:]]).reshape(-1, n)


def sample_thetas(config, D):
    """Sample 0 is the identity; later samples are independent increments or a
    cumulative random walk, depending on ``walk_mode``."""
    inc = theta_increments(config, D)
    if config.walk_mode == "cumulative":
        inc = np.cumsum(inc, axis=0)
    return np.vstack([np.zeros((1, D * D - 1)), inc])


def _eligible_argmin(records):
    ok = [r for r in records if "qml_violated" not in r.flags]
    if not ok:
        return None
    return min(ok, key=lambda r: (r.s_schwinger, r.index)).index


def sweep(H, shape, config=SweepConfig(), n_jobs=1):
    """Evaluate ``config.n_samples`` factorizations and return
    ``(records, argmin)``.

    ``argmin`` is the index of the smallest Schwinger entropy among records
    without the ``qml_violated`` flag, or ``None`` if every record violates
    the guard.  Results do not depend on ``n_jobs``.
    """
    shape = as_shape(shape)
    H = check_hermitian(H, "H")
    shape.check(H.shape[0], "Hamiltonian")
    D = shape.dim
    if config.descent:
        return _descent(H, shape, config)
    thetas = sample_thetas(config, D)
    if n_jobs == 1:
        records = [evaluate_factorization(H, th, shape, config, i) for i, th in enumerate(thetas)]
    else:
        records = Parallel(n_jobs=n_jobs)(
            delayed(evaluate_factorization)(H, th, shape, config, i) for i, th in enumerate(thetas))
    records = sorted(records, key=lambda r: r.index)
    argmin = _eligible_argmin(records)
    if argmin is None:
        log.warning("every sampled factorization violates the QML guard")
    return records, argmin


def _descent(H, shape, config):
    """Greedy variant: propose ``theta_best + increment`` and keep it only if
    the Schwinger entropy drops (and the QML guard holds)."""
    inc = theta_increments(config, shape.dim)
    best = evaluate_factorization(H, np.zeros(shape.dim ** 2 - 1), shape, config, 0)
    records = [best]
    for i, step in enumerate(inc, start=1):
        rec = evaluate_factorization(H, best.theta + step, shape, config, i)
        records.append(rec)
        if "qml_violated" not in rec.flags and rec.s_schwinger < best.s_schwinger:
            best = rec
    return records, _eligible_argmin(records)


def scrambled_hamiltonian(H, shape, norm=1.0, seed=0):
    """Rotate ``H`` away from its reference factorization by a random
    ``theta`` of the given norm (used to check that a sweep notices)."""
    shape = as_shape(shape)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape.dim ** 2 - 1)
    theta = norm * v / np.linalg.norm(v)
    U = factorization_unitary(theta, shape.dim)
    return U @ H @ U.conj().T, theta


def quartile_means(values):
    """Means of four contiguous blocks of a sequence."""
    blocks = np.array_split(np.asarray(values, dtype=float), 4)
    return np.array([b.mean() for b in blocks])


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
