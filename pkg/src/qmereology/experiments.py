"""Ensemble and trajectory experiments built on the core modules.

``correlate_ensemble`` relates the ``phi``-collimation of a self-Hamiltonian to
how fast it spreads a peaked wavepacket.  ``decoherence_trajectory`` follows
the pointer-basis coherences of a monitored system under exact evolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import spearmanr

from .cpo import sorted_eigenbasis
from .dynamics import (ProductState, decoherence_rates, joint_eigenbasis, pointer_distribution,
                       s_lin_ddot, s_pointer_ddot, variance_rate)
from .factorization import build_split
from .gpo import build_gpo, collimation, gaussian_probe
from .hilbert import Propagator, linear_entropy, partial_trace

CORRELATE_COLUMNS = ("instance", "collimation", "variance_rate", "s_pointer_ddot", "s_lin_ddot")


def random_hermitian(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (m + m.conj().T)


def collimated_polynomial(g, c):
    """``pi^2 / 2 + c phi^2 / 2``: only nearest-neighbour-like ``phi`` shifts."""
    return g.pi @ g.pi / 2 + c * (g.phi @ g.phi) / 2


def _traceless(X):
    return X - np.trace(X) / X.shape[0] * np.eye(X.shape[0])


@dataclass(frozen=True, eq=False)
class CorrelateResult:
    rows: np.ndarray = field(repr=False)  # columns as CORRELATE_COLUMNS
    mix: np.ndarray = field(repr=False)  # interpolation parameter s per instance
    spearman_collimation: float
    spearman_pointer: float


def correlate_instance(g, rng, width=1.0, s_min=1e-3, qml_ratio=5.0):
    """One member of the ensemble; returns ``(mix, C_phi, |dVar/dt|, S_ptr'', S_lin'')``.

    ``H_A = (1 - s) P + s R`` with ``P`` a collimated polynomial in
    ``(phi, pi)`` and ``R`` a random Hermitian operator of the same Frobenius
    norm; ``s`` is log-uniform on ``[s_min, 1]``.  The system is monitored
    through ``phi (x) sigma_z`` by a qubit prepared with ``<sigma_z> = 0``, so
    ``phi`` is an exact pointer observable.  For the real Gaussian probe the
    signed variance rate of any real symmetric part vanishes, so the magnitude
    of the rate is reported.
    """
    d = g.d
    s = 10.0 ** rng.uniform(np.log10(s_min), 0.0)
    c = rng.uniform(0.2, 2.0)
    P = collimated_polynomial(g, c)
    R = random_hermitian(rng, d)
    R *= np.linalg.norm(P) / np.linalg.norm(R)
    h_a = _traceless((1 - s) * P + s * R)

    a = g.phi / np.linalg.norm(g.phi)
    b = np.diag([1.0, -1.0]).astype(complex) / np.sqrt(2.0)
    lam = qml_ratio * np.sqrt(2.0) * np.linalg.norm(h_a)
    split = build_split((d, 2), h_a, np.zeros((2, 2)), [(lam, a, b)])
    state = ProductState(gaussian_probe(g, width), np.array([1.0, 1.0]) / np.sqrt(2.0))

    rate = abs(variance_rate(split, g.phi, state, mode="qml"))
    s_ptr = s_pointer_ddot(pointer_distribution(split, np.eye(d), state))
    return s, collimation(h_a, g, "phi"), rate, s_ptr, s_lin_ddot(split, state)


def correlate_ensemble(d=27, n_instances=30, seed=0, width=1.0, s_min=1e-3, qml_ratio=5.0,
                       alpha=None, n_jobs=1):
    """Rank correlations of collimation and pointer-entropy curvature against
    the variance rate over a seeded ensemble of self-Hamiltonians.

    Each instance draws from its own stream spawned from ``seed``, so the
    result does not depend on ``n_jobs``.
    """
    if int(n_instances) < 5:
        raise ValueError(f"ensemble needs at least 5 instances, got {n_instances!r}")
    g = build_gpo(d, alpha)
    seqs = np.random.SeedSequence(seed).spawn(int(n_instances))
    job = lambda ss: correlate_instance(g, np.random.default_rng(ss), width, s_min, qml_ratio)
    if n_jobs == 1:
        vals = [job(ss) for ss in seqs]
    else:
        vals = Parallel(n_jobs=n_jobs)(delayed(job)(ss) for ss in seqs)
    vals = np.array(vals)
    rows = np.column_stack([np.arange(len(vals)), vals[:, 1:]])
    rho_c = spearmanr(rows[:, 1], rows[:, 2])[0]
    rho_p = spearmanr(rows[:, 3], rows[:, 2])[0]
    return CorrelateResult(rows=rows, mix=vals[:, 0], spearman_collimation=float(rho_c),
                           spearman_pointer=float(rho_p))


# ---------------------------------------------------------------------------
# decoherence

def monitoring_state(split, pointer_basis=None):
    """Coherent superposition for a decoherence run: ``psi_A`` uniform over the
    pointer basis, ``psi_B`` uniform over the eigenbasis of ``B_1`` (or of
    ``H_B`` when there is no interaction)."""
    d_a, d_b = split.shape
    if pointer_basis is None:
        pointer_basis = pointer_basis_for(split)
    env = split.b_ops[0] if split.n_int else split.h_b
    _, vb = sorted_eigenbasis(env)
    psi_a = pointer_basis @ np.full(d_a, 1.0 / np.sqrt(d_a))
    psi_b = vb @ np.full(d_b, 1.0 / np.sqrt(d_b))
    return ProductState(psi_a / np.linalg.norm(psi_a), psi_b / np.linalg.norm(psi_b))


def pointer_basis_for(split):
    """Joint eigenbasis of the ``A_a``; the ``H_A`` eigenbasis if uncoupled."""
    if split.n_int:
        return joint_eigenbasis(split.a_ops)[0]
    return sorted_eigenbasis(split.h_a)[1]


@dataclass(frozen=True, eq=False)
class DecoherenceTrajectory:
    times: np.ndarray
    rho: np.ndarray = field(repr=False)  # (n_t, d_A, d_A) in the pointer basis
    s_lin: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)

    @property
    def coherences(self):
        return np.abs(self.rho)


def decoherence_trajectory(split, state, times, basis=None):
    """Exact reduced dynamics expressed in the pointer basis."""
    basis = pointer_basis_for(split) if basis is None else basis
    times = np.asarray(times, dtype=float)
    prop = Propagator(split.reconstruct())
    psi0 = state.joint()
    rhos, slin = [], []
    for t in times:
        r = partial_trace(prop.evolve(psi0, t), split.shape, "A")
        rhos.append(basis.conj().T @ r @ basis)
        slin.append(linear_entropy(r))
    return DecoherenceTrajectory(times=times, rho=np.array(rhos), s_lin=np.array(slin),
                                 basis=basis)


def fit_gaussian_rate(times, magnitudes):
    """Least-squares ``Gamma`` in ``ln(|x(t)| / |x(0)|) = -Gamma t^2 / 2``."""
    times = np.asarray(times, dtype=float)
    y = np.log(np.asarray(magnitudes, dtype=float) / magnitudes[0])
    t2 = times ** 2
    return float(-2.0 * (t2 @ y) / (t2 @ t2))


def crossing_time(times, magnitudes, level=np.exp(-1.0)):
    """First time ``|x(t)| / |x(0)|`` falls to ``level`` (linear interpolation);
    ``inf`` if it never does."""
    r = np.asarray(magnitudes, dtype=float) / magnitudes[0]
    below = np.flatnonzero(r <= level)
    if below.size == 0:
        return np.inf
    k = below[0]
    if k == 0:
        return float(times[0])
    t0, t1, r0, r1 = times[k - 1], times[k], r[k - 1], r[k]
    return float(t0 + (r0 - level) * (t1 - t0) / (r0 - r1))


def decoherence_summary(split, state, trajectory):
    """Per off-diagonal pair: predicted rate and time, fitted rate over
    ``t <= 0.1 tau`` and the ``1/e`` crossing time of the trajectory."""
    model = decoherence_rates(split, state)
    d = split.shape.d_a
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            tau = model.tau[j, k]
            mag = trajectory.coherences[:, j, k]
            if not np.isfinite(tau) or mag[0] < 1e-12:
                continue
            win = trajectory.times <= 0.1 * tau
            fit = fit_gaussian_rate(trajectory.times[win], mag[win]) if win.sum() >= 3 else np.nan
            out.append((j, k, model.gamma[j, k], fit, tau, crossing_time(trajectory.times, mag)))
    return out
