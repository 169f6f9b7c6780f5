"""Generalized Pauli operators on odd-dimensional spaces.

The clock ``B`` and shift ``A`` obey ``A B = omega^{-1} B A`` with
``omega = exp(2 pi i / d)``; the Hermitian conjugate pair ``phi``/``pi`` is
defined by ``A = exp(-i alpha pi)`` and ``B = exp(i beta phi)`` with
``alpha * beta * d = 2 pi``.  All matrices are written in the eigenbasis of
``B`` (equivalently of ``phi``), indexed ``j = -l..l`` at array position
``j + l``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_operator, check_odd_dim, check_positive
from .hilbert import commutator

AXES = ("phi", "pi")


@dataclass(frozen=True, eq=False)
class GpoSystem:
    """Clock/shift generators and the conjugate pair for odd ``d = 2l + 1``."""

    d: int
    alpha: float
    beta: float
    omega: complex
    shift: np.ndarray = field(repr=False)
    clock: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    sylvester: np.ndarray = field(repr=False)

    @property
    def l(self):
        return (self.d - 1) // 2

    @property
    def labels(self):
        return np.arange(-self.l, self.l + 1)

    def basis_element(self, b, a):
        """``B^b A^a`` for integer exponents (taken modulo ``d``)."""
        return (np.linalg.matrix_power(self.clock, b % self.d)
                @ np.linalg.matrix_power(self.shift, a % self.d))


def default_alpha(d):
    """Symmetric scale ``alpha = beta = sqrt(2 pi / d)``."""
    return float(np.sqrt(2 * np.pi / d))


def pi_matrix_element(j, jp, d, alpha):
    """Closed-form ``<phi_j| pi |phi_j'>`` (cosecant form)."""
    if j == jp:
        return 0j
    l = (d - 1) // 2
    return 1j * np.pi / (d * alpha) / np.sin(2 * np.pi * l * (j - jp) / d)


def build_gpo(d, alpha=None):
    """Construct the GPO system of odd dimension ``d``.

    ``pi`` comes from the explicit Fourier-sum matrix elements rather than a
    matrix logarithm, so there is no branch ambiguity.
    """
    d = check_odd_dim(d)
    alpha = default_alpha(d) if alpha is None else check_positive(alpha, "alpha")
    beta = 2 * np.pi / (d * alpha)
    l = (d - 1) // 2
    j = np.arange(-l, l + 1)
    omega = np.exp(2j * np.pi / d)

    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(omega ** j)
    phi = np.diag(j * 2 * np.pi / (d * beta)).astype(complex)

    diff = j[:, None] - j[None, :]
    phases = np.exp(2j * np.pi * diff[:, :, None] * j[None, None, :] / d)
    pi = (2 * np.pi / (d * d * alpha)) * (phases @ j.astype(float))
    np.fill_diagonal(pi, 0.0)
    pi = 0.5 * (pi + pi.conj().T)

    sylvester = omega ** np.outer(j, j) / np.sqrt(d)
    return GpoSystem(d=d, alpha=alpha, beta=beta, omega=omega, shift=shift,
                     clock=clock, phi=phi, pi=pi, sylvester=sylvester)


@dataclass(frozen=True, eq=False)
class SchwingerExpansion:
    """Coefficients ``m[b + l, a + l]`` of ``M = sum m_ba B^b A^a``."""

    d: int
    coeffs: np.ndarray

    @property
    def l(self):
        return (self.d - 1) // 2

    @property
    def normalized(self):
        """``|m_ba| / sum |m|`` (real magnitudes)."""
        mag = np.abs(self.coeffs)
        total = mag.sum()
        if total == 0:
            raise ValueError("zero operator has no normalized Schwinger profile")
        return mag / total

    def coefficient(self, b, a):
        return self.coeffs[b + self.l, a + self.l]

    def reconstruct(self, g):
        out = np.zeros((self.d, self.d), dtype=complex)
        for b in range(-self.l, self.l + 1):
            for a in range(-self.l, self.l + 1):
                m = self.coefficient(b, a)
                if m != 0:
                    out += m * g.basis_element(b, a)
        return out


def schwinger_expand(M, g):
    """Expand ``M`` in the unitary basis ``{B^b A^a}``, ``b, a = -l..l``.

    ``m_ba = Tr(A^{-a} B^{-b} M) / d``.  Since ``A^{-a}`` maps ``e_k`` to
    ``e_{k-a}``, the trace only touches the ``a``-th cyclic diagonal of ``M``.
    """
    M = as_operator(M, "M", g.d)
    d, l = g.d, g.l
    k = np.arange(d)
    labels = k - l
    # phase[b, k] = omega^{-b * label_k}
    phase = g.omega ** (-np.outer(labels, labels))
    coeffs = np.empty((d, d), dtype=complex)
    for ai, a in enumerate(labels):
        diag = M[k, (k - a) % d]
        coeffs[:, ai] = phase @ diag / d
    return SchwingerExpansion(d=d, coeffs=coeffs)


@dataclass(frozen=True)
class ShiftProfile:
    """Marginal shift weights along one conjugate axis, indexed ``-l..l``."""

    axis: str
    weights: np.ndarray
    collimation: float

    @property
    def labels(self):
        l = (self.weights.size - 1) // 2
        return np.arange(-l, l + 1)


def collimation_from_weights(weights):
    weights = np.asarray(weights, dtype=float)
    d = weights.size
    l = (d - 1) // 2
    decay = np.exp(-np.abs(np.arange(-l, l + 1)) / d)
    return float(weights @ decay)


def shift_profile(expansion, axis="phi"):
    """``phi``-profile marginalizes over ``b`` (shifts of ``phi`` by ``a``);
    ``pi``-profile marginalizes over ``a``."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    mt = expansion.normalized
    weights = mt.sum(axis=0) if axis == "phi" else mt.sum(axis=1)
    return ShiftProfile(axis=axis, weights=weights,
                        collimation=collimation_from_weights(weights))


def collimation(M, g, axis="phi"):
    return shift_profile(schwinger_expand(M, g), axis).collimation


def nested_commutator(X, H, n):
    """``[X, [X, ... [X, H]]]`` with ``n`` copies of ``X``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    out = np.asarray(H)
    for _ in range(int(n)):
        out = commutator(X, out)
    return out


def gaussian_probe(g, width=1.0, center=0.0):
    """Real Gaussian wavepacket in the ``phi`` basis, ``psi ~ exp(-(phi-c)^2 / 2 w^2)``."""
    x = np.diag(g.phi).real
    psi = np.exp(-((x - center) ** 2) / (2 * width ** 2)).astype(complex)
    return psi / np.linalg.norm(psi)


def eom_residual(H, g, dH_dphi, dH_dpi, probe_width=1.0):
    """Deviation of the finite-``d`` Heisenberg equations from Hamilton's.

    Returns ``(r_pi, r_phi)`` with ``r_pi = ||(i[H, pi] + dH/dphi) P||_F`` and
    ``r_phi = ||(i[H, phi] - dH/dpi) P||_F`` where ``P`` projects on a Gaussian
    probe of fixed physical width centred at the origin.  ``probe_width=None``
    uses the bare operator norms instead; those are dominated by the cyclic
    wraparound at the lattice edges and grow with ``d``.
    """
    d = g.d
    H = as_operator(H, "H", d)
    dH_dphi = as_operator(dH_dphi, "dH_dphi", d)
    dH_dpi = as_operator(dH_dpi, "dH_dpi", d)
    res_pi = 1j * commutator(H, g.pi) + dH_dphi
    res_phi = 1j * commutator(H, g.phi) - dH_dpi
    if probe_width is None:
        return float(np.linalg.norm(res_pi)), float(np.linalg.norm(res_phi))
    psi = gaussian_probe(g, probe_width)
    return float(np.linalg.norm(res_pi @ psi)), float(np.linalg.norm(res_phi @ psi))


def ccr_block_deviation(g, size=3):
    """Max entrywise deviation of the central ``size x size`` block of
    ``[phi, pi]`` from ``i * I``."""
    c = commutator(g.phi, g.pi)
    lo = g.l - size // 2
    block = c[lo:lo + size, lo:lo + size]
    return float(np.abs(block - 1j * np.eye(size)).max())


def ccr_expectation(g, width=1.0):
    """``<[phi, pi]>`` in the Gaussian probe; tends to ``i`` as ``d`` grows."""
    psi = gaussian_probe(g, width)
    return complex(np.vdot(psi, commutator(g.phi, g.pi) @ psi))
