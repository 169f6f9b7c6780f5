"""Input validation helpers shared by the functional core and the estimators."""

from __future__ import annotations

import numpy as np

#: Entrywise tolerance for Hermiticity / unitarity predicates.
ATOL = 1e-10


def as_operator(x, name="operator", dim=None):
    """Return ``x`` as a square complex matrix, raising ``ValueError`` otherwise."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def as_state(x, name="state", dim=None, atol=1e-12):
    """Return ``x`` as a normalized complex vector."""
    arr = np.asarray(x, dtype=complex)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"{name} has dimension {arr.size}, expected {dim}")
    norm2 = np.vdot(arr, arr).real
    if abs(norm2 - 1.0) > atol:
        raise ValueError(f"{name} is not normalized (|psi|^2 = {norm2:.3e})")
    return arr


def is_hermitian(x, atol=ATOL):
    x = np.asarray(x)
    return x.ndim == 2 and x.shape[0] == x.shape[1] and np.allclose(x, x.conj().T, rtol=0, atol=atol)


def is_unitary(x, atol=ATOL):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        return False
    return np.allclose(x.conj().T @ x, np.eye(x.shape[0]), rtol=0, atol=atol)


def check_hermitian(x, name="operator", dim=None, atol=ATOL):
    arr = as_operator(x, name, dim)
    if not is_hermitian(arr, atol):
        raise ValueError(f"{name} is not Hermitian (max deviation "
                         f"{np.abs(arr - arr.conj().T).max():.3e})")
    return arr


def check_unitary(x, name="unitary", dim=None, atol=ATOL):
    arr = as_operator(x, name, dim)
    if not is_unitary(arr, atol):
        raise ValueError(f"{name} is not unitary")
    return arr


def check_density_matrix(x, name="density matrix", dim=None, atol=ATOL):
    arr = check_hermitian(x, name, dim, atol)
    tr = np.trace(arr).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"{name} has trace {tr:.12g}, expected 1")
    if np.linalg.eigvalsh(arr).min() < -atol:
        raise ValueError(f"{name} is not positive semidefinite")
    return arr


def check_odd_dim(d, minimum=3):
    if isinstance(d, bool) or int(d) != d:
        raise ValueError(f"dimension must be an integer, got {d!r}")
    d = int(d)
    if d < minimum or d % 2 == 0:
        raise ValueError(f"odd dimension >= {minimum} required, got {d}")
    return d


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return value
