"""Dense complex linear algebra for small quantum systems.

Pauli/tensor constructors, Hermitian eigendecompositions, and spectral
matrix exponentials exp(-i*H*dt) together with their exact directional
derivatives.  Everything operates on plain complex128 numpy arrays.  All
routines accept stacked operands (leading batch axes) and are deterministic:
identical inputs give bit-identical outputs on one platform.

The spectral route is used for both the exponential and its derivative so
that one eigendecomposition per Hamiltonian serves the segment propagator
and every control derivative, which is the dominant cost pattern in
gradient-based pulse optimization.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "DEGENERACY_TOL",
    "EigendecompositionError",
    "HermitianEigen",
    "pauli",
    "identity",
    "kron",
    "dagger",
    "is_hermitian",
    "is_unitary",
    "hermitian_eig",
    "expm_unitary",
    "expm_directional_derivative",
    "phase_divided_difference",
]

# Eigenvalue pairs closer than this use the degenerate (confluent) branch of
# the divided difference; below double-precision significance for |lambda| <~ 10.
DEGENERACY_TOL = 1e-12

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
for _m in _PAULI.values():
    _m.setflags(write=False)


class EigendecompositionError(np.linalg.LinAlgError):
    """Hermitian eigensolver failed to converge.

    Carries the Frobenius norm of the input's off-diagonal part as a
    diagnostic for how far from diagonalized the matrix was.
    """

    def __init__(self, message, off_diagonal_residual=None):
        super().__init__(message)
        self.off_diagonal_residual = off_diagonal_residual


class HermitianEigen(NamedTuple):
    """Eigendecomposition of a Hermitian matrix.

    eigenvalues: (..., N) real, ascending along the last axis.
    eigenvectors: (..., N, N) unitary, eigenvectors in columns, so that
        V @ diag(w) @ V^dagger reconstructs the input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` ('x', 'y' or 'z')."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}") from None


def identity(dim: int) -> np.ndarray:
    """Complex identity matrix of the given dimension."""
    return np.eye(dim, dtype=np.complex128)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor (Kronecker) product of two operators."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose, applied to the last two axes."""
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float) -> bool:
    """True if ||m - m^dagger||_F <= tol."""
    m = np.asarray(m)
    return bool(np.linalg.norm(m - dagger(m)) <= tol)


def is_unitary(m: np.ndarray, tol: float) -> bool:
    """True if ||m^dagger m - I||_F <= tol."""
    m = np.asarray(m)
    n = m.shape[-1]
    return bool(np.linalg.norm(dagger(m) @ m - np.eye(n)) <= tol)


def hermitian_eig(h: np.ndarray) -> HermitianEigen:
    """Eigendecomposition of a (nearly) Hermitian matrix.

    The input is symmetrized to (h + h^dagger)/2 before decomposition, so
    callers only need Hermiticity up to roundoff.  Accepts stacks of
    matrices on leading axes.  Eigenvalues come out ascending.
    """
    h = np.asarray(h, dtype=np.complex128)
    h_sym = 0.5 * (h + dagger(h))
    try:
        w, v = np.linalg.eigh(h_sym)
    except np.linalg.LinAlgError as exc:
        off = h_sym - _diagonal_part(h_sym)
        residual = float(np.max(np.abs(off))) if off.size else 0.0
        raise EigendecompositionError(
            f"Hermitian eigendecomposition did not converge: {exc}",
            off_diagonal_residual=residual,
        ) from exc
    return HermitianEigen(w, v)


def _diagonal_part(m: np.ndarray) -> np.ndarray:
    d = np.zeros_like(m)
    idx = np.arange(m.shape[-1])
    d[..., idx, idx] = m[..., idx, idx]
    return d


def expm_unitary(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i*h*dt) for Hermitian h, via the spectral decomposition.

    Returns V @ diag(exp(-i*w*dt)) @ V^dagger, which is unitary to
    roundoff.  Accepts stacked input.
    """
    w, v = hermitian_eig(h)
    phase = np.exp(-1j * dt * w)
    return (v * phase[..., None, :]) @ dagger(v)


def phase_divided_difference(eigenvalues: np.ndarray, dt: float) -> np.ndarray:
    """First divided differences of lam -> exp(-i*lam*dt) on an eigenvalue grid.

    Entry (p, q) is (exp(-i*w_p*dt) - exp(-i*w_q*dt)) / (w_p - w_q); pairs
    with |w_p - w_q| < DEGENERACY_TOL use the confluent limit
    -i*dt*exp(-i*w_p*dt).  Accepts stacked eigenvalue vectors.
    """
    w = np.asarray(eigenvalues, dtype=np.float64)
    wp = w[..., :, None]
    wq = w[..., None, :]
    gap = wp - wq
    phase_p = np.exp(-1j * dt * wp)
    phase_q = np.exp(-1j * dt * wq)
    near = np.abs(gap) < DEGENERACY_TOL
    safe_gap = np.where(near, 1.0, gap)
    phi = (phase_p - phase_q) / safe_gap
    confluent = -1j * dt * phase_p
    return np.where(near, np.broadcast_to(confluent, phi.shape), phi)


def expm_directional_derivative(h: np.ndarray, a: np.ndarray, dt: float) -> np.ndarray:
    """Derivative of s -> exp(-i*(h + s*a)*dt) at s = 0, for Hermitian h, a.

    Computed in the eigenbasis of h: with h = V diag(w) V^dagger and
    Phi the divided-difference table of exp(-i*w*dt), the derivative is
    V (Phi * (V^dagger a V)) V^dagger (elementwise product).
    """
    w, v = hermitian_eig(h)
    a = np.asarray(a, dtype=np.complex128)
    a_eig = dagger(v) @ a @ v
    phi = phase_divided_difference(w, dt)
    return v @ (phi * a_eig) @ dagger(v)
