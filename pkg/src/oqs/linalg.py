"""Dense complex matrix helpers for small system Hilbert spaces.

Matrices are plain ``numpy`` complex arrays of shape ``(d, d)``. The helpers here
cover what the master-equation code needs: a Hermitian eigensolver with a
reproducible eigenvector phase, the system interaction-picture map
``V_t A = exp(iHt) A exp(-iHt)``, von Neumann entropy and trace distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
ENTROPY_CLIP = 1e-9
UNPHYSICAL_TOL = 1e-6


class NotHermitianError(ValueError):
    pass


class UnphysicalStateError(ValueError):
    pass


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and unitary of eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def gaps(self) -> np.ndarray:
        """Matrix of Bohr frequencies ``eps_a - eps_b``."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]

    def to_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        u = self.vectors
        return u.conj().T @ a @ u

    def from_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        u = self.vectors
        return u @ a @ u.conj().T


def _check_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate every column so its largest-magnitude entry is real and positive.

    Ties in magnitude (within 1e-12) resolve to the lowest row index.
    """
    v = np.array(vectors, dtype=complex)
    mags = np.abs(v)
    for j in range(v.shape[1]):
        col = mags[:, j]
        k = int(np.flatnonzero(col >= col.max() - 1e-12)[0])
        v[:, j] *= np.exp(-1j * np.angle(v[k, j]))
    return v


def herm_eig(m: np.ndarray, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Backed by LAPACK (``numpy.linalg.eigh``); eigenvalues come back ascending and
    eigenvector phases are fixed with :func:`fix_phases` so results are
    reproducible.

    Raises
    ------
    NotHermitianError
        If ``max|M - M^dagger| > tol``.
    numpy.linalg.LinAlgError
        If the LAPACK driver fails to converge.
    """
    m = _check_square(m)
    err = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if err > tol:
        raise NotHermitianError(f"matrix is not Hermitian: max|M - M^+| = {err:.3e} > {tol:.1e}")
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(eigenvalues=w, vectors=fix_phases(v))


def interaction_transform(a: np.ndarray, sd: SpectralDecomposition, t: float) -> np.ndarray:
    """Return ``exp(iHt) A exp(-iHt)`` for the Hamiltonian described by ``sd``.

    In the eigenbasis this is the elementwise phase ``exp(i(eps_a - eps_b) t)``.
    Negative ``t`` gives the Schroedinger-picture free propagation of ``A``.
    """
    a = _check_square(a, "A")
    if a.shape[0] != sd.dim:
        raise ValueError(f"dimension mismatch: A is {a.shape[0]}, H_S is {sd.dim}")
    a_eig = sd.to_eigenbasis(a)
    return sd.from_eigenbasis(a_eig * np.exp(1j * sd.gaps * t))


def _hermitian_eigvals(rho: np.ndarray) -> np.ndarray:
    rho = _check_square(rho, "rho")
    if not is_hermitian(rho, 1e-8):
        raise NotHermitianError("density matrix is not Hermitian")
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy ``-sum p ln p`` in nats.

    Eigenvalues in ``[-1e-9, 0]`` are treated as zero; anything below ``-1e-6``
    raises :class:`UnphysicalStateError`. Values in between are clipped too,
    since a second-order generator does not guarantee positivity.
    """
    p = _hermitian_eigvals(rho)
    tr = float(np.sum(p))
    if abs(tr - 1.0) > 1e-6:
        raise UnphysicalStateError(f"trace {tr:.9f} differs from 1")
    if p.min() < -UNPHYSICAL_TOL:
        raise UnphysicalStateError(f"negative eigenvalue {p.min():.3e}")
    p = p[p > ENTROPY_CLIP]
    return max(0.0, float(-np.sum(p * np.log(p))))


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Half the trace norm of ``rho1 - rho2``."""
    rho1 = _check_square(rho1, "rho1")
    rho2 = _check_square(rho2, "rho2")
    if rho1.shape != rho2.shape:
        raise ValueError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    diff = rho1 - rho2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2).conj()
