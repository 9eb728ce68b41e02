"""Hermitian eigendecomposition, modal matrices and unitary logarithms."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BranchCutError, DomainError
from .opalg import SectorMatrix, SectorVector, check_same_basis

HERMITIAN_INPUT_TOL = 1e-10
UNITARY_INPUT_TOL = 1e-10
BRANCH_TOL = 1e-8
DEGENERACY_TOL = 1e-10
PHASE_TOL = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the phase-fixed modal matrix (eigenvectors as columns)."""

    eigenvalues: np.ndarray
    modal: SectorMatrix

    @property
    def basis(self):
        return self.modal.basis

    def reconstruct(self) -> np.ndarray:
        W = self.modal.entries
        return (W * self.eigenvalues) @ W.conj().T

    def eigenvector(self, n: int) -> SectorVector:
        return SectorVector(self.basis, self.modal.entries[:, n].copy())


def _require_hermitian(M: np.ndarray, what: str) -> None:
    if M.size and np.max(np.abs(M - M.conj().T)) > HERMITIAN_INPUT_TOL:
        raise DomainError(f"{what} is not Hermitian")


def fix_phases(W: np.ndarray) -> np.ndarray:
    """Rotate each column so its diagonal entry is real positive.

    Columns whose diagonal entry is negligible are fixed on their
    largest-magnitude entry instead.
    """
    W = np.array(W, dtype=complex)
    for j in range(W.shape[1]):
        pivot = W[j, j] if j < W.shape[0] and abs(W[j, j]) >= PHASE_TOL else W[np.argmax(np.abs(W[:, j])), j]
        W[:, j] *= abs(pivot) / pivot
    return W


def _order_degenerate_blocks(evals: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    order = np.arange(len(evals))
    start = 0
    while start < len(evals):
        stop = start + 1
        while stop < len(evals) and evals[stop] - evals[stop - 1] < DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            lead = [int(np.argmax(np.abs(vecs[:, j]))) for j in block]
            order[start:stop] = block[np.argsort(lead, kind="stable")]
        start = stop
    return order


def diagonalize(H: SectorMatrix) -> SpectralDecomposition:
    """Eigenpairs of a Hermitian sector matrix.

    The n-th column continues the n-th free Fock state (ascending eigenvalue
    matching); every column is phase-fixed by :func:`fix_phases`.
    """
    _require_hermitian(H.entries, "Hamiltonian")
    if H.dim == 0:
        return SpectralDecomposition(np.zeros(0), SectorMatrix(H.basis, np.zeros((0, 0))))
    evals, vecs = np.linalg.eigh(H.entries)
    order = _order_degenerate_blocks(evals, vecs)
    evals, vecs = evals[order], vecs[:, order]
    return SpectralDecomposition(evals, SectorMatrix(H.basis, fix_phases(vecs)))


def log_unitary(W: SectorMatrix) -> SectorMatrix:
    """Hermitian generator ``V = i ln W`` on the principal branch, so ``W = exp(-iV)``."""
    U = W.entries
    if U.size == 0:
        return SectorMatrix(W.basis, U.copy())
    if W.unitarity_error() > UNITARY_INPUT_TOL:
        raise DomainError("matrix is not unitary")
    # complex Schur form of a normal matrix is diagonal with unitary Z
    T, Z = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T)
    if np.any(np.abs(lam + 1) < BRANCH_TOL):
        raise BranchCutError("unitary has an eigenvalue at -1; principal logarithm undefined")
    V = (Z * -np.angle(lam)) @ Z.conj().T
    return SectorMatrix(W.basis, 0.5 * (V + V.conj().T))


def exp_hermitian_generator(V: SectorMatrix) -> SectorMatrix:
    """Unitary ``exp(-iV)`` of a Hermitian generator."""
    _require_hermitian(V.entries, "generator")
    if V.dim == 0:
        return SectorMatrix(V.basis, V.entries.copy())
    mu, Q = np.linalg.eigh(0.5 * (V.entries + V.entries.conj().T))
    return SectorMatrix(V.basis, (Q * np.exp(-1j * mu)) @ Q.conj().T)


class Propagator:
    """``exp(-iHt)`` on one sector via a single cached decomposition."""

    def __init__(self, H: SectorMatrix, decomposition: SpectralDecomposition | None = None):
        self.H = H
        self.decomposition = decomposition or diagonalize(H)

    @property
    def basis(self):
        return self.H.basis

    def evolve(self, v: SectorVector, t: float) -> SectorVector:
        check_same_basis(self.basis, v.basis)
        W = self.decomposition.modal.entries
        c = W.conj().T @ v.amplitudes
        return SectorVector(self.basis, W @ (np.exp(-1j * self.decomposition.eigenvalues * t) * c))

    def evolve_many(self, v: SectorVector, times) -> np.ndarray:
        """Amplitudes at every time, shape ``(len(times), dim)``."""
        check_same_basis(self.basis, v.basis)
        W = self.decomposition.modal.entries
        c = W.conj().T @ v.amplitudes
        phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), self.decomposition.eigenvalues))
        return (phases * c) @ W.T


_cache: dict = {}
_cache_lock = threading.Lock()


def cached_propagator(key, H: SectorMatrix) -> Propagator:
    """One :class:`Propagator` per key, e.g. ``(params, K, parity)``."""
    with _cache_lock:
        prop = _cache.get(key)
        if prop is None:
            prop = _cache[key] = Propagator(H)
        return prop


def propagate(H: SectorMatrix, v: SectorVector, t: float) -> SectorVector:
    """``exp(-iHt) v``."""
    check_same_basis(H.basis, v.basis)
    key = (H.basis.K, H.basis.parity, H.entries.tobytes())
    return cached_propagator(key, H).evolve(v, t)
