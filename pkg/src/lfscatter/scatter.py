"""Composite multi-particle states and their dynamics.

States are built from vacuum by dressed creators ``A† = W a† W†`` (``W`` the
wave operator of a fitted cluster) or by polynomial creators ``P†`` read off
an interacting eigenvector, then evolved with the full Hamiltonian.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateStateError, DomainError
from .fock import SectorBasis, combine_parity, enumerate_basis
from .hamiltonian import ModelParams, sector_hamiltonian
from .opalg import (
    OperatorPolynomial,
    SectorMatrix,
    SectorVector,
    apply_operator,
    check_same_basis,
    creator_polynomial,
)
from .spectral import Propagator, cached_propagator, exp_hermitian_generator
from .ucc import ClusterOperator, cached_cluster, sector_spectrum

NORM_FLOOR = 1e-12
LINE_PRUNE = 1e-12
LINE_MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Factor:
    """``[K, n]^w``: ``w`` particles of momentum ``K`` in eigenstate ``n``.

    ``parity`` restricts ``n`` to one particle-number sector; by default ``n``
    runs over both sectors merged by ascending energy.
    """

    K: int
    n: int = 0
    w: int = 1
    parity: str | None = None

    def __str__(self) -> str:
        inner = f"{self.K},{self.n}" + (f",{self.parity}" if self.parity else "")
        return f"[{inner}]" + (f"^{self.w}" if self.w != 1 else "")


@dataclass(frozen=True)
class CompositeSpec:
    """Ordered dressed-particle factors; creators apply right to left as written."""

    factors: tuple[Factor, ...]
    creator_kind: str = "dressed"

    def __post_init__(self):
        if self.creator_kind not in ("dressed", "polynomial"):
            raise DomainError(f"creator kind must be 'dressed' or 'polynomial', got {self.creator_kind!r}")
        if not self.factors:
            raise DomainError("composite spec needs at least one factor")
        for f in self.factors:
            if f.K < 1 or f.n < 0 or f.w < 1:
                raise DomainError(f"invalid factor {f}")
            if f.parity is not None and f.parity not in ("even", "odd"):
                raise DomainError(f"invalid parity in factor {f}")

    @property
    def K_tot(self) -> int:
        return sum(f.K * f.w for f in self.factors)

    _FACTOR = re.compile(r"\[\s*(\d+)\s*,\s*(\d+)\s*(?:,\s*(even|odd)\s*)?\]\s*(?:\^\s*(\d+))?")

    @classmethod
    def parse(cls, text: str) -> CompositeSpec:
        """Parse ``"A:[3,0]^2"``, ``"P:[2,0],[4,0]"`` or ``"[6,3,even]"`` (kind defaults to A)."""
        text = text.strip()
        kind = "dressed"
        if len(text) > 1 and text[1] == ":":
            prefix = text[0].upper()
            if prefix not in "AP":
                raise DomainError(f"unknown creator prefix {text[0]!r} in {text!r}")
            kind = "dressed" if prefix == "A" else "polynomial"
            text = text[2:]
        factors = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = cls._FACTOR.match(text, pos)
            if m is None:
                raise DomainError(f"cannot parse composite spec near {text[pos:]!r}")
            K, n, par, w = m.groups()
            factors.append(Factor(int(K), int(n), int(w) if w else 1, par))
            pos = m.end()
            rest = text[pos:].lstrip()
            if rest.startswith(","):
                rest = rest[1:].lstrip()
            pos = len(text) - len(rest)
        return cls(tuple(factors), kind)

    def __str__(self) -> str:
        return ("A:" if self.creator_kind == "dressed" else "P:") + ",".join(str(f) for f in self.factors)


def eigenstate_label(params: ModelParams, K: int, n: int, parity: str | None = None) -> tuple[str, int]:
    """Map eigenstate index ``n`` at momentum ``K`` to ``(parity, index within that sector)``."""
    if parity is not None:
        dim = enumerate_basis(K, parity).dim
        if not 0 <= n < dim:
            raise DomainError(f"eigenstate index {n} out of range for ({K},{parity}) of dim {dim}")
        return parity, n
    merged = []
    for par in ("odd", "even"):
        for i, e in enumerate(sector_spectrum(params, K, par).eigenvalues):
            merged.append((e, par != "odd", i, par))
    merged.sort()
    if not 0 <= n < len(merged):
        raise DomainError(f"eigenstate index {n} out of range for K={K} ({len(merged)} states)")
    _, _, i, par = merged[n]
    return par, i


def wave_operator_in_sector(c: ClusterOperator, basis: SectorBasis) -> SectorMatrix:
    """Unitary ``exp(-i V)`` of the cluster operator restricted to ``basis``."""
    return exp_hermitian_generator(c.generator_matrix(basis))


def _target_basis(v: SectorVector, K: int, parity: str) -> SectorBasis:
    return enumerate_basis(v.basis.K + K, combine_parity(v.basis.parity, parity))


def apply_dressed_creation(c: ClusterOperator, K: int, n: int, v: SectorVector, parity: str | None = None) -> SectorVector:
    """``W a†_F W† v`` with ``F`` the free partner of eigenstate ``[K, n]``. Not renormalized."""
    par, i = eigenstate_label(c.params, K, n, parity)
    creator = creator_polynomial(enumerate_basis(K, par)[i])
    target = _target_basis(v, K, par)
    w_cur = wave_operator_in_sector(c, v.basis)
    rotated = SectorVector(v.basis, w_cur.entries.conj().T @ v.amplitudes)
    created = apply_operator(creator, rotated, target)
    return wave_operator_in_sector(c, target).apply(created)


def polynomial_creator(params: ModelParams, K: int, n: int, parity: str | None = None) -> OperatorPolynomial:
    """``P† = sum_F <F|[K,n]> 𝔞†_F`` built from one column of the modal matrix."""
    par, i = eigenstate_label(params, K, n, parity)
    basis = enumerate_basis(K, par)
    column = sector_spectrum(params, K, par).modal.entries[:, i]
    out = OperatorPolynomial.zero()
    for state, amp in zip(basis.states, column):
        out = out + creator_polynomial(state) * amp
    return out


def apply_polynomial_creation(params: ModelParams, K: int, n: int, v: SectorVector, parity: str | None = None) -> SectorVector:
    par, _ = eigenstate_label(params, K, n, parity)
    return apply_operator(polynomial_creator(params, K, n, parity), v, _target_basis(v, K, par))


ClusterSource = Callable[[int], ClusterOperator]


def prepare_composite(spec: CompositeSpec, params: ModelParams, clusters: ClusterSource | None = None) -> SectorVector:
    """Normalized composite state ``D (C_1)^{w_1} (C_2)^{w_2} ... |vac>``.

    The rightmost factor acts first.  ``clusters(K)`` supplies the cluster
    operator fitted at ``K_max = K``; fits are cached by default.
    """
    if clusters is None:
        clusters = lambda K: cached_cluster(params, K)  # noqa: E731
    v = SectorVector.vacuum()
    for f in reversed(spec.factors):
        for _ in range(f.w):
            if spec.creator_kind == "dressed":
                v = apply_dressed_creation(clusters(f.K), f.K, f.n, v, f.parity)
            else:
                v = apply_polynomial_creation(params, f.K, f.n, v, f.parity)
    norm = v.norm()
    if norm < NORM_FLOOR:
        raise DegenerateStateError(f"composite state {spec} has vanishing norm {norm:.3g}")
    return SectorVector(v.basis, v.amplitudes / norm)


def sector_propagator(params: ModelParams, basis: SectorBasis) -> Propagator:
    H = sector_hamiltonian(params, basis.K, basis.parity)
    return cached_propagator((params, basis.K, basis.parity), H)


def transition_probability(i: SectorVector, f: SectorVector, H: SectorMatrix, times) -> np.ndarray:
    """``|<f| exp(-iHt) |i>|^2`` on a time grid."""
    check_same_basis(i.basis, f.basis)
    check_same_basis(H.basis, i.basis)
    prop = Propagator(H)
    amps = prop.evolve_many(i, times) @ f.amplitudes.conj()
    return np.abs(amps) ** 2


@dataclass(frozen=True)
class SpectralLine:
    frequency: float
    weight: complex


def spectral_lines(i: SectorVector, f: SectorVector, H: SectorMatrix) -> list[SpectralLine]:
    """Exact frequencies ``w_n - w_m`` and weights ``d_n* c_n d_m c_m*`` of ``|<f|e^{-iHt}|i>|^2``.

    Weights of equal frequencies are summed; negligible lines are dropped.
    """
    check_same_basis(i.basis, f.basis)
    check_same_basis(H.basis, i.basis)
    evals, U = np.linalg.eigh(H.entries)
    c = U.conj().T @ i.amplitudes
    d = U.conj().T @ f.amplitudes
    a = d.conj() * c
    freq = np.subtract.outer(evals, evals).ravel()
    weight = np.outer(a, a.conj()).ravel()
    order = np.argsort(freq, kind="stable")
    lines: list[SpectralLine] = []
    cur_f, cur_w, start_f = None, 0j, None
    for k in order:
        if start_f is not None and freq[k] - start_f <= LINE_MERGE_TOL:
            cur_w += weight[k]
            continue
        if start_f is not None:
            lines.append(SpectralLine(cur_f, cur_w))
        start_f, cur_f, cur_w = freq[k], freq[k], weight[k]
    if start_f is not None:
        lines.append(SpectralLine(cur_f, cur_w))
    # snap the zero line
    lines = [SpectralLine(0.0, complex(ln.weight.real, 0.0)) if abs(ln.frequency) <= LINE_MERGE_TOL else ln for ln in lines]
    return [ln for ln in lines if abs(ln.weight) >= LINE_PRUNE]


def lines_series(lines: Sequence[SpectralLine], times) -> np.ndarray:
    """Rebuild the probability series from spectral lines."""
    t = np.asarray(times, dtype=float)
    f = np.array([ln.frequency for ln in lines])
    w = np.array([ln.weight for ln in lines])
    return (np.exp(-1j * np.outer(t, f)) @ w).real


def fft_spectrum(series, dt: float, window: str | None = "hann") -> tuple[np.ndarray, np.ndarray]:
    """One-sided DFT magnitude of a uniformly sampled series.

    The frequency axis is angular (``2 pi`` times cycles per unit time), so
    peaks line up with energy differences of the Hamiltonian.
    """
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two samples for a spectrum")
    if window == "hann":
        win = np.hanning(x.size)
    elif window is None:
        win = np.ones(x.size)
    else:
        raise DomainError(f"unknown window {window!r}")
    mags = np.abs(np.fft.rfft(x * win)) / win.sum()
    omega = 2 * np.pi * np.fft.rfftfreq(x.size, dt)
    return omega, mags


def spectrum_peaks(omega: np.ndarray, mags: np.ndarray, rel_height: float = 1e-3) -> np.ndarray:
    """Angular frequencies of local maxima higher than ``rel_height`` times the tallest."""
    from scipy.signal import find_peaks

    padded = np.concatenate([[-np.inf], mags, [-np.inf]])
    idx, _ = find_peaks(padded, height=rel_height * mags.max())
    return omega[idx - 1]


def occupation(v: SectorVector, n: int) -> float:
    """``<v| a†_n a_n |v>`` in a Fock basis (diagonal number operator)."""
    occ = np.array([s.occupancy(n) for s in v.basis.states], dtype=float)
    return float(np.sum(occ * np.abs(v.amplitudes) ** 2))


def pdf(state: SectorVector, H: SectorMatrix, n: int, t: float) -> float:
    """Occupation of mode ``n`` in ``exp(-iHt)|state>``."""
    if n < 1 or n > max(state.basis.K, 1):
        raise DomainError(f"mode {n} outside 1..{state.basis.K}")
    check_same_basis(H.basis, state.basis)
    return occupation(Propagator(H).evolve(state, t), n)


def pdf_table(state: SectorVector, H: SectorMatrix, times) -> np.ndarray:
    """Occupations of all modes ``1..K`` over a time grid, shape ``(len(times), K)``."""
    check_same_basis(H.basis, state.basis)
    K = state.basis.K
    amps = Propagator(H).evolve_many(state, times)
    occ = np.array([[s.occupancy(n) for n in range(1, K + 1)] for s in state.basis.states], dtype=float)
    return (np.abs(amps) ** 2) @ occ.reshape(state.basis.dim, K)


def default_time_grid(t_max: float = 200.0, samples: int = 8192) -> np.ndarray:
    return np.linspace(0.0, t_max, samples)
