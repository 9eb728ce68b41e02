"""Exact unitary-coupled-cluster fit of the wave operator.

The cluster operator ``V`` is a Hermitian normal-ordered polynomial whose
matrix in every sector ``K' <= K_max`` equals ``i ln W_K'``, where ``W_K'`` is
the phase-fixed modal matrix of that sector.  The coefficients solve a
linear system; its degree is escalated until the system is consistent
(rank test on the augmented matrix) and the minimum-norm solution is kept.
Diagonal and off-diagonal parts are fitted as independent systems.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, FitFailure
from .fock import FockState, SectorBasis, enumerate_basis
from .hamiltonian import ModelParams, sector_hamiltonian
from .opalg import (
    Key,
    Monomial,
    OperatorPolynomial,
    SectorMatrix,
    apply_monomial,
    monomial_product,
    operator_matrix,
)
from .spectral import SpectralDecomposition, diagonalize, exp_hermitian_generator, log_unitary

RANK_RTOL = 1e-10
COEFF_PRUNE = 1e-12
FIT_TOL = 1e-8


@lru_cache(maxsize=None)
def sector_spectrum(params: ModelParams, K: int, parity: str) -> SpectralDecomposition:
    """Phase-fixed eigendecomposition of the full Hamiltonian on ``(K, parity)``."""
    return diagonalize(sector_hamiltonian(params, K, parity))


@lru_cache(maxsize=None)
def target_generator(params: ModelParams, K: int, parity: str) -> SectorMatrix:
    """``i ln W`` for the modal matrix ``W`` of one sector."""
    return log_unitary(sector_spectrum(params, K, parity).modal)


def sector_bases(K_max: int) -> list[SectorBasis]:
    """Non-empty sector bases with ``1 <= K <= K_max``, odd before even."""
    return [b for K in range(1, K_max + 1) for par in ("odd", "even") if (b := enumerate_basis(K, par)).dim]


@dataclass(frozen=True)
class Connector:
    """Minimal monomial with ``mono |source> = |target>`` exactly."""

    source: FockState
    target: FockState
    mono: Monomial


def build_connector(source: FockState, target: FockState) -> Connector:
    """Monomial annihilating the surplus of ``source`` and creating that of ``target``."""
    if source == target:
        raise DomainError(f"no connector between identical states {source}")
    if source.K != target.K or source.parity != target.parity:
        raise DomainError(f"{source} and {target} lie in different sectors")
    src, tgt = source.occupancies, target.occupancies
    annihilate = [n for n in src for _ in range(src[n] - tgt.get(n, 0))]
    create = [n for n in tgt for _ in range(tgt[n] - src.get(n, 0))]
    bare = Monomial.of(create, annihilate)
    image, amp = apply_monomial(bare, source)
    assert image == target
    return Connector(source, target, bare.scaled(1.0 / amp))


def generate_diagonal_ansatz(K: int, r_max: int) -> list[Monomial]:
    """Number-conserving monomials ``a†_{i1}..a†_{ir} a_{i1}..a_{ir}``, ``r <= r_max``, modes ``<= K``."""
    out: list[Monomial] = []
    for r in range(1, r_max + 1):
        for modes in combinations_with_replacement(range(1, K + 1), r):
            out.append(Monomial.of(modes, modes))
    return out


def _pair_key(key: Key) -> frozenset:
    return frozenset((key, (key[1], key[0])))


def generate_offdiag_ansatz(bases: Sequence[SectorBasis], r_max: int) -> list[Monomial]:
    """Representatives ``O`` of the Hermitian pairs ``theta O + conj(theta) O†``.

    Level 2 holds connectors from each basis state to every higher-index
    state of the same sector; level ``r`` multiplies level ``r-1`` by each
    ``a†_n a_n`` and keeps every term of the normal-ordered product.
    Duplicate pairs keep their first occurrence.
    """
    if r_max < 2:
        return []
    K = max((b.K for b in bases), default=0)
    seen: set = set()
    out: list[Monomial] = []

    def add(m: Monomial) -> None:
        pk = _pair_key(m.key)
        if pk not in seen:
            seen.add(pk)
            out.append(m)

    level: list[Monomial] = []
    for basis in bases:
        for j, src in enumerate(basis.states):
            for tgt in basis.states[j + 1 :]:
                level.append(build_connector(src, tgt).mono)
    for m in level:
        add(m)
    spectators = [Monomial.of((n,), (n,)) for n in range(1, K + 1)]
    for _ in range(3, r_max + 1):
        nxt: list[Monomial] = []
        for m in level:
            for s in spectators:
                nxt.extend(monomial_product(m, s))
        level = nxt
        for m in level:
            add(m)
    return out


def _numerical_rank(M: np.ndarray, scale: float) -> int:
    if M.size == 0 or scale == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > RANK_RTOL * scale))


def solve_min_norm(A: np.ndarray, h: np.ndarray) -> tuple[np.ndarray | None, int, int]:
    """Rank test and minimum-norm solve of ``A x = h``.

    Returns ``(x, rank A, rank [A|h])`` with ``x = None`` when inconsistent.
    Singular values below ``RANK_RTOL`` times the largest one count as zero.
    """
    n = A.shape[1]
    if A.size == 0:
        ok = not np.any(np.abs(h) > RANK_RTOL)
        return (np.zeros(n) if ok else None), 0, int(not ok)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    smax = s[0] if s.size else 0.0
    aug_scale = max(smax, float(np.max(np.abs(h))) if h.size else 0.0)
    rank_a = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    rank_ab = _numerical_rank(np.column_stack([A, h]), np.linalg.norm(np.column_stack([A, h]), 2) if aug_scale else 0.0)
    if rank_ab > rank_a:
        return None, rank_a, rank_ab
    keep = s > RANK_RTOL * smax if smax > 0 else np.zeros_like(s, dtype=bool)
    x = Vt[keep].T @ ((U[:, keep].T @ h) / s[keep])
    return x, rank_a, rank_ab


def _diag_system(bases, targets, monos):
    rows, rhs = [], []
    for basis in bases:
        V = targets[basis.K, basis.parity].entries
        for i, state in enumerate(basis.states):
            row = []
            for m in monos:
                res = apply_monomial(m, state)
                row.append(res[1].real if res is not None and res[0] == state else 0.0)
            rows.append(row)
            rhs.append(V[i, i].real)
    return np.array(rows, dtype=float).reshape(len(rows), len(monos)), np.array(rhs, dtype=float)


def _offdiag_system(bases, targets, monos):
    # unknowns per pair: x, y with theta = x + i y; term = theta O + conj(theta) O†
    blocks_A, blocks_h = [], []
    adjoints = [m.adjoint() for m in monos]
    for basis in bases:
        d = basis.dim
        if d < 2:
            continue
        V = targets[basis.K, basis.parity].entries
        lower = [(i1, i2) for i1 in range(d) for i2 in range(i1)]
        pos = {ij: r for r, ij in enumerate(lower)}
        O = np.zeros((len(lower), len(monos)), dtype=complex)
        Od = np.zeros_like(O)
        for col, (m, md) in enumerate(zip(monos, adjoints)):
            for j, state in enumerate(basis.states):
                for target, mat in ((m, O), (md, Od)):
                    res = apply_monomial(target, state)
                    if res is None:
                        continue
                    image, amp = res
                    i = basis.index.get(image)
                    if i is not None and (i, j) in pos:
                        mat[pos[i, j], col] += amp
        Ac = np.empty((len(lower), 2 * len(monos)), dtype=complex)
        Ac[:, 0::2] = O + Od
        Ac[:, 1::2] = 1j * (O - Od)
        hc = np.array([V[i1, i2] for i1, i2 in lower])
        blocks_A.append(np.vstack([Ac.real, Ac.imag]))
        blocks_h.append(np.concatenate([hc.real, hc.imag]))
    if not blocks_A:
        return np.zeros((0, 2 * len(monos))), np.zeros(0)
    return np.vstack(blocks_A), np.concatenate(blocks_h)


@dataclass
class ClusterOperator:
    """Fitted Hermitian cluster operator ``V`` with ``W = exp(-iV)``."""

    K_max: int
    poly: OperatorPolynomial
    params: ModelParams
    fit_report: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "K_max": self.K_max,
            "model": self.params.to_dict(),
            "terms": self.poly.to_json(),
            "fit_report": self.fit_report,
        }

    @classmethod
    def from_json(cls, data: dict) -> ClusterOperator:
        return cls(
            K_max=int(data["K_max"]),
            poly=OperatorPolynomial.from_json(data["terms"]),
            params=ModelParams.from_dict(data["model"]),
            fit_report=data.get("fit_report", {}),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> ClusterOperator:
        return cls.from_json(json.loads(Path(path).read_text()))

    def generator_matrix(self, basis: SectorBasis) -> SectorMatrix:
        return operator_matrix(self.poly, basis)

    def wave_matrix(self, basis: SectorBasis) -> SectorMatrix:
        return exp_hermitian_generator(self.generator_matrix(basis))

    def hermitian_pairs(self) -> list[tuple[Key, complex]]:
        """``(key of O, theta)`` for each off-diagonal pair, ``O`` chosen with the larger creator tuple."""
        out = []
        for (c, a), v in sorted(self.poly.terms.items()):
            if (c, a) != (a, c) and (c, a) > (a, c):
                out.append(((c, a), v))
        return out

    def diagonal_terms(self) -> list[tuple[Key, complex]]:
        return [((c, a), v) for (c, a), v in sorted(self.poly.terms.items()) if c == a]


def _assemble(diag_monos, x_d, offd_monos, x_o) -> OperatorPolynomial:
    terms: dict[Key, complex] = {}

    def put(key, val):
        terms[key] = terms.get(key, 0.0) + val

    for m, th in zip(diag_monos, x_d):
        if abs(th) > COEFF_PRUNE:
            put(m.key, th * m.coeff)
    for k, m in enumerate(offd_monos):
        theta = complex(x_o[2 * k], x_o[2 * k + 1])
        c = theta * m.coeff
        if abs(c) > COEFF_PRUNE:
            put(m.key, c)
            put((m.key[1], m.key[0]), c.conjugate())
    return OperatorPolynomial({k: v for k, v in terms.items() if abs(v) > COEFF_PRUNE})


def fit_cluster_operator(params: ModelParams, K_max: int) -> ClusterOperator:
    """Fit the exact cluster operator for all sectors ``K' <= K_max``."""
    if K_max < 1:
        raise DomainError(f"K_max must be >= 1, got {K_max}")
    bases = sector_bases(K_max)
    targets = {(b.K, b.parity): target_generator(params, b.K, b.parity) for b in bases}
    r_limit = max(K_max, 2)

    for r_d in range(1, r_limit + 1):
        diag_monos = generate_diagonal_ansatz(K_max, r_d)
        A, h = _diag_system(bases, targets, diag_monos)
        x_d, rank_d, rank_dh = solve_min_norm(A, h)
        if x_d is not None:
            break
    else:
        raise FitFailure(f"diagonal system inconsistent up to r_max={r_limit} (rank {rank_d} < {rank_dh})")

    for r_o in range(2, r_limit + 1):
        offd_monos = generate_offdiag_ansatz(bases, r_o)
        A, h = _offdiag_system(bases, targets, offd_monos)
        x_o, rank_o, rank_oh = solve_min_norm(A, h)
        if x_o is not None:
            break
    else:
        raise FitFailure(f"off-diagonal system inconsistent up to r_max={r_limit} (rank {rank_o} < {rank_oh})")

    poly = _assemble(diag_monos, x_d, offd_monos, x_o)
    cluster = ClusterOperator(K_max, poly, params)
    cluster.fit_report = {
        "r_max_diagonal": r_d,
        "r_max_offdiagonal": r_o,
        "n_diagonal_unknowns": len(diag_monos),
        "n_offdiagonal_pairs": len(offd_monos),
        "rank_diagonal": rank_d,
        "rank_offdiagonal": rank_o,
        "n_terms": len(poly),
        "sector_dims": {f"{b.K},{b.parity}": b.dim for b in bases},
    }
    cluster.fit_report.update(verify_fit(cluster, params).to_json())
    return cluster


@lru_cache(maxsize=None)
def cached_cluster(params: ModelParams, K_max: int) -> ClusterOperator:
    return fit_cluster_operator(params, K_max)


@dataclass
class FitReport:
    residuals: dict[str, float]
    tol: float = FIT_TOL

    @property
    def ok(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def failures(self) -> list[str]:
        return [k for k, r in self.residuals.items() if r > self.tol]

    def to_json(self) -> dict:
        return {"residuals": dict(self.residuals), "max_residual": self.max_residual, "ok": self.ok}


def verify_fit(c: ClusterOperator, params: ModelParams | None = None, K_max: int | None = None) -> FitReport:
    """Max-abs deviation of the cluster matrix from ``i ln W`` in every block ``K' <= K_max``."""
    params = params or c.params
    K_max = c.K_max if K_max is None else K_max
    res = {}
    for b in sector_bases(K_max):
        diff = operator_matrix(c.poly, b).entries - target_generator(params, b.K, b.parity).entries
        res[f"{b.K},{b.parity}"] = float(np.max(np.abs(diff)))
    return FitReport(res)
