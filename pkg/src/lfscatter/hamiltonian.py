"""DLCQ phi^4 operators in 1+1D.

All sums run over ordered index tuples with modes ``1..cutoff``.  The
self-induced inertia sum is not included.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path

from .errors import DomainError
from .fock import enumerate_basis
from .opalg import Monomial, OperatorPolynomial, SectorMatrix, adjoint, operator_matrix

DEFAULT_CUTOFF = 12


@dataclass(frozen=True)
class ModelParams:
    """Bare mass ``m``, coupling ``lam`` and mode cutoff ``cutoff``."""

    m: float = 1.0
    lam: float = 30.0
    cutoff: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise DomainError(f"cutoff must be a positive integer, got {self.cutoff}")
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "cutoff", int(self.cutoff))

    def with_cutoff(self, cutoff: int) -> ModelParams:
        return ModelParams(self.m, self.lam, cutoff)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d) -> ModelParams:
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        unknown = set(d) - {"m", "lam", "cutoff"}
        if unknown:
            raise DomainError(f"unknown model parameters: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> ModelParams:
        """Read a flat ``key = value`` file with keys ``m``, ``lambda``, ``cutoff``."""
        parser = configparser.ConfigParser()
        parser.read_string("[model]\n" + Path(path).read_text())
        raw = dict(parser["model"])
        conv = {"m": float, "lambda": float, "cutoff": int}
        try:
            return cls.from_dict({k: conv[k](v) for k, v in raw.items() if k in conv} | {k: v for k, v in raw.items() if k not in conv})
        except ValueError as exc:
            raise DomainError(f"bad value in config {path}: {exc}") from exc


def h_free_operator(p: ModelParams) -> OperatorPolynomial:
    """``m^2 sum_n a†_n a_n / n`` for ``n <= cutoff``."""
    return OperatorPolynomial([Monomial.of((n,), (n,), p.m**2 / n) for n in range(1, p.cutoff + 1)])


def _one_to_three(p: ModelParams) -> OperatorPolynomial:
    # (1/6)(lam/4pi) sum a†_k a_l a_m a_n / sqrt(klmn), k = l + m + n
    g = p.lam / (4 * math.pi) / 6
    terms = []
    N = p.cutoff
    for l, m, n in product(range(1, N + 1), repeat=3):
        k = l + m + n
        if k > N:
            continue
        terms.append(Monomial.of((k,), (l, m, n), g / math.sqrt(k * l * m * n)))
    return OperatorPolynomial(terms)


def interaction_operator(p: ModelParams) -> OperatorPolynomial:
    """Normal-ordered quartic interaction (2->2, 1->3 and its adjoint 3->1)."""
    g = p.lam / (4 * math.pi) / 4
    N = p.cutoff
    terms = []
    for k, l, m in product(range(1, N + 1), repeat=3):
        n = k + l - m
        if not 1 <= n <= N:
            continue
        terms.append(Monomial.of((k, l), (m, n), g / math.sqrt(k * l * m * n)))
    split = _one_to_three(p)
    return OperatorPolynomial(terms) + split + adjoint(split)


def h_full_operator(p: ModelParams) -> OperatorPolynomial:
    if p.lam == 0:
        return h_free_operator(p)
    return h_free_operator(p) + interaction_operator(p)


def harmonic_resolution_operator(cutoff: int) -> OperatorPolynomial:
    return OperatorPolynomial([Monomial.of((n,), (n,), float(n)) for n in range(1, cutoff + 1)])


def number_operator(n: int) -> OperatorPolynomial:
    """Occupation of mode ``n``: ``a†_n a_n``."""
    return OperatorPolynomial([Monomial.of((n,), (n,), 1.0)])


@lru_cache(maxsize=None)
def _cached_h_full(p: ModelParams) -> OperatorPolynomial:
    return h_full_operator(p)


@lru_cache(maxsize=256)
def sector_hamiltonian(p: ModelParams, K: int, parity: str) -> SectorMatrix:
    """Matrix of the full Hamiltonian in the ``(K, parity)`` Fock basis.

    Requires ``p.cutoff >= K``; a smaller cutoff truncates the action on the
    sector and is refused.
    """
    if p.cutoff < K:
        raise DomainError(f"cutoff {p.cutoff} is below the harmonic resolution {K}")
    # matrix is cutoff independent once cutoff >= K; share the cheapest operator
    op = _cached_h_full(p.with_cutoff(max(K, 1)))
    mat = operator_matrix(op, enumerate_basis(K, parity))
    mat.entries.setflags(write=False)
    return mat
