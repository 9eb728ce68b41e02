"""Normal-ordered bosonic ladder-operator algebra.

A :class:`Monomial` is ``coeff * a†_{i1}...a†_{ir} a_{j1}...a_{js}``; an
:class:`OperatorPolynomial` is a sum of them keyed by their operator content.
Matrices in a :class:`~lfscatter.fock.SectorBasis` are assembled row by row
from :func:`apply_monomial`, so they are exact up to float rounding.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import ConsistencyError, DomainError
from .fock import FockState, SectorBasis

PRUNE_TOL = 1e-14
HERMITIAN_TOL = 1e-12

Key = tuple[tuple[int, ...], tuple[int, ...]]


def canonical_key(create: Iterable[int], annihilate: Iterable[int]) -> Key:
    create = tuple(sorted(create, reverse=True))
    annihilate = tuple(sorted(annihilate))
    if any(n < 1 for n in create + annihilate):
        raise DomainError("mode labels must be positive")
    return create, annihilate


@dataclass(frozen=True)
class Monomial:
    """Normal-ordered product of ladder operators with a complex coefficient.

    Creators are stored descending, annihilators ascending.
    """

    create: tuple[int, ...]
    annihilate: tuple[int, ...]
    coeff: complex = 1.0

    @classmethod
    def of(cls, create: Iterable[int] = (), annihilate: Iterable[int] = (), coeff: complex = 1.0) -> Monomial:
        c, a = canonical_key(create, annihilate)
        return cls(c, a, complex(coeff))

    @classmethod
    def from_word(cls, word: Sequence[tuple[str, int]], coeff: complex = 1.0) -> Monomial:
        """Build from an operator word such as ``[("+", 1), ("+", 1), ("-", 3)]``.

        Words with a creator to the right of an annihilator are rejected
        rather than reordered.
        """
        create, annihilate = [], []
        for kind, n in word:
            if kind == "+":
                if annihilate:
                    raise DomainError(f"word is not normal ordered: {word}")
                create.append(n)
            elif kind == "-":
                annihilate.append(n)
            else:
                raise DomainError(f"unknown operator kind {kind!r}")
        return cls.of(create, annihilate, coeff)

    @property
    def key(self) -> Key:
        return self.create, self.annihilate

    @property
    def momentum_transfer(self) -> int:
        return sum(self.create) - sum(self.annihilate)

    @property
    def number_change(self) -> int:
        return len(self.create) - len(self.annihilate)

    @property
    def is_scalar(self) -> bool:
        return not self.create and not self.annihilate

    def adjoint(self) -> Monomial:
        return Monomial.of(self.annihilate, self.create, complex(self.coeff).conjugate())

    def scaled(self, factor: complex) -> Monomial:
        return Monomial(self.create, self.annihilate, self.coeff * factor)

    def __str__(self) -> str:
        return f"({self.coeff:.6g}) {format_key(self.key)}"


def format_key(key: Key) -> str:
    create, annihilate = key
    ops = [f"a+{n}" for n in create] + [f"a{n}" for n in annihilate]
    return " ".join(ops) if ops else "1"


def apply_monomial(mono: Monomial, state: FockState) -> Optional[tuple[FockState, complex]]:
    """Act with ``mono`` on a Fock state.

    Returns the image state and amplitude (including ``mono.coeff``), or
    ``None`` when an annihilator hits an empty mode.
    """
    occ = dict(state.modes)
    amp = 1.0
    for n in mono.annihilate:
        w = occ.get(n, 0)
        if w == 0:
            return None
        amp *= math.sqrt(w)
        occ[n] = w - 1
    for n in mono.create:
        w = occ.get(n, 0)
        amp *= math.sqrt(w + 1)
        occ[n] = w + 1
    return FockState.from_occupancies(occ), mono.coeff * amp


def _normal_order_single_mode(p: int, q: int) -> Iterator[tuple[int, int, int]]:
    # a^p (a†)^q = sum_k C(p,k) C(q,k) k! (a†)^(q-k) a^(p-k)
    for k in range(min(p, q) + 1):
        yield q - k, p - k, math.comb(p, k) * math.comb(q, k) * math.factorial(k)


def monomial_product(left: Monomial, right: Monomial) -> list[Monomial]:
    """Normal-ordered expansion of ``left @ right`` (bosonic Wick reordering)."""
    # left = C_L A_L, right = C_R A_R; only A_L C_R needs reordering, mode by mode
    ann = Counter(left.annihilate)
    cre = Counter(right.create)
    modes = sorted(set(ann) | set(cre))
    partial: list[tuple[list[int], list[int], int]] = [([], [], 1)]
    for n in modes:
        nxt = []
        for c, a, w in partial:
            for qc, pa, mult in _normal_order_single_mode(ann[n], cre[n]):
                nxt.append((c + [n] * qc, a + [n] * pa, w * mult))
        partial = nxt
    coeff = left.coeff * right.coeff
    return [
        Monomial.of(list(left.create) + c, a + list(right.annihilate), coeff * w)
        for c, a, w in partial
    ]


class OperatorPolynomial:
    """Sum of normal-ordered monomials with complex coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Key, complex] | Iterable[Monomial] = ()):
        acc: dict[Key, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((m.key, m.coeff) for m in terms)
        for key, c in items:
            key = canonical_key(*key)
            acc[key] = acc.get(key, 0.0) + complex(c)
        self._terms = {k: v for k, v in acc.items() if abs(v) > PRUNE_TOL}

    @classmethod
    def scalar(cls, value: complex) -> OperatorPolynomial:
        return cls({((), ()): value})

    @classmethod
    def zero(cls) -> OperatorPolynomial:
        return cls()

    @property
    def terms(self) -> dict[Key, complex]:
        return dict(self._terms)

    def monomials(self) -> list[Monomial]:
        return [Monomial(c, a, v) for (c, a), v in sorted(self._terms.items())]

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.monomials())

    def coeff(self, key: Key) -> complex:
        return self._terms.get(canonical_key(*key), 0.0)

    def __add__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        merged = dict(self._terms)
        for k, v in other._terms.items():
            merged[k] = merged.get(k, 0.0) + v
        return OperatorPolynomial(merged)

    def __neg__(self) -> OperatorPolynomial:
        return OperatorPolynomial({k: -v for k, v in self._terms.items()})

    def __sub__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        return self + (-other)

    def __mul__(self, factor: complex) -> OperatorPolynomial:
        return OperatorPolynomial({k: v * factor for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: OperatorPolynomial) -> OperatorPolynomial:
        out: list[Monomial] = []
        for left in self.monomials():
            for right in other.monomials():
                out.extend(monomial_product(left, right))
        return OperatorPolynomial(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def allclose(self, other: OperatorPolynomial, tol: float = HERMITIAN_TOL) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= tol for k in keys)

    def adjoint(self) -> OperatorPolynomial:
        return adjoint(self)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return self.allclose(adjoint(self), tol)

    def conserves_momentum(self) -> bool:
        return all(sum(c) == sum(a) for c, a in self._terms)

    def preserves_parity(self) -> bool:
        return all((len(c) - len(a)) % 2 == 0 for c, a in self._terms)

    def to_json(self) -> list[dict]:
        return [
            {"create": list(c), "annihilate": list(a), "re": v.real, "im": v.imag}
            for (c, a), v in sorted(self._terms.items())
        ]

    @classmethod
    def from_json(cls, items: Iterable[Mapping]) -> OperatorPolynomial:
        return cls({(tuple(d["create"]), tuple(d["annihilate"])): complex(d["re"], d["im"]) for d in items})

    def __repr__(self) -> str:
        body = " + ".join(str(m) for m in self.monomials()) or "0"
        return f"OperatorPolynomial({body})"


def adjoint(P: OperatorPolynomial) -> OperatorPolynomial:
    """Hermitian conjugate: creators and annihilators swapped, coefficients conjugated."""
    return OperatorPolynomial({(a, c): v.conjugate() for (c, a), v in P._terms.items()})


def creator_polynomial(state: FockState) -> OperatorPolynomial:
    """``𝔞†_F``: normalized monomial with ``𝔞†_F |vac> = |F>``."""
    norm = math.prod(math.factorial(w) for _, w in state.modes)
    return OperatorPolynomial([Monomial.of(state.parts(), (), 1.0 / math.sqrt(norm))])


@dataclass
class SectorVector:
    """Amplitudes of a state in one sector basis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DomainError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match basis {self.basis.label} of dim {self.basis.dim}"
            )

    @classmethod
    def unit(cls, basis: SectorBasis, state: FockState) -> SectorVector:
        v = np.zeros(basis.dim, dtype=complex)
        v[basis.index[state]] = 1.0
        return cls(basis, v)

    @classmethod
    def vacuum(cls) -> SectorVector:
        from .fock import enumerate_basis

        return cls(enumerate_basis(0, "even"), np.ones(1, dtype=complex))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> SectorVector:
        return SectorVector(self.basis, self.amplitudes / self.norm())

    def vdot(self, other: SectorVector) -> complex:
        """``<self|other>``."""
        check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def as_dict(self) -> dict[str, complex]:
        return {str(s): complex(a) for s, a in zip(self.basis.states, self.amplitudes)}


@dataclass
class SectorMatrix:
    """Dense operator matrix in one sector basis (rows and columns share it)."""

    basis: SectorBasis
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        d = self.basis.dim
        if self.entries.shape != (d, d):
            raise DomainError(f"matrix of shape {self.entries.shape} does not match basis {self.basis.label}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    def hermiticity_error(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def unitarity_error(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.entries.conj().T @ self.entries - np.eye(self.dim))))

    def apply(self, v: SectorVector) -> SectorVector:
        check_same_basis(self.basis, v.basis)
        return SectorVector(self.basis, self.entries @ v.amplitudes)

    def dagger(self) -> SectorMatrix:
        return SectorMatrix(self.basis, self.entries.conj().T)


def check_same_basis(a: SectorBasis, b: SectorBasis) -> None:
    if (a.K, a.parity) != (b.K, b.parity):
        raise DomainError(f"basis mismatch: {a.label} vs {b.label}")


def apply_operator(P: OperatorPolynomial, v: SectorVector, target: SectorBasis) -> SectorVector:
    """Apply ``P`` to ``v`` and collect the image in ``target`` coordinates.

    Images outside ``target``'s ``(K, parity)`` are discarded; an image
    inside it but missing from ``target`` raises :class:`ConsistencyError`.
    """
    out = np.zeros(target.dim, dtype=complex)
    monos = P.monomials()
    for j, state in enumerate(v.basis.states):
        amp_j = v.amplitudes[j]
        if amp_j == 0:
            continue
        for mono in monos:
            res = apply_monomial(mono, state)
            if res is None:
                continue
            image, amp = res
            if image.K != target.K or image.parity != target.parity:
                continue
            try:
                i = target.index[image]
            except KeyError:
                raise ConsistencyError(f"image {image} missing from basis {target.label}") from None
            out[i] += amp * amp_j
    return SectorVector(target, out)


def operator_matrix(P: OperatorPolynomial, basis: SectorBasis) -> SectorMatrix:
    """Matrix ``<F_i| P |F_j>`` of ``P`` in ``basis``.

    Terms that map out of the sector contribute nothing.
    """
    d = basis.dim
    mat = np.zeros((d, d), dtype=complex)
    monos = [m for m in P.monomials() if m.momentum_transfer == 0 and m.number_change % 2 == 0]
    for j, state in enumerate(basis.states):
        for mono in monos:
            res = apply_monomial(mono, state)
            if res is None:
                continue
            image, amp = res
            mat[basis.index[image], j] += amp
    return SectorMatrix(basis, mat)
