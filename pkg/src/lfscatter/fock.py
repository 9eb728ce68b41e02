"""Bosonic Fock states and sector bases of fixed harmonic resolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping

from .errors import DomainError

PARITIES = ("even", "odd")


def check_parity(parity: str) -> str:
    if parity not in PARITIES:
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")
    return parity


def combine_parity(a: str, b: str) -> str:
    """Particle-number parity of the product of two states."""
    return "even" if (a == b) else "odd"


@dataclass(frozen=True, order=False)
class FockState:
    """Occupation-number state ``|n1^w1, n2^w2, ...>``.

    ``modes`` holds ``(n, w)`` pairs with strictly increasing momentum ``n``
    and occupancy ``w >= 1``.  The empty tuple is the vacuum.
    """

    modes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 0
        for n, w in self.modes:
            if not (isinstance(n, int) and isinstance(w, int)):
                raise DomainError(f"mode labels and occupancies must be int: {self.modes}")
            if n <= prev:
                raise DomainError(f"modes must be positive and strictly increasing: {self.modes}")
            if w < 1:
                raise DomainError(f"occupancies must be >= 1: {self.modes}")
            prev = n

    @classmethod
    def from_occupancies(cls, occ: Mapping[int, int]) -> FockState:
        return cls(tuple(sorted((int(n), int(w)) for n, w in occ.items() if w)))

    @classmethod
    def from_parts(cls, parts) -> FockState:
        """Build from a multiset of single-particle momenta, e.g. ``[1, 1, 3]``."""
        occ: dict[int, int] = {}
        for p in parts:
            occ[p] = occ.get(p, 0) + 1
        return cls.from_occupancies(occ)

    @classmethod
    def parse(cls, text: str) -> FockState:
        """Inverse of :meth:`__str__` (``"1^3,3^1"``, ``"3"`` or ``"vac"``)."""
        text = text.strip()
        if text in ("vac", ""):
            return cls()
        occ: dict[int, int] = {}
        try:
            for factor in text.split(","):
                n, _, w = factor.strip().partition("^")
                n_i, w_i = int(n), int(w) if w else 1
                if w_i < 1:
                    raise ValueError("occupancy must be >= 1")
                occ[n_i] = occ.get(n_i, 0) + w_i
        except ValueError as exc:
            raise DomainError(f"cannot parse Fock state {text!r}") from exc
        if any(n < 1 for n in occ):
            raise DomainError(f"mode labels must be positive in {text!r}")
        return cls.from_occupancies(occ)

    @property
    def occupancies(self) -> dict[int, int]:
        return dict(self.modes)

    @property
    def K(self) -> int:
        return sum(n * w for n, w in self.modes)

    @property
    def n_particles(self) -> int:
        return sum(w for _, w in self.modes)

    @property
    def parity(self) -> str:
        return PARITIES[self.n_particles % 2]

    def occupancy(self, n: int) -> int:
        for mode, w in self.modes:
            if mode == n:
                return w
        return 0

    def parts(self) -> list[int]:
        return [n for n, w in self.modes for _ in range(w)]

    def __str__(self) -> str:
        if not self.modes:
            return "vac"
        return ",".join(f"{n}^{w}" for n, w in self.modes)


VACUUM = FockState()


def free_energy_fraction(state: FockState) -> Fraction:
    """Exact ``sum_j w_j / n_j`` (free energy in units of m^2)."""
    return sum((Fraction(w, n) for n, w in state.modes), Fraction(0))


def free_energy(state: FockState, m: float = 1.0) -> float:
    """Eigenvalue of the free Hamiltonian on ``state``: ``m^2 sum_j w_j/n_j``."""
    return m * m * float(free_energy_fraction(state))


def _order_key(state: FockState):
    # ties: occupancy sequence compared largest mode first
    return free_energy_fraction(state), tuple(reversed(state.modes))


def partitions(K: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield partitions of ``K`` as non-increasing tuples of parts."""
    if largest is None:
        largest = K
    if K == 0:
        yield ()
        return
    for first in range(min(K, largest), 0, -1):
        for rest in partitions(K - first, first):
            yield (first,) + rest


@dataclass(frozen=True)
class SectorBasis:
    """Ordered Fock basis of one ``(K, parity)`` block."""

    K: int
    parity: str
    states: tuple[FockState, ...]
    index: Mapping[FockState, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {s: i for i, s in enumerate(self.states)})

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i: int) -> FockState:
        return self.states[i]

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def label(self) -> str:
        return f"({self.K},{self.parity})"

    def free_energies(self, m: float = 1.0) -> list[float]:
        return [free_energy(s, m) for s in self.states]


@lru_cache(maxsize=None)
def enumerate_basis(K: int, parity: str) -> SectorBasis:
    """All Fock states with harmonic resolution ``K`` and the given parity.

    States are sorted by ascending free energy; exact rational comparison
    is used so ties never depend on rounding.
    """
    check_parity(parity)
    if K < 0:
        raise DomainError(f"harmonic resolution must be >= 0, got {K}")
    want = PARITIES.index(parity)
    states = [FockState.from_parts(p) for p in partitions(K) if len(p) % 2 == want]
    states.sort(key=_order_key)
    return SectorBasis(K, parity, tuple(states))


def ground_state_creator(K: int, parity: str):
    """Normalized monomial creating the free ground state of ``(K, parity)``.

    Odd parity gives ``a†_K``; even parity gives ``(a†_{K/2})^2/sqrt(2)`` for
    even ``K`` and ``a†_{(K+1)/2} a†_{(K-1)/2}`` for odd ``K``.
    """
    from .opalg import creator_polynomial

    check_parity(parity)
    if K < 1 or (K == 1 and parity == "even"):
        raise DomainError(f"no ground state creator for K={K}, parity={parity}")
    if parity == "odd":
        return creator_polynomial(FockState(((K, 1),)))
    if K % 2 == 0:
        return creator_polynomial(FockState(((K // 2, 2),)))
    return creator_polynomial(FockState.from_parts([(K + 1) // 2, (K - 1) // 2]))
