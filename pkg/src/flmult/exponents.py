"""Extended Lebesgue exponents in [1, inf] with exact rational arithmetic.

An exponent ``q`` is stored through its reciprocal ``1/q`` as a
:class:`fractions.Fraction`, so ``q = inf`` is the value ``0`` and every
boundary comparison below is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

ExponentLike = Union["Exponent", int, str, Fraction, float]

HALF = Fraction(1, 2)


def parse_rational(value) -> Fraction:
    """Parse ``"3/2"``, ``"0.3"``, ``7``, floats (via their decimal repr) exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except ZeroDivisionError as exc:
            raise ValueError(f"zero denominator in {value!r}") from exc
    raise TypeError(f"cannot read {value!r} as a rational")


@dataclass(frozen=True, order=True)
class Exponent:
    """A Lebesgue exponent, held as its reciprocal ``recip = 1/q``."""

    recip: Fraction

    def __post_init__(self):
        recip = parse_rational(self.recip)
        if not 0 <= recip <= 1:
            raise ValueError(f"1/q = {recip} outside [0, 1]")
        object.__setattr__(self, "recip", recip)

    @classmethod
    def of(cls, q: ExponentLike) -> "Exponent":
        """Build from the exponent itself: ``Exponent.of("inf")``, ``Exponent.of(4)``."""
        if isinstance(q, Exponent):
            return q
        if isinstance(q, str) and q.strip().lower() in ("inf", "infinity", "∞"):
            return cls(Fraction(0))
        if isinstance(q, float) and q == float("inf"):
            return cls(Fraction(0))
        value = parse_rational(q)
        if value < 1:
            raise ValueError(f"exponent {value} < 1")
        return cls(1 / value)

    @property
    def is_inf(self) -> bool:
        return self.recip == 0

    @property
    def value(self) -> Union[Fraction, float]:
        """The exponent ``q`` (``math.inf`` for ``recip == 0``)."""
        return float("inf") if self.recip == 0 else 1 / self.recip

    def as_float(self) -> float:
        return float(self.value)

    def dual(self) -> "Exponent":
        return dual(self)

    def __str__(self) -> str:
        if self.recip == 0:
            return "inf"
        return str(1 / self.recip)


def dual(e: Exponent) -> Exponent:
    """Hölder conjugate: ``1/q + 1/q' = 1``."""
    return Exponent(1 - e.recip)


@dataclass(frozen=True)
class ExponentTriple:
    q0: Exponent
    q1: Exponent
    q2: Exponent

    @classmethod
    def of(cls, q0: ExponentLike, q1: ExponentLike, q2: ExponentLike) -> "ExponentTriple":
        return cls(Exponent.of(q0), Exponent.of(q1), Exponent.of(q2))

    @classmethod
    def from_recips(cls, x0, x1, x2) -> "ExponentTriple":
        return cls(Exponent(x0), Exponent(x1), Exponent(x2))

    def __iter__(self) -> Iterator[Exponent]:
        return iter((self.q0, self.q1, self.q2))

    def __getitem__(self, index: int) -> Exponent:
        return (self.q0, self.q1, self.q2)[index]

    @property
    def recips(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.q0.recip, self.q1.recip, self.q2.recip)

    def swapped(self, which: int) -> "ExponentTriple":
        """Exchange entry 0 with entry ``which``."""
        if which not in (0, 1, 2):
            raise ValueError(f"index {which!r} not in {{0, 1, 2}}")
        entries = [self.q0, self.q1, self.q2]
        entries[0], entries[which] = entries[which], entries[0]
        return ExponentTriple(*entries)

    def __str__(self) -> str:
        return f"({self.q0}, {self.q1}, {self.q2})"


def r_functional(q: ExponentTriple) -> Fraction:
    """``R(q) = 2 - 1/q0 - 1/q1 - 1/q2``."""
    return 2 - sum(q.recips)


def h_functional(q: ExponentTriple) -> Fraction:
    x = q.recips
    if all(xj >= HALF for xj in x):  # every q_j <= 2
        return min(x)
    if all(xj <= HALF for xj in x):  # every q_j >= 2
        return max(x)
    return HALF


def cond_base(q: ExponentTriple) -> bool:
    r = r_functional(q)
    return 0 <= r <= HALF


def cond_prime(q: ExponentTriple) -> bool:
    r = r_functional(q)
    return 0 <= r <= max(HALF, min(q.recips))


def cond_h(q: ExponentTriple) -> bool:
    """``0 <= R(q) <= H(q)``, the variant used for the convolution estimate."""
    r = r_functional(q)
    return 0 <= r <= h_functional(q)


def cond_dprime(q: ExponentTriple) -> bool:
    x0, x1, x2 = q.recips
    r = r_functional(q)
    return r <= x0 and r <= max(HALF, min(x1, x2))


def cond_dprime_dualized(q: ExponentTriple, which: int) -> bool:
    """:func:`cond_dprime` with entry ``which`` in the role of ``q0``."""
    return cond_dprime(q.swapped(which))


def reciprocal_lattice(step: Fraction) -> list[Fraction]:
    """``[0, step, 2*step, ..., 1]``; ``step`` must divide 1."""
    step = parse_rational(step)
    if step <= 0 or (1 / step).denominator != 1:
        raise ValueError(f"lattice step {step} must be 1/k for a positive integer k")
    count = int(1 / step)
    return [k * step for k in range(count + 1)]


def triple_lattice(step: Fraction) -> Iterator[ExponentTriple]:
    """All triples with reciprocals on the lattice, in lexicographic order."""
    values = reciprocal_lattice(step)
    for x0 in values:
        for x1 in values:
            for x2 in values:
                yield ExponentTriple.from_recips(x0, x1, x2)
