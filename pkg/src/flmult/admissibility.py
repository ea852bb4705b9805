"""Exact decision procedures for the product and convolution estimates.

Every checker returns a :class:`Verdict`. Conditions are evaluated in a fixed
order (exponent condition, pairwise weight sums in index order (0,1), (0,2),
(1,2), weight-sum inequality, Hölder condition on ``p``, condition on ``t``)
and the first failing one is reported in ``Verdict.clause``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .exponents import (
    HALF,
    ExponentTriple,
    cond_base,
    cond_dprime,
    cond_prime,
    dual,
    parse_rational,
    r_functional,
)

# clause identifiers
EXPONENT = "lastineq1"
EXPONENT_DPRIME = "lastineq1''"
PAIR = {(0, 1): "pairwise(0,1)", (0, 2): "pairwise(0,2)", (1, 2): "pairwise(1,2)"}
WEIGHT_SUM = "weight_sum"
HOLDER = "holder"
T_SUM = "t-sum"
T_WIENER = "t-wiener"
R_NONNEG = "R>=0"
INTERIOR = "interior"


class HypothesisError(ValueError):
    """A precondition of a checker is violated (e.g. ``R(q) < 0`` in the kernel bound checks)."""


@dataclass(frozen=True)
class WeightTriple:
    s0: Fraction
    s1: Fraction
    s2: Fraction
    d: int = 1

    def __post_init__(self):
        for name in ("s0", "s1", "s2"):
            object.__setattr__(self, name, parse_rational(getattr(self, name)))
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")

    @classmethod
    def of(cls, s: Sequence, d: int = 1) -> "WeightTriple":
        s0, s1, s2 = s
        return cls(s0, s1, s2, d)

    def __iter__(self):
        return iter((self.s0, self.s1, self.s2))

    def __getitem__(self, index: int) -> Fraction:
        return (self.s0, self.s1, self.s2)[index]


def _triple(values) -> tuple[Fraction, Fraction, Fraction]:
    a, b, c = (parse_rational(v) for v in values)
    return (a, b, c)


@dataclass(frozen=True)
class Setup:
    """Exponents and weights of one product configuration; ``t`` and ``p`` only for the STFT-based rules."""

    q: ExponentTriple
    s: WeightTriple
    t: Optional[tuple[Fraction, Fraction, Fraction]] = None
    p: Optional[ExponentTriple] = None

    def __post_init__(self):
        if self.t is not None:
            object.__setattr__(self, "t", _triple(self.t))


@dataclass(frozen=True)
class SpaceDescriptor:
    """Target space, e.g. ``FL^{q}_{s}`` or ``M^{p,q}_{s,t}``."""

    family: str  # FL, L, M, W, or a mixed-norm kernel class
    exponents: tuple[str, ...]
    weights: tuple[str, ...] = ()

    def __str__(self) -> str:
        sup = ",".join(self.exponents)
        sub = ",".join(self.weights)
        return f"{self.family}^{{{sup}}}_{{{sub}}}" if sub else f"{self.family}^{{{sup}}}"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "exponents": list(self.exponents),
            "weights": list(self.weights),
        }


@dataclass(frozen=True)
class Verdict:
    admissible: bool
    clause: str
    target: Optional[SpaceDescriptor] = None
    strictness_triggered: bool = False
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "clause": self.clause,
            "target": self.target.to_dict() if self.target else None,
            "target_str": str(self.target) if self.target else None,
            "strictness_triggered": self.strictness_triggered,
            "details": {k: str(v) for k, v in self.details.items()},
        }


# --- clause plumbing -------------------------------------------------------


@dataclass(frozen=True)
class _Clause:
    name: str
    holds: bool
    tight: bool = False  # satisfied with equality


def _run(clauses: Sequence[_Clause]) -> tuple[bool, str]:
    for c in clauses:
        if not c.holds:
            return False, c.name
    for c in clauses:
        if c.tight:
            return True, c.name
    return True, INTERIOR


def _weight_sum_clause(
    slack: Fraction, strict: bool, name: str = WEIGHT_SUM
) -> _Clause:
    holds = slack > 0 if strict else slack >= 0
    return _Clause(name, holds, tight=slack == 0)


def _pairwise_clauses(s: WeightTriple) -> list[_Clause]:
    out = []
    for (j, k), name in PAIR.items():
        total = s[j] + s[k]
        out.append(_Clause(name, total >= 0, tight=total == 0))
    return out


def _exponent_clause(q: ExponentTriple) -> _Clause:
    ok = cond_base(q) or cond_prime(q)
    r = r_functional(q)
    return _Clause(EXPONENT, ok, tight=ok and (r == 0 or r == HALF))


def _neg(x: Fraction) -> str:
    return str(-x)


# --- public checkers -------------------------------------------------------


def holder_ok(p: ExponentTriple) -> bool:
    return sum(p.recips) == 1


def _weight_clauses(
    q: ExponentTriple, s: WeightTriple, trigger: Callable[[Fraction], bool]
) -> tuple[list[_Clause], bool]:
    r = r_functional(q)
    dr = s.d * r
    strict = trigger(dr)
    slack = s.s0 + s.s1 + s.s2 - dr
    return _pairwise_clauses(s) + [_weight_sum_clause(slack, strict)], strict


def _product_trigger(q: ExponentTriple, s: WeightTriple) -> Callable[[Fraction], bool]:
    r = r_functional(q)
    return lambda dr: r > 0 and any(sj == dr for sj in s)


def weight_conditions(q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Pairwise sums ``s_j + s_k >= 0`` and ``s0+s1+s2 - d R(q) >= 0``.

    The last inequality becomes strict when ``R(q) > 0`` and some ``s_j``
    equals ``d R(q)``.
    """
    clauses, strict = _weight_clauses(q, s, _product_trigger(q, s))
    ok, clause = _run(clauses)
    return Verdict(ok, clause, None, strict, {"R": r_functional(q)})


def check_fl_product(q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Product ``FL^{q1}_{s1} x FL^{q2}_{s2} -> FL^{q0'}_{-s0}``."""
    weight, strict = _weight_clauses(q, s, _product_trigger(q, s))
    ok, clause = _run([_exponent_clause(q)] + weight)
    target = SpaceDescriptor("FL", (str(dual(q.q0)),), (_neg(s.s0),))
    return Verdict(ok, clause, target, strict, {"R": r_functional(q), "d*R": s.d * r_functional(q)})


def check_convolution(q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Convolution ``L^{q1}_{s1} x L^{q2}_{s2} -> L^{q0'}_{-s0}``; same hypotheses as the product."""
    v = check_fl_product(q, s)
    target = SpaceDescriptor("L", (str(dual(q.q0)),), (_neg(s.s0),))
    return Verdict(v.admissible, v.clause, target, v.strictness_triggered, v.details)


def _require_pt(setup: Setup):
    if setup.p is None or setup.t is None:
        raise ValueError("modulation/Wiener checks need both p and t")


def check_modulation_product(setup: Setup) -> Verdict:
    _require_pt(setup)
    q, s, p, t = setup.q, setup.s, setup.p, setup.t
    weight, strict = _weight_clauses(q, s, _product_trigger(q, s))
    t_total = t[0] + t[1] + t[2]
    clauses = (
        [_exponent_clause(q)]
        + weight
        + [
            _Clause(HOLDER, holder_ok(p)),
            _Clause(T_SUM, t_total >= 0, tight=t_total == 0),
        ]
    )
    ok, clause = _run(clauses)
    target = SpaceDescriptor(
        "M", (str(dual(p.q0)), str(dual(q.q0))), (_neg(s.s0), _neg(t[0]))
    )
    return Verdict(ok, clause, target, strict, {"R": r_functional(q)})


def check_wiener_product(setup: Setup) -> Verdict:
    _require_pt(setup)
    q, s, p, t = setup.q, setup.s, setup.p, setup.t
    weight, strict = _weight_clauses(q, s, _product_trigger(q, s))
    t_slack = t[1] + t[2] - t[0]
    clauses = (
        [_exponent_clause(q)]
        + weight
        + [
            _Clause(HOLDER, holder_ok(p)),
            _Clause(T_WIENER, t_slack >= 0, tight=t_slack == 0),
        ]
    )
    ok, clause = _run(clauses)
    target = SpaceDescriptor(
        "W", (str(dual(p.q0)), str(dual(q.q0))), (_neg(s.s0), _neg(t[0]))
    )
    return Verdict(ok, clause, target, strict, {"R": r_functional(q)})


def check_microlocal(q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Hypotheses of the wave-front inclusion for products.

    Strictness applies whenever one of ``s0, s1, s2, -s0`` equals ``d R(q)``,
    with no sign condition on ``R(q)``; at ``R(q) = 0`` and a zero weight this
    makes the weight sum inequality ``0 > 0`` and the verdict inadmissible.
    """
    trigger = lambda dr: any(v == dr for v in (s.s0, s.s1, s.s2, -s.s0))  # noqa: E731
    weight, strict = _weight_clauses(q, s, trigger)
    r = r_functional(q)
    base = _Clause(EXPONENT, cond_base(q), tight=cond_base(q) and (r == 0 or r == HALF))
    ok, clause = _run([base] + weight)
    target = SpaceDescriptor("WF_FL", (str(dual(q.q0)),), (_neg(s.s0),))
    return Verdict(ok, clause, target, strict, {"R": r, "d*R": s.d * r})


def check_kernel_product(q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Hypotheses under which every region estimate ``T_{F_j}``, ``j = 1..5``, holds.

    ``s`` is given in kernel variables, i.e. ``s.s0`` is the exponent of
    ``<xi>`` in the kernel, which is the target weight ``-s0`` of the product
    theorem. The weight conditions are therefore evaluated on
    ``(-s.s0, s.s1, s.s2)``, strict when ``s1``, ``s2`` or ``-s0`` equals
    ``d R(q)``. Regions 1 and 2 need ``R(q) <= 1/q0`` on top of the base
    exponent condition, so the doubly-primed exponent condition is required too.
    """
    theorem_weights = WeightTriple(-s.s0, s.s1, s.s2, s.d)
    trigger = lambda dr: any(v == dr for v in (s.s1, s.s2, -s.s0))  # noqa: E731
    weight, strict = _weight_clauses(q, theorem_weights, trigger)
    r = r_functional(q)
    base = _Clause(EXPONENT, cond_base(q), tight=cond_base(q) and (r == 0 or r == HALF))
    dprime = _Clause(EXPONENT_DPRIME, cond_dprime(q))
    ok, clause = _run([base, dprime] + weight)
    return Verdict(ok, clause, None, strict, {"R": r})


def _kernel_class(r: Fraction, part: int) -> SpaceDescriptor:
    r_exp = "inf" if r == 0 else str(1 / r)
    if part == 1:
        return SpaceDescriptor("L_2", ("inf", r_exp))
    return SpaceDescriptor("L_1", (r_exp, "inf"))


def check_kernel_bound(q: ExponentTriple, part: int) -> Verdict:
    """Kernel-class conditions for ``T_F`` with ``r = 1/R(q)``.

    Part 1: ``R <= 1/q0'``. Parts 2 and 3 add ``R <= max(1/2, 1/q1)`` and
    ``R <= max(1/2, 1/q2)`` respectively.
    """
    if part not in (1, 2, 3):
        raise ValueError(f"part must be 1, 2 or 3, got {part!r}")
    r = r_functional(q)
    if r < 0:
        raise HypothesisError(f"R(q) = {r} is negative")
    x0, x1, x2 = q.recips
    clauses = [_Clause("R<=1/q0'", r <= 1 - x0, tight=r == 1 - x0)]
    if part == 2:
        bound = max(HALF, x1)
        clauses.append(_Clause("R<=max(1/2,1/q1)", r <= bound, tight=r == bound))
    elif part == 3:
        bound = max(HALF, x2)
        clauses.append(_Clause("R<=max(1/2,1/q2)", r <= bound, tight=r == bound))
    ok, clause = _run(clauses)
    return Verdict(ok, clause, _kernel_class(r, part), False, {"R": r})


def check_region_piece(j: int, q: ExponentTriple, s: WeightTriple) -> Verdict:
    """Per-region hypotheses for the estimate of ``T_{F_j}``, ``j = 1..5``.

    A leading ``R(q) >= 0`` clause is added since every region estimate goes
    through ``r = 1/R(q)``.
    """
    if j not in (1, 2, 3, 4, 5):
        raise ValueError(f"region index must be in 1..5, got {j!r}")
    r = r_functional(q)
    dr = s.d * r
    x0, x1, x2 = q.recips
    clauses = [_Clause(R_NONNEG, r >= 0, tight=r == 0)]
    strict = False
    if j in (1, 2):
        strict = s.s1 == dr or s.s2 == dr
        slack = s.s1 + s.s2 - dr - s.s0
        clauses += [
            _Clause("R<=1/q0", r <= x0, tight=r == x0),
            _Clause("s0<=s1", s.s0 <= s.s1, tight=s.s0 == s.s1),
            _Clause("s0<=s2", s.s0 <= s.s2, tight=s.s0 == s.s2),
            _weight_sum_clause(slack, strict, "s0<=s1+s2-dR"),
        ]
    elif j == 3:
        if x1 > HALF and x2 > HALF:  # q1, q2 < 2
            bound, name = min(x1, x2), "R<=min(1/q1,1/q2)"
        else:
            bound, name = HALF, "R<=1/2"
        pair = s.s1 + s.s2
        clauses += [
            _Clause(name, r <= bound, tight=r == bound),
            _Clause("0<=s1+s2", pair >= 0, tight=pair == 0),
        ]
    else:
        xk = x2 if j == 4 else x1
        bound = max(xk, HALF)
        pair = s.s1 + s.s2
        strict = s.s0 == -dr
        label = "q2" if j == 4 else "q1"
        clauses += [
            _Clause(f"R<=max(1/{label},1/2)", r <= bound, tight=r == bound),
            _Clause(
                "0<=s1+s2",
                pair > 0 if strict else pair >= 0,
                tight=pair == 0,
            ),
            _weight_sum_clause(pair - dr - s.s0, False, "s0<=s1+s2-dR"),
        ]
    ok, clause = _run(clauses)
    return Verdict(ok, clause, None, strict, {"R": r, "j": j})


THEOREMS = {
    "fl_product": lambda setup: check_fl_product(setup.q, setup.s),
    "convolution": lambda setup: check_convolution(setup.q, setup.s),
    "modulation": check_modulation_product,
    "wiener": check_wiener_product,
    "microlocal": lambda setup: check_microlocal(setup.q, setup.s),
}
