"""A computable ordered non-Archimedean field for infinitesimal bookkeeping.

Scalars are finite formal sums ``sum_k c_k * w**k`` with exact rational
coefficients ``c_k`` and integer exponents ``k``, where ``w`` is a fixed
formal infinite element.  This is the field of formal Laurent series at
infinity: ordering compares leading terms, so ``w`` is larger than every
rational and ``1/w`` is a positive element smaller than every positive
rational.

Addition, multiplication, negation and comparison are exact.  Inverses of
scalars with more than one term are infinite series and are expanded to a
configurable number of exponent slots; any scalar produced through such an
expansion carries ``truncated=True`` so downstream consumers can tell exact
values from cut ones.

The module also provides the classification of a scalar as infinitesimal /
appreciable / infinite, the standard-part map (the exponent-zero
coefficient), and the normalized counting measure of one hyperfinite-size
quantity inside another.  All values are immutable and safe to share.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import DomainError

#: Number of exponent slots kept (from the leading exponent downward) when an
#: inverse has to be expanded as an infinite series.
DEFAULT_INVERSION_DEPTH = 16

RationalLike = Union[int, Fraction]
ScalarLike = Union["AsymptoticScalar", int, Fraction]


class ScalarKind(enum.Enum):
    INFINITESIMAL = "infinitesimal"
    APPRECIABLE = "finite-appreciable"
    INFINITE = "infinite"


@dataclass(frozen=True)
class ScalarClass:
    """Classification of a scalar: its magnitude kind and its sign (-1/0/+1)."""

    kind: ScalarKind
    sign: int

    def __str__(self) -> str:
        sign = {1: "positive", -1: "negative", 0: "zero"}[self.sign]
        return f"{self.kind.value} ({sign})"


class AsymptoticScalar:
    """Immutable element of the formal-Laurent-series field at infinity.

    ``terms`` maps integer exponents to nonzero rational coefficients.  The
    zero scalar has an empty term map.  ``truncated`` records whether the
    value reached its current form through a cut series expansion.
    """

    __slots__ = ("_terms", "truncated")

    def __init__(
        self,
        terms: Mapping[int, RationalLike] | Iterable[tuple[int, RationalLike]] = (),
        truncated: bool = False,
    ):
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[int, Fraction] = {}
        for exp, coeff in items:
            coeff = Fraction(coeff)
            if coeff:
                clean[int(exp)] = coeff
        object.__setattr__(self, "_terms", tuple(sorted(clean.items(), reverse=True)))
        object.__setattr__(self, "truncated", bool(truncated))

    def __setattr__(self, name, value):
        raise AttributeError("AsymptoticScalar is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rational(cls, value: RationalLike) -> "AsymptoticScalar":
        return cls({0: Fraction(value)})

    @classmethod
    def omega(cls, power: int = 1, coeff: RationalLike = 1) -> "AsymptoticScalar":
        """The monomial ``coeff * w**power``."""
        return cls({power: Fraction(coeff)})

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def leading(self) -> tuple[int, Fraction]:
        """(exponent, coefficient) of the highest-order term; (0, 0) for zero."""
        if not self._terms:
            return (0, Fraction(0))
        return self._terms[0]

    def sign(self) -> int:
        _, coeff = self.leading()
        return (coeff > 0) - (coeff < 0)

    def coefficient(self, exponent: int) -> Fraction:
        for exp, coeff in self._terms:
            if exp == exponent:
                return coeff
        return Fraction(0)

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _coerce(value: ScalarLike) -> "AsymptoticScalar":
        if isinstance(value, AsymptoticScalar):
            return value
        if isinstance(value, (int, Fraction)):
            return AsymptoticScalar.from_rational(value)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other: ScalarLike) -> "AsymptoticScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self._terms)
        for exp, coeff in other._terms:
            terms[exp] = terms.get(exp, Fraction(0)) + coeff
        return AsymptoticScalar(terms, self.truncated or other.truncated)

    __radd__ = __add__

    def __neg__(self) -> "AsymptoticScalar":
        return AsymptoticScalar({e: -c for e, c in self._terms}, self.truncated)

    def __sub__(self, other: ScalarLike) -> "AsymptoticScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: ScalarLike) -> "AsymptoticScalar":
        return self._coerce(other) - self

    def __mul__(self, other: ScalarLike) -> "AsymptoticScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms: dict[int, Fraction] = {}
        for e1, c1 in self._terms:
            for e2, c2 in other._terms:
                e = e1 + e2
                terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return AsymptoticScalar(terms, self.truncated or other.truncated)

    __rmul__ = __mul__

    def inverse(self, depth: int = DEFAULT_INVERSION_DEPTH) -> "AsymptoticScalar":
        """Multiplicative inverse, expanded to ``depth`` exponent slots.

        Exact when the scalar is a single monomial; otherwise the geometric
        series for 1/(1+u) is cut after the relative exponent drops by
        ``depth`` and the result is flagged ``truncated``.
        """
        if self.is_zero():
            raise DomainError("inverse of zero")
        if depth < 1:
            raise DomainError(f"inversion depth must be >= 1, got {depth}")
        lead_exp, lead_coeff = self._terms[0]
        inv_lead = AsymptoticScalar({-lead_exp: 1 / lead_coeff})
        if len(self._terms) == 1:
            return AsymptoticScalar(inv_lead._terms, self.truncated)
        # self = lead * (1 + u) with all exponents of u <= -1
        u = AsymptoticScalar(
            {e - lead_exp: c / lead_coeff for e, c in self._terms[1:]}
        )
        cutoff = -depth
        series = AsymptoticScalar.from_rational(1)
        power = AsymptoticScalar.from_rational(1)
        for _ in range(depth):
            power = (power * -u)._drop_below(cutoff)
            if power.is_zero():
                break
            series = series + power
        result = (inv_lead * series)._drop_below(cutoff - lead_exp)
        return AsymptoticScalar(result._terms, truncated=True)

    def _drop_below(self, cutoff: int) -> "AsymptoticScalar":
        return AsymptoticScalar(
            {e: c for e, c in self._terms if e > cutoff}, self.truncated
        )

    def __truediv__(self, other: ScalarLike) -> "AsymptoticScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other: ScalarLike) -> "AsymptoticScalar":
        return self._coerce(other) * self.inverse()

    # -- order and equality --------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = AsymptoticScalar.from_rational(other)
        if not isinstance(other, AsymptoticScalar):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    def __lt__(self, other: ScalarLike) -> bool:
        return (self - other).sign() < 0

    def __le__(self, other: ScalarLike) -> bool:
        return (self - other).sign() <= 0

    def __gt__(self, other: ScalarLike) -> bool:
        return (self - other).sign() > 0

    def __ge__(self, other: ScalarLike) -> bool:
        return (self - other).sign() >= 0

    # -- rendering ------------------------------------------------------------

    def __repr__(self) -> str:
        return f"AsymptoticScalar({self!s})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exp, coeff in self._terms:
            if exp == 0:
                body = str(coeff)
            else:
                mag = "w" if exp == 1 else f"w^{exp}"
                if coeff == 1:
                    body = mag
                elif coeff == -1:
                    body = f"-{mag}"
                else:
                    body = f"{coeff}*{mag}"
            parts.append(body)
        out = parts[0]
        for part in parts[1:]:
            out += f" - {part[1:]}" if part.startswith("-") else f" + {part}"
        return out


OMEGA = AsymptoticScalar.omega()
EPSILON = AsymptoticScalar.omega(-1)
ZERO = AsymptoticScalar()
ONE = AsymptoticScalar.from_rational(1)


def classify(x: AsymptoticScalar) -> ScalarClass:
    """Magnitude class of ``x``; zero counts as infinitesimal."""
    lead_exp, _ = x.leading()
    if x.is_zero() or lead_exp < 0:
        kind = ScalarKind.INFINITESIMAL
    elif lead_exp > 0:
        kind = ScalarKind.INFINITE
    else:
        kind = ScalarKind.APPRECIABLE
    return ScalarClass(kind, x.sign())


def is_infinitesimal(x: AsymptoticScalar) -> bool:
    return classify(x).kind is ScalarKind.INFINITESIMAL


def is_finite(x: AsymptoticScalar) -> bool:
    return classify(x).kind is not ScalarKind.INFINITE


def standard_part(x: AsymptoticScalar) -> Fraction:
    """The unique rational the finite scalar ``x`` is infinitely close to.

    Exact: returns the exponent-zero coefficient.  Raises for infinite input.
    """
    if not is_finite(x):
        raise DomainError(f"standard part of infinite scalar {x}")
    return x.coefficient(0)


def infinitely_close(x: AsymptoticScalar, y: ScalarLike) -> bool:
    return is_infinitesimal(x - y)


@dataclass(frozen=True)
class InternalMeasureValue:
    """A normalized measure value together with its standard part."""

    value: AsymptoticScalar
    loeb_value: Fraction


def counting_measure(
    subset_size: ScalarLike,
    set_size: ScalarLike,
    depth: int = DEFAULT_INVERSION_DEPTH,
) -> InternalMeasureValue:
    """Normalized counting measure ``|F| / |E|`` of sizes in the field.

    Requires ``0 <= subset_size <= set_size`` and ``set_size > 0``.  The
    quotient is expanded to ``depth`` slots; its standard part is the Loeb
    value of the measured event.
    """
    subset = AsymptoticScalar._coerce(subset_size)
    whole = AsymptoticScalar._coerce(set_size)
    if subset is NotImplemented or whole is NotImplemented:
        raise DomainError("sizes must be AsymptoticScalar or exact rationals")
    if not whole > 0:
        raise DomainError("set size must be positive")
    if subset < 0 or subset > whole:
        raise DomainError("subset size must lie between 0 and the set size")
    value = subset * whole.inverse(depth)
    return InternalMeasureValue(value=value, loeb_value=standard_part(value))
