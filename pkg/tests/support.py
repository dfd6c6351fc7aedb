"""Shared helpers for the test suite: random scalar generation and the
exact-law checkers used by both the unit tests and the acceptance suite."""

from __future__ import annotations

import random
from fractions import Fraction

from hyperworlds.nsa import AsymptoticScalar, standard_part


def random_scalar(
    rng: random.Random,
    min_exp: int = -4,
    max_exp: int = 4,
    max_terms: int = 3,
) -> AsymptoticScalar:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        exp = rng.randint(min_exp, max_exp)
        coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 9))
        terms[exp] = coeff
    return AsymptoticScalar(terms)


def random_finite_scalar(rng: random.Random) -> AsymptoticScalar:
    return random_scalar(rng, min_exp=-4, max_exp=0)


def check_ordered_field_laws(x, y, z) -> None:
    zero = AsymptoticScalar()
    one = AsymptoticScalar.from_rational(1)
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x + y == y + x
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert x + zero == x
    assert x * one == x
    assert x + (-x) == zero
    # trichotomy
    assert sum([x < y, x == y, x > y]) == 1
    # order compatibility
    if x < y:
        assert x + z < y + z
        if z > zero:
            assert x * z < y * z


def check_standard_part_homomorphism(x, y) -> None:
    assert standard_part(x + y) == standard_part(x) + standard_part(y)
    assert standard_part(x * y) == standard_part(x) * standard_part(y)
