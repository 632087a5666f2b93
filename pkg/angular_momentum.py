"""
Angular Momentum Algebra for ASGEM

Wigner 3j and 6j symbols evaluated with the Racah single-sum formulas on exact
integers. Every angular momentum is carried as twice its value, so selection rules
are integer comparisons and no half-integer ever touches floating point until the
final square root.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Tuple, Union

from errors import AngularMomentumError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer stored exactly as twice its value"""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int) or isinstance(self.twice_value, bool):
            raise AngularMomentumError(f"twice_value must be an int, got {self.twice_value!r}")

    @classmethod
    def of(cls, value: "HalfIntLike") -> "HalfInt":
        """Coerce an int, float, Fraction, string like '3/2', or HalfInt"""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            try:
                value = Fraction(value.strip())
            except (ValueError, ZeroDivisionError):
                raise AngularMomentumError(f"cannot parse {value!r} as a half-integer")
        try:
            doubled = Fraction(value) * 2
        except (TypeError, ValueError):
            raise AngularMomentumError(f"cannot interpret {value!r} as a half-integer")
        if doubled.denominator != 1:
            raise AngularMomentumError(f"{value!r} is not an integer or half-integer")
        return cls(int(doubled))

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __add__(self, other: "HalfIntLike") -> "HalfInt":
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other: "HalfIntLike") -> "HalfInt":
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __rsub__(self, other: "HalfIntLike") -> "HalfInt":
        return HalfInt(HalfInt.of(other).twice_value - self.twice_value)

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __abs__(self) -> "HalfInt":
        return HalfInt(abs(self.twice_value))

    def __float__(self) -> float:
        return self.twice_value / 2

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"

    def __repr__(self) -> str:
        return f"HalfInt({self})"


HalfIntLike = Union[HalfInt, int, float, Fraction, str]


def check_magnitude(j: HalfIntLike) -> HalfInt:
    j = HalfInt.of(j)
    if j.twice_value < 0:
        raise AngularMomentumError(f"angular momentum magnitude must be >= 0, got {j}")
    return j


def check_pair(j: HalfIntLike, m: HalfIntLike) -> Tuple[HalfInt, HalfInt]:
    """Validate a magnitude/projection pair: |m| <= j and j - m integral"""
    j = check_magnitude(j)
    m = HalfInt.of(m)
    if abs(m.twice_value) > j.twice_value:
        raise AngularMomentumError(f"|m| exceeds j for (j={j}, m={m})")
    if (j.twice_value - m.twice_value) % 2:
        raise AngularMomentumError(f"j - m is not integral for (j={j}, m={m})")
    return j, m


def projections(j: HalfIntLike) -> Tuple[HalfInt, ...]:
    """All m from -j to j in unit steps"""
    tj = check_magnitude(j).twice_value
    return tuple(HalfInt(tm) for tm in range(-tj, tj + 1, 2))


def triangle(ta: int, tb: int, tc: int) -> bool:
    """Triangle condition on doubled magnitudes, including an integral perimeter"""
    return (ta + tb + tc) % 2 == 0 and abs(ta - tb) <= tc <= ta + tb


def _triangle_coefficient(ta: int, tb: int, tc: int) -> Fraction:
    f = math.factorial
    return Fraction(
        f((ta + tb - tc) // 2) * f((ta - tb + tc) // 2) * f((-ta + tb + tc) // 2),
        f((ta + tb + tc) // 2 + 1),
    )


def _signed_sqrt(square: Fraction, negative: bool) -> float:
    value = math.sqrt(float(square))
    return -value if negative else value


# ────────────────────────────── 3j ─────────────────────────────────────── #
@lru_cache(maxsize=None)
def _racah_3j(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    f = math.factorial
    a = (tj1 + tj2 - tj3) // 2
    u = (tj3 - tj2 + tm1) // 2
    v = (tj3 - tj1 - tm2) // 2
    x = (tj1 - tm1) // 2
    y = (tj2 + tm2) // 2

    total = 0
    common = 1
    terms = []
    for k in range(max(0, -u, -v), min(a, x, y) + 1):
        denom = f(k) * f(u + k) * f(v + k) * f(a - k) * f(x - k) * f(y - k)
        terms.append((k, denom))
        common = common * denom // math.gcd(common, denom)
    for k, denom in terms:
        total += (-1) ** k * (common // denom)
    if total == 0:
        return 0.0

    weight = (
        f((tj1 + tm1) // 2) * f((tj1 - tm1) // 2)
        * f((tj2 + tm2) // 2) * f((tj2 - tm2) // 2)
        * f((tj3 + tm3) // 2) * f((tj3 - tm3) // 2)
    )
    square = _triangle_coefficient(tj1, tj2, tj3) * weight * Fraction(total, common) ** 2
    phase_odd = ((tj1 - tj2 - tm3) // 2) % 2 == 1
    return _signed_sqrt(square, phase_odd != (total < 0))


def _canonical_3j(tj: Tuple[int, int, int], tm: Tuple[int, int, int]) -> Tuple[Tuple[int, ...], int]:
    """Pick one representative of the 12 classical symmetries and its sign factor"""
    parity_j = ((tj[0] + tj[1] + tj[2]) // 2) % 2
    best = None
    best_sign = 1
    for perm in permutations(range(3)):
        odd = _permutation_is_odd(perm)
        for flip in (False, True):
            key = tuple(tj[p] for p in perm) + tuple(-tm[p] if flip else tm[p] for p in perm)
            sign = -1 if (parity_j and (odd != flip)) else 1
            if best is None or key > best:
                best, best_sign = key, sign
    return best, best_sign


def _permutation_is_odd(perm: Tuple[int, ...]) -> bool:
    inversions = sum(1 for i in range(len(perm)) for k in range(i + 1, len(perm)) if perm[i] > perm[k])
    return inversions % 2 == 1


def wigner_3j(
    j1: HalfIntLike, j2: HalfIntLike, j3: HalfIntLike,
    m1: HalfIntLike, m2: HalfIntLike, m3: HalfIntLike,
) -> float:
    """
    Wigner 3j symbol (j1 j2 j3; m1 m2 m3)

    Returns exactly 0.0 when the triangle condition fails or m1 + m2 + m3 != 0.

    Raises:
        AngularMomentumError: a (j, m) pair is invalid
    """
    pairs = [check_pair(j, m) for j, m in ((j1, m1), (j2, m2), (j3, m3))]
    tj = tuple(j.twice_value for j, _ in pairs)
    tm = tuple(m.twice_value for _, m in pairs)

    if sum(tm) != 0 or not triangle(*tj):
        return 0.0

    key, sign = _canonical_3j(tj, tm)
    value = _racah_3j(*key)
    return sign * value


# ────────────────────────────── 6j ─────────────────────────────────────── #
@lru_cache(maxsize=None)
def _racah_6j(t1: int, t2: int, t3: int, t4: int, t5: int, t6: int) -> float:
    f = math.factorial
    lower = ((t1 + t2 + t3) // 2, (t1 + t5 + t6) // 2, (t4 + t2 + t6) // 2, (t4 + t5 + t3) // 2)
    upper = ((t1 + t2 + t4 + t5) // 2, (t2 + t3 + t5 + t6) // 2, (t3 + t1 + t6 + t4) // 2)

    terms = []
    common = 1
    for t in range(max(lower), min(upper) + 1):
        denom = 1
        for a in lower:
            denom *= f(t - a)
        for b in upper:
            denom *= f(b - t)
        terms.append((t, f(t + 1), denom))
        common = common * denom // math.gcd(common, denom)
    total = sum((-1) ** t * numer * (common // denom) for t, numer, denom in terms)
    if total == 0:
        return 0.0

    square = (
        _triangle_coefficient(t1, t2, t3) * _triangle_coefficient(t1, t5, t6)
        * _triangle_coefficient(t4, t2, t6) * _triangle_coefficient(t4, t5, t3)
        * Fraction(total, common) ** 2
    )
    return _signed_sqrt(square, total < 0)


# upper/lower exchanges allowed on pairs of columns
_ROW_SWAPS = ((), (0, 1), (0, 2), (1, 2))


def _canonical_6j(top: Tuple[int, int, int], bottom: Tuple[int, int, int]) -> Tuple[int, ...]:
    best = None
    for perm in permutations(range(3)):
        t = [top[p] for p in perm]
        b = [bottom[p] for p in perm]
        for swap in _ROW_SWAPS:
            tt, bb = list(t), list(b)
            for col in swap:
                tt[col], bb[col] = bb[col], tt[col]
            key = tuple(tt) + tuple(bb)
            if best is None or key > best:
                best = key
    return best


def wigner_6j(
    j1: HalfIntLike, j2: HalfIntLike, j3: HalfIntLike,
    j4: HalfIntLike, j5: HalfIntLike, j6: HalfIntLike,
) -> float:
    """
    Wigner 6j symbol {j1 j2 j3; j4 j5 j6}

    Returns exactly 0.0 when any of the four triads (j1 j2 j3), (j1 j5 j6),
    (j4 j2 j6), (j4 j5 j3) violates the triangle condition.

    Raises:
        AngularMomentumError: an argument is negative or not a half-integer
    """
    t = tuple(check_magnitude(j).twice_value for j in (j1, j2, j3, j4, j5, j6))
    t1, t2, t3, t4, t5, t6 = t
    triads = ((t1, t2, t3), (t1, t5, t6), (t4, t2, t6), (t4, t5, t3))
    if not all(triangle(*triad) for triad in triads):
        return 0.0
    return _racah_6j(*_canonical_6j((t1, t2, t3), (t4, t5, t6)))


def cache_info() -> dict:
    """Hit/miss statistics of the symbol caches"""
    return {"3j": _racah_3j.cache_info(), "6j": _racah_6j.cache_info()}
