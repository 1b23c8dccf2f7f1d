"""Bit-exact arithmetic in GF(2^k) for 1 <= k <= 16.

Field elements are plain ints in [0, 2^k). Bit i of an element is the
coefficient of x^i in the polynomial basis, addition is XOR, and
multiplication is carry-less polynomial multiplication reduced by a fixed
irreducible polynomial, so every result is reproducible bit for bit.

Two multiplication routines are kept side by side: a table-free
shift-and-reduce reference (`GF.mul_ref`) and log/antilog tables built at
construction (the runtime path, `GF.mul`). The test suite checks they agree
on every element pair for q <= 256 and on random pairs above that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "REDUCTION_POLYS",
    "GF",
    "FieldElement",
    "FieldMismatchError",
    "ff_add",
    "ff_mul",
    "ff_inv",
    "ff_sample",
]

# Fixed reduction polynomials, bitmask with bit i = coefficient of x^i.
# k=1..4 and k=8 follow the usual textbook picks (k=8 is the AES polynomial,
# irreducible but not primitive); the rest come from the standard tables of
# irreducible polynomials over GF(2).
REDUCTION_POLYS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011011,
    9: 0b1000010001,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000001010011,
    13: 0b10000000011011,
    14: 0b100010001000011,
    15: 0b1000000000000011,
    16: 0b10001000000001011,
}


class FieldMismatchError(ValueError):
    """Raised when two FieldElements from different fields are combined."""


def _clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2)[x] polynomials given as bitmasks."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    return acc


def _poly_mod(a: int, poly: int, k: int) -> int:
    """Reduce the bitmask polynomial a modulo poly (degree k)."""
    for i in range(a.bit_length() - 1, k - 1, -1):
        if (a >> i) & 1:
            a ^= poly << (i - k)
    return a


def _poly_gcd(a: int, b: int) -> int:
    """gcd of two GF(2)[x] polynomials as bitmasks."""
    while b:
        if a.bit_length() < b.bit_length():
            a, b = b, a
            continue
        a ^= b << (a.bit_length() - b.bit_length())
    return a


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(poly: int, k: int) -> bool:
    """Rabin's irreducibility test for a degree-k polynomial over GF(2).

    poly is irreducible iff x^(2^k) == x (mod poly) and, for every prime
    r dividing k, gcd(x^(2^(k/r)) - x mod poly, poly) = 1.
    """
    if poly.bit_length() != k + 1:
        return False
    if k == 1:
        return poly in (0b10, 0b11)

    def sqmod(t: int) -> int:
        return _poly_mod(_clmul(t, t), poly, k)

    x = 0b10
    checkpoints = {k // r for r in _prime_factors(k)}
    t = x
    for j in range(1, k + 1):
        t = sqmod(t)  # t = x^(2^j) mod poly
        if j in checkpoints:
            if _poly_gcd(t ^ x, poly) != 1:
                return False
    return t == x


class GF:
    """Arithmetic in GF(2^k) on int-valued elements.

    Parameters
    ----------
    k : int
        Extension degree, 1 <= k <= 16; the field has q = 2^k elements.
    reduction_poly : int or None
        Irreducible degree-k polynomial as a bitmask (bit k must be set).
        Defaults to the pinned constant in REDUCTION_POLYS.
    """

    _cache: dict[tuple[int, int], "GF"] = {}

    def __init__(self, k: int, reduction_poly: int | None = None):
        if not 1 <= k <= 16:
            raise ValueError(f"field exponent must be in [1, 16], got {k}")
        poly = REDUCTION_POLYS[k] if reduction_poly is None else reduction_poly
        if not is_irreducible(poly, k):
            raise ValueError(f"0b{poly:b} is not an irreducible degree-{k} polynomial")
        self.k = k
        self.q = 1 << k
        self.poly = poly
        self._build_log_tables()

    @classmethod
    def for_q(cls, q: int) -> "GF":
        """Shared field instance for q = 2^k with the pinned polynomial."""
        k = q.bit_length() - 1
        if q != 1 << k or not 1 <= k <= 16:
            raise ValueError(f"q must be a power of two in [2, 2^16], got {q}")
        key = (k, REDUCTION_POLYS[k])
        if key not in cls._cache:
            cls._cache[key] = cls(k)
        return cls._cache[key]

    # -- reference multiplication ------------------------------------------

    def mul_ref(self, a: int, b: int) -> int:
        """Table-free shift-and-reduce product; the reference semantics."""
        return _poly_mod(_clmul(a, b), self.poly, self.k)

    # -- table construction -------------------------------------------------

    def _build_log_tables(self) -> None:
        q = self.q
        g = self._find_generator()
        exp = [1] * (2 * (q - 1))
        log = [0] * q
        acc = 1
        for i in range(q - 1):
            exp[i] = acc
            exp[i + q - 1] = acc  # doubled so LOG[a]+LOG[b] never needs a mod
            log[acc] = i
            acc = self.mul_ref(acc, g)
        if acc != 1:
            raise ValueError(f"0b{self.poly:b} does not define a field")
        self.generator = g
        self._exp = exp
        self._log = log
        self._exp_np = np.array(exp, dtype=np.int64)
        self._log_np = np.array(log, dtype=np.int64)

    def _find_generator(self) -> int:
        q = self.q
        if q == 2:
            return 1
        cofactors = [(q - 1) // r for r in _prime_factors(q - 1)]
        for g in range(2, q):
            if all(self._pow_ref(g, c) != 1 for c in cofactors):
                return g
        raise ValueError(f"no multiplicative generator; 0b{self.poly:b} is not irreducible")

    def _pow_ref(self, a: int, n: int) -> int:
        acc = 1
        while n:
            if n & 1:
                acc = self.mul_ref(acc, a)
            a = self.mul_ref(a, a)
            n >>= 1
        return acc

    # -- scalar operations ---------------------------------------------------

    @staticmethod
    def add(a: int, b: int) -> int:
        """Characteristic-2 addition (XOR); doubles as subtraction."""
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in GF(2^k)")
        return self._exp[self.q - 1 - self._log[a]]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def sample(self, rng: np.random.Generator) -> int:
        """One uniform element; advances only the caller's generator."""
        return int(rng.integers(0, self.q))

    def validate(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element of GF({self.q})")
        return a

    # -- vectorized operations (numpy int64 arrays) ---------------------------

    def mul_vec(self, c: int, arr: np.ndarray) -> np.ndarray:
        """Scalar-times-array product."""
        if c == 0:
            return np.zeros_like(arr)
        if c == 1:
            return arr.copy()
        lc = self._log[c]
        out = self._exp_np[self._log_np[arr] + lc]
        out[arr == 0] = 0
        return out

    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of two arrays (broadcasting allowed)."""
        prod = self._exp_np[self._log_np[a] + self._log_np[b]]
        return np.where((a == 0) | (b == 0), 0, prod)

    def rand_array(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.integers(0, self.q, size=size, dtype=np.int64)

    # -- identity -------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, GF) and (self.k, self.poly) == (other.k, other.poly)

    def __hash__(self) -> int:
        return hash((self.k, self.poly))

    def __repr__(self) -> str:
        return f"GF(2^{self.k}, poly=0b{self.poly:b})"


@dataclass(frozen=True)
class FieldElement:
    """A single element of a GF(2^k) instance; value is always in [0, q)."""

    field: GF
    value: int

    def __post_init__(self):
        self.field.validate(self.value)

    def _check(self, other: "FieldElement") -> None:
        if self.field != other.field:
            raise FieldMismatchError(f"{self.field} vs {other.field}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field, self.value ^ other.value)

    __sub__ = __add__

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        return FieldElement(self.field, self.field.mul(self.value, other.value))

    def inverse(self) -> "FieldElement":
        return FieldElement(self.field, self.field.inv(self.value))


def ff_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def ff_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def ff_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def ff_sample(field: GF, rng: np.random.Generator) -> FieldElement:
    return FieldElement(field, field.sample(rng))
