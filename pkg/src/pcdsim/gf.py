"""Arithmetic over binary-extension Galois fields GF(2^e).

All parity-check algebra in this package runs over GF(q) with q a power of
two (q = 2 and q = 4 in practice).  Symbols are small non-negative integers
in ``[0, q)``; addition is carry-free (bitwise XOR) and multiplication is
polynomial multiplication modulo a fixed irreducible reduction polynomial.
Multiplication and inversion are table-driven, which is exact and fast for
the field sizes used here (q <= 256).

The reduction polynomial for GF(4) is x^2 + x + 1 (bit pattern 0b111), the
unique irreducible quadratic over GF(2), so lifted codes are reproducible
across implementations.
"""

from __future__ import annotations

import numpy as np

__all__ = ["GfField", "gf_add", "gf_mul", "gf_inv"]

# Default irreducible reduction polynomials (bit patterns, degree = log2 q).
_DEFAULT_POLY = {
    2: 0b111,      # x^2 + x + 1       (GF(4))
    3: 0b1011,     # x^3 + x + 1       (GF(8))
    4: 0b10011,    # x^4 + x + 1       (GF(16))
    5: 0b100101,   # x^5 + x^2 + 1     (GF(32))
    6: 0b1000011,  # x^6 + x + 1       (GF(64))
    7: 0b10001001,  # x^7 + x^3 + 1    (GF(128))
    8: 0b100011011,  # x^8 + x^4 + x^3 + x + 1  (GF(256))
}

_MAX_TABLE_Q = 256


def _poly_mul_mod(a: int, b: int, poly: int, degree: int) -> int:
    """Multiply two GF(2)[x] polynomials and reduce modulo ``poly``.

    Parameters
    ----------
    a, b : int
        Bit-pattern operands (bit i = coefficient of x^i).
    poly : int
        Reduction polynomial bit pattern of the given degree.
    degree : int
        Degree of ``poly`` (= log2 of the field order).

    Returns
    -------
    int
        The reduced product, a bit pattern below ``1 << degree``.
    """
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a >> degree:
            a ^= poly
    return acc


class GfField:
    """A Galois field GF(q) with q = 2^e, backed by lookup tables.

    Parameters
    ----------
    q : int
        Field order; must be a power of two, 2 <= q <= 256.
    poly : int, optional
        Reduction polynomial bit pattern for q > 2.  Defaults to a fixed
        irreducible polynomial per degree (x^2+x+1 for GF(4)).

    Attributes
    ----------
    q : int
        Field order.
    poly : int
        Reduction polynomial in use (0 for GF(2), where none is needed).
    mul_table : ndarray of shape (q, q)
        ``mul_table[a, b]`` = a*b in GF(q).
    inv_table : ndarray of shape (q,)
        Multiplicative inverses; index 0 is unused (held at 0).
    """

    def __init__(self, q: int, poly: int | None = None):
        if q < 2 or (q & (q - 1)) != 0:
            raise ValueError(f"field order must be a power of two >= 2, got {q}")
        if q > _MAX_TABLE_Q:
            raise ValueError(f"table-driven fields support q <= {_MAX_TABLE_Q}, got {q}")
        self.q = int(q)
        self.degree = self.q.bit_length() - 1
        if self.q == 2:
            self.poly = 0
        else:
            self.poly = int(poly) if poly is not None else _DEFAULT_POLY[self.degree]
            if self.poly >> self.degree != 1:
                raise ValueError(
                    f"reduction polynomial 0b{self.poly:b} does not have degree {self.degree}"
                )
        self._build_tables()

    def _build_tables(self) -> None:
        q = self.q
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(a, q):
                p = _poly_mul_mod(a, b, self.poly, self.degree) if q > 2 else (a & b)
                mul[a, b] = p
                mul[b, a] = p
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            hits = np.flatnonzero(mul[a] == 1)
            if hits.size != 1:
                raise ValueError(
                    f"reduction polynomial 0b{self.poly:b} is not irreducible over GF(2)"
                )
            inv[a] = hits[0]
        self.mul_table = mul
        self.inv_table = inv

    def check_range(self, *values) -> None:
        """Raise ``ValueError`` if any symbol lies outside [0, q)."""
        for v in values:
            arr = np.asarray(v)
            if arr.size and (arr.min() < 0 or arr.max() >= self.q):
                raise ValueError(f"symbol out of range for GF({self.q}): {v!r}")

    def __repr__(self) -> str:  # pragma: no cover
        return f"GfField(q={self.q}, poly=0b{self.poly:b})"

    def __eq__(self, other) -> bool:
        return isinstance(other, GfField) and (self.q, self.poly) == (other.q, other.poly)

    def __hash__(self) -> int:
        return hash((self.q, self.poly))


def gf_add(a, b, f: GfField):
    """Field addition (characteristic 2: bitwise XOR).  Vectorized.

    Parameters
    ----------
    a, b : int or array_like of int
        Symbols in [0, q).
    f : GfField

    Returns
    -------
    int or ndarray
        a + b element-wise in GF(q).
    """
    f.check_range(a, b)
    out = np.bitwise_xor(a, b)
    return int(out) if np.isscalar(a) and np.isscalar(b) else out


def gf_mul(a, b, f: GfField):
    """Field multiplication via the precomputed table.  Vectorized.

    Parameters
    ----------
    a, b : int or array_like of int
        Symbols in [0, q).
    f : GfField

    Returns
    -------
    int or ndarray
        a * b element-wise in GF(q).
    """
    f.check_range(a, b)
    out = f.mul_table[a, b]
    return int(out) if np.isscalar(a) and np.isscalar(b) else out


def gf_inv(a, f: GfField):
    """Multiplicative inverse.  Vectorized.

    Parameters
    ----------
    a : int or array_like of int
        Nonzero symbols in [1, q).
    f : GfField

    Returns
    -------
    int or ndarray
        b such that a*b = 1 in GF(q).

    Raises
    ------
    ZeroDivisionError
        If any input symbol is zero.
    """
    f.check_range(a)
    arr = np.asarray(a)
    if np.any(arr == 0):
        raise ZeroDivisionError("zero has no multiplicative inverse")
    out = f.inv_table[a]
    return int(out) if np.isscalar(a) else out
