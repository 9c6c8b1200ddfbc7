"""Sparse multivariate polynomials in real parameters with complex coefficients.

Coefficients are exact (int, Fraction, or GaussRational for complex
rationals) when the input allows it, and floats/complex otherwise.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Number
from typing import Iterable, Sequence

import numpy as np


class GaussRational:
    """Exact complex number re + i*im with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def make(re, im):
        """Return a real rational when ``im`` vanishes."""
        if im == 0:
            return _simplify_rational(Fraction(re))
        return GaussRational(re, im)

    @staticmethod
    def _parts(x):
        if isinstance(x, GaussRational):
            return x.re, x.im
        if isinstance(x, (int, Fraction)):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) + other
        return GaussRational.make(self.re + p[0], self.im + p[1])

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) - other
        return GaussRational.make(self.re - p[0], self.im - p[1])

    def __rsub__(self, other):
        p = self._parts(other)
        if p is None:
            return other - complex(self)
        return GaussRational.make(p[0] - self.re, p[1] - self.im)

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) * other
        a, b = p
        return GaussRational.make(self.re * a - self.im * b, self.re * b + self.im * a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return complex(self) / other
        a, b = p
        den = a * a + b * b
        if den == 0:
            raise ZeroDivisionError("GaussRational division by zero")
        return GaussRational.make((self.re * a + self.im * b) / den, (self.im * a - self.re * b) / den)

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is None:
            return other / complex(self)
        return GaussRational(*p) / self

    def __pow__(self, k: int):
        out = 1
        base = self
        while k:
            if k & 1:
                out = base * out
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __eq__(self, other):
        p = self._parts(other)
        if p is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == p[0] and self.im == p[1]

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


def _simplify_rational(x: Fraction):
    return x.numerator if x.denominator == 1 else x


def is_exact(c) -> bool:
    return isinstance(c, (int, Fraction, GaussRational)) and not isinstance(c, bool)


def normalize_coeff(c):
    """Canonical coefficient: Fraction->int when integral, complex with zero
    imaginary part -> float, GaussRational with zero imaginary part -> rational."""
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, Fraction):
        return _simplify_rational(c)
    if isinstance(c, GaussRational):
        return GaussRational.make(c.re, c.im)
    if isinstance(c, complex):
        return c.real if c.imag == 0 else c
    if isinstance(c, (np.floating, np.integer, np.complexfloating)):
        return normalize_coeff(c.item())
    return c


def exact_div(a, b):
    if isinstance(a, GaussRational) or isinstance(b, GaussRational):
        q = GaussRational(*GaussRational._parts(a)) / b if not isinstance(a, GaussRational) else a / b
        return normalize_coeff(q)
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return _simplify_rational(Fraction(a) / Fraction(b))
    return a / b


def coeff_from_number(x, exact: bool):
    """Convert an input matrix entry to a polynomial coefficient."""
    x = normalize_coeff(x)
    if not exact:
        return complex(x) if isinstance(x, complex) else float(x)
    if isinstance(x, complex):
        re, im = x.real, x.imag
        if not (float(re).is_integer() and float(im).is_integer()):
            raise ValueError("exact coefficients require integer-valued entries")
        return GaussRational.make(int(re), int(im))
    if isinstance(x, float):
        if not x.is_integer():
            raise ValueError("exact coefficients require integer-valued entries")
        return int(x)
    return x


def _grlex_key(e: tuple) -> tuple:
    return (sum(e), e)


def _fmt_coeff(c) -> str:
    if isinstance(c, GaussRational):
        re, im = _simplify_rational(c.re), _simplify_rational(c.im)
        if re == 0:
            return f"{im}i"
        sign = "+" if im > 0 else "-"
        return f"({re}{sign}{abs(im)}i)"
    if isinstance(c, complex):
        if c.real == 0:
            return f"{c.imag:.17g}i"
        sign = "+" if c.imag >= 0 else "-"
        return f"({c.real:.17g}{sign}{abs(c.imag):.17g}i)"
    if isinstance(c, float):
        return f"{c:.17g}"
    return str(c)


class MultiPoly:
    """Immutable sparse polynomial: exponent tuple -> coefficient."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: dict | None = None):
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            c = normalize_coeff(c)
            if c != 0:
                clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def constant(cls, c, nvars: int) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, i: int, nvars: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls(nvars, {})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self):
        return self.terms.get((0,) * self.nvars, 0)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(c) for c in self.terms.values())

    def __len__(self):
        return len(self.terms)

    def leading(self) -> tuple[tuple, object]:
        e = max(self.terms, key=_grlex_key)
        return e, self.terms[e]

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            if other == 0:
                return MultiPoly.zero(self.nvars)
            return MultiPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = MultiPoly.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def scale(self, c) -> "MultiPoly":
        return self * c

    def conj(self) -> "MultiPoly":
        """Coefficient-wise conjugate (the conjugate for real parameters)."""
        return MultiPoly(self.nvars, {e: c.conjugate() for e, c in self.terms.items()})

    def is_real(self) -> bool:
        return all(c == c.conjugate() for c in self.terms.values())

    def divmod(self, divisor: "MultiPoly") -> tuple["MultiPoly", "MultiPoly"]:
        """Multivariate division by a single polynomial in grlex order."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        le, lc = divisor.leading()
        rem: dict = {}
        quo: dict = {}
        p = dict(self.terms)
        dterms = list(divisor.terms.items())
        while p:
            e = max(p, key=_grlex_key)
            c = p.pop(e)
            if c == 0:
                continue
            if all(a >= b for a, b in zip(e, le)):
                qe = tuple(a - b for a, b in zip(e, le))
                qc = exact_div(c, lc)
                quo[qe] = quo.get(qe, 0) + qc
                for de, dc in dterms:
                    if de == le:
                        continue
                    te = tuple(a + b for a, b in zip(qe, de))
                    v = p.get(te, 0) - qc * dc
                    p[te] = v
            else:
                rem[e] = rem.get(e, 0) + c
        return MultiPoly(self.nvars, quo), MultiPoly(self.nvars, rem)

    def snapped(self, atol: float) -> "MultiPoly":
        """Drop inexact coefficients of modulus <= atol."""
        if atol <= 0:
            return self
        return MultiPoly(
            self.nvars,
            {e: c for e, c in self.terms.items() if is_exact(c) or abs(c) > atol},
        )

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self.terms.values()), default=0.0)

    def abs_bound(self, point: Sequence) -> float:
        """sum |c| |lambda^e|, the cancellation-free magnitude at a point."""
        x = [abs(float(v)) for v in point]
        return float(sum(abs(complex(c)) * math.prod(xi**k for xi, k in zip(x, e)) for e, c in self.terms.items()))

    def __call__(self, point: Sequence):
        if len(point) != self.nvars:
            from .errors import DimensionMismatch

            raise DimensionMismatch(f"point has {len(point)} coordinates, polynomial has {self.nvars} variables")
        total = 0
        for e, c in self.terms.items():
            term = c
            for xi, k in zip(point, e):
                if k:
                    term = term * xi**k
            total = total + term
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Floating-point evaluation at the rows of ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0], dtype=complex)
        for e, c in self.terms.items():
            out += complex(c) * np.prod(points ** np.array(e), axis=1)
        return out

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            if isinstance(other, Number):
                return self == MultiPoly.constant(other, self.nvars)
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def __str__(self):
        return self.render()

    def render(self, names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"λ{i + 1}" for i in range(self.nvars)]
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for name, k in zip(names, e):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}^{k}")
            if not factors:
                parts.append(_fmt_coeff(c))
            elif c == 1:
                parts.append("·".join(factors))
            elif c == -1:
                parts.append("-" + "·".join(factors))
            else:
                parts.append(_fmt_coeff(c) + "·" + "·".join(factors))
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    def __repr__(self):
        return f"MultiPoly({self.render()})"


class FactoredPoly:
    """Product ``const * prod(base**exp)`` of non-constant MultiPoly bases.

    Bases are normalized to leading coefficient 1 in grlex order so equal
    factors merge. A zero const represents the zero polynomial.
    """

    __slots__ = ("nvars", "const", "factors")

    def __init__(self, nvars: int, const=1, factors: dict | None = None):
        self.nvars = nvars
        self.const = normalize_coeff(const)
        self.factors = {} if self.const == 0 else {b: k for b, k in (factors or {}).items() if k}

    @classmethod
    def from_poly(cls, p: MultiPoly) -> "FactoredPoly":
        if p.is_zero():
            return cls(p.nvars, 0)
        if p.is_constant():
            return cls(p.nvars, p.constant_value())
        _, lc = p.leading()
        base = MultiPoly(p.nvars, {e: exact_div(c, lc) for e, c in p.terms.items()})
        return cls(p.nvars, lc, {base: 1})

    @classmethod
    def one(cls, nvars: int) -> "FactoredPoly":
        return cls(nvars, 1)

    def is_zero(self) -> bool:
        return self.const == 0

    @property
    def degree(self) -> int:
        if self.is_zero():
            return -1
        return sum(b.degree * k for b, k in self.factors.items())

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            other = FactoredPoly.from_poly(other)
        if not isinstance(other, FactoredPoly):
            return FactoredPoly(self.nvars, self.const * other, self.factors)
        f = dict(self.factors)
        for b, k in other.factors.items():
            f[b] = f.get(b, 0) + k
        return FactoredPoly(self.nvars, self.const * other.const, f)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        return FactoredPoly(self.nvars, self.const**k, {b: e * k for b, e in self.factors.items()})

    def conj(self) -> "FactoredPoly":
        return FactoredPoly(self.nvars, self.const.conjugate(), {b.conj(): k for b, k in self.factors.items()})

    def divides(self, other: "FactoredPoly") -> bool:
        """Structural divisibility: every factor of self appears in other with
        at least the same multiplicity."""
        if self.is_zero():
            return other.is_zero()
        if other.is_zero():
            return True
        return all(other.factors.get(b, 0) >= k for b, k in self.factors.items())

    def quotient(self, divisor: "FactoredPoly") -> "FactoredPoly":
        if not divisor.divides(self):
            raise ValueError("divisor does not divide structurally")
        if self.is_zero():
            return FactoredPoly(self.nvars, 0)
        f = dict(self.factors)
        for b, k in divisor.factors.items():
            f[b] -= k
        return FactoredPoly(self.nvars, exact_div(self.const, divisor.const), f)

    def expand(self) -> MultiPoly:
        out = MultiPoly.constant(self.const, self.nvars)
        for b, k in self.factors.items():
            out = out * b**k
        return out

    def __call__(self, point: Sequence):
        total = self.const
        for b, k in self.factors.items():
            total = total * b(point) ** k
        return total

    def vanishes_at(self, point: Sequence, rtol: float = 1e-9) -> bool:
        """True if some factor is zero at ``point``. Exact factors at rational
        points are tested exactly; inexact ones relative to their magnitude."""
        if self.is_zero():
            return True
        for b in self.factors:
            v = b(point)
            if b.is_exact and all(isinstance(x, (int, Fraction)) for x in point):
                if v == 0:
                    return True
            elif abs(complex(v)) <= rtol * max(b.abs_bound(point), np.finfo(float).tiny):
                return True
        return False

    def __eq__(self, other):
        if not isinstance(other, FactoredPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.const == other.const and self.factors == other.factors

    def __hash__(self):
        return hash((self.const, frozenset(self.factors.items())))

    def render(self, names: Sequence[str] | None = None) -> str:
        if self.is_zero():
            return "0"
        parts = []
        sign = ""
        if not self.factors:
            parts.append(_fmt_coeff(self.const))
        elif self.const == -1:
            sign = "-"
        elif self.const != 1:
            parts.append(_fmt_coeff(self.const))
        for b, k in sorted(self.factors.items(), key=lambda t: (t[0].degree, t[0].render())):
            s = f"({b.render(names)})"
            parts.append(s if k == 1 else f"{s}^{k}")
        return sign + "·".join(parts)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"FactoredPoly({self.render()})"


class PolyMatrix:
    """Dense matrix of MultiPoly entries."""

    def __init__(self, entries: Sequence[Sequence[MultiPoly]], nvars: int):
        self.nvars = nvars
        self.entries = [list(row) for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else 0

    @classmethod
    def from_constants(cls, a, nvars: int, exact: bool = True) -> "PolyMatrix":
        return cls(
            [[MultiPoly.constant(coeff_from_number(x, exact), nvars) for x in row] for row in a],
            nvars,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def conj_transpose(self) -> "PolyMatrix":
        return PolyMatrix([[self.entries[i][j].conj() for i in range(self.rows)] for j in range(self.cols)], self.nvars)

    def is_hermitian(self) -> bool:
        return self.rows == self.cols and all(
            self.entries[i][j] == self.entries[j][i].conj() for i in range(self.rows) for j in range(i, self.cols)
        )

    def is_diagonal(self) -> bool:
        return all(self.entries[i][j].is_zero() for i in range(self.rows) for j in range(self.cols) if i != j)

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.entries for p in row)

    def diagonal(self) -> list[MultiPoly]:
        return [self.entries[i][i] for i in range(min(self.rows, self.cols))]

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for row in self.entries for p in row)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
            self.nvars,
        )

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            from .errors import DimensionMismatch

            raise DimensionMismatch("incompatible PolyMatrix shapes")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = MultiPoly.zero(self.nvars)
                for k in range(self.cols):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if a.terms and b.terms:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out, self.nvars)

    def scale(self, c) -> "PolyMatrix":
        return PolyMatrix([[p * c for p in row] for row in self.entries], self.nvars)

    def __call__(self, point: Sequence) -> np.ndarray:
        return np.array([[p(point) for p in row] for row in self.entries], dtype=object)

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def render(self, names: Sequence[str] | None = None) -> str:
        return "\n".join("[" + ", ".join(p.render(names) for p in row) + "]" for row in self.entries)

    def __str__(self):
        return self.render()


def exact_matrix(a: Iterable[Iterable]) -> list[list]:
    return [[normalize_coeff(x) for x in row] for row in a]
