"""Sparse multivariate polynomials with exact Gaussian-rational or double coefficients."""

from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


def to_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float (via its repr)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("boolean is not a number")
    if isinstance(value, (numbers.Integral, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


class GaussianRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = to_fraction(re)
        self.im = to_fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (complex, np.complexfloating)):
            return cls(float(value.real), float(value.imag))
        return cls(value, 0)

    def __repr__(self) -> str:
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __eq__(self, other) -> bool:
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (numbers.Rational, np.integer)):
            return self.im == 0 and self.re == other
        if isinstance(other, numbers.Complex):
            return complex(self) == complex(other)
        return NotImplemented

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def _other(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (numbers.Rational, np.integer)) and not isinstance(other, bool):
            return GaussianRational(other, 0)
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return complex(self) * other
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return other / complex(self)
        return o / self


I = GaussianRational(0, 1)


def coerce_coefficient(value):
    """Exact types become GaussianRational; doubles stay as Python complex."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("boolean coefficient")
    if isinstance(value, (numbers.Rational, np.integer, str)):
        return GaussianRational(value, 0)
    if isinstance(value, (numbers.Complex, np.number)):
        return complex(value)
    raise TypeError(f"unsupported coefficient type {type(value).__name__}")


def _is_zero(c) -> bool:
    return not c if isinstance(c, GaussianRational) else c == 0


def is_exact_scalar(value) -> bool:
    return isinstance(value, (GaussianRational, Fraction, numbers.Integral, np.integer))


class Poly:
    """Polynomial in ``nvars`` real variables with complex coefficients.

    Terms are stored as ``{exponent tuple: coefficient}``. Coefficients are
    ``GaussianRational`` (exact) or ``complex`` (double); mixing the two
    produces doubles.
    """

    __slots__ = ("nvars", "terms", "_numeric")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        if nvars < 0:
            raise ValueError("nvars must be non-negative")
        self.nvars = int(nvars)
        clean: dict[tuple[int, ...], object] = {}
        for exp, coef in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for {self.nvars} variables")
            coef = coerce_coefficient(coef)
            if exp in clean:
                coef = clean[exp] + coef
            clean[exp] = coef
        self.terms = {e: c for e, c in clean.items() if not _is_zero(c)}
        self._numeric = None

    # construction helpers
    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, value) -> "Poly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        exp = [0] * nvars
        exp[index] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def linear(cls, coefficients: Sequence, offset=0) -> "Poly":
        """Affine form offset + sum_k coefficients[k] * x_k."""
        n = len(coefficients)
        p = cls.constant(n, offset)
        for k, a in enumerate(coefficients):
            p = p + cls.variable(n, k) * a
        return p

    # basic properties
    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, GaussianRational) for c in self.terms.values())

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self.terms), default=-1)

    def is_zero(self, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return not self.terms
        return all(abs(complex(c)) <= tol for c in self.terms.values())

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, GaussianRational(0))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Poly({self.nvars}, 0)"
        parts = []
        for exp in sorted(self.terms):
            mono = "*".join(f"x{k + 1}^{e}" if e > 1 else f"x{k + 1}" for k, e in enumerate(exp) if e)
            parts.append(f"{self.terms[exp]}" + (f"*{mono}" if mono else ""))
        return f"Poly({self.nvars}, " + " + ".join(parts) + ")"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            if isinstance(other, (numbers.Number, GaussianRational)):
                other = Poly.constant(self.nvars, other)
            else:
                return NotImplemented
        if self.nvars != other.nvars or self.terms.keys() != other.terms.keys():
            return False
        return all(self.terms[e] == other.terms[e] for e in self.terms)

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms)))

    # arithmetic
    def _lift(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Poly.constant(self.nvars, other)

    def __add__(self, other) -> "Poly":
        other = self._lift(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Poly":
        return self._lift(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = coerce_coefficient(other)
            if _is_zero(c):
                return Poly(self.nvars)
            return Poly(self.nvars, {e: v * c for e, v in self.terms.items()})
        other = self._lift(other)
        out: dict[tuple, object] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = c1 * c2
                out[e] = out[e] + v if e in out else v
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Poly":
        c = coerce_coefficient(other)
        if isinstance(c, GaussianRational):
            return self * (GaussianRational(1) / c)
        return self * (1.0 / c)

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        out = Poly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def map_coefficients(self, fn) -> "Poly":
        return Poly(self.nvars, {e: fn(c) for e, c in self.terms.items()})

    def real_part(self) -> "Poly":
        return self.map_coefficients(lambda c: GaussianRational(c.re) if isinstance(c, GaussianRational) else complex(c.real))

    def imag_part(self) -> "Poly":
        return self.map_coefficients(lambda c: GaussianRational(c.im) if isinstance(c, GaussianRational) else complex(c.imag))

    def conjugate(self) -> "Poly":
        return self.map_coefficients(lambda c: c.conjugate())

    def to_float(self) -> "Poly":
        return self.map_coefficients(complex)

    # calculus in one variable
    def diff(self, index: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            k = e[index]
            if k:
                ne = list(e)
                ne[index] = k - 1
                out[tuple(ne)] = c * k
        return Poly(self.nvars, out)

    def antiderivative(self, index: int) -> "Poly":
        """Antiderivative in x_index vanishing on x_index = 0."""
        out = {}
        for e, c in self.terms.items():
            k = e[index] + 1
            ne = list(e)
            ne[index] = k
            out[tuple(ne)] = c / GaussianRational(k) if isinstance(c, GaussianRational) else c / k
        return Poly(self.nvars, out)

    def substitute(self, index: int, value) -> "Poly":
        """Replace x_index by a scalar (stays exact for rational values)."""
        v = coerce_coefficient(value)
        out: dict[tuple, object] = {}
        for e, c in self.terms.items():
            k = e[index]
            ne = list(e)
            ne[index] = 0
            ne_t = tuple(ne)
            if k:
                if isinstance(v, GaussianRational):
                    w = GaussianRational(1)
                    for _ in range(k):
                        w = w * v
                else:
                    w = v ** k
                term = c * w
            else:
                term = c
            out[ne_t] = out[ne_t] + term if ne_t in out else term
        return Poly(self.nvars, out)

    def definite_integral(self, index: int, lower) -> "Poly":
        """Integral over x_index from ``lower`` to the live variable x_index."""
        anti = self.antiderivative(index)
        return anti - anti.substitute(index, lower)

    def compose(self, substitutions: Sequence["Poly"]) -> "Poly":
        """Return P(q_1(z), ..., q_n(z)) where each q_k is a Poly in the same new variables."""
        if len(substitutions) != self.nvars:
            raise ValueError("need one substitution per variable")
        if not substitutions:
            return Poly(0, self.terms)
        m = substitutions[0].nvars
        powers: list[list[Poly]] = []
        for k, q in enumerate(substitutions):
            if q.nvars != m:
                raise ValueError("substitutions must share variables")
            pk = [Poly.constant(m, 1)]
            for _ in range(self.degree_in(k)):
                pk.append(pk[-1] * q)
            powers.append(pk)
        out = Poly(m)
        for e, c in self.terms.items():
            term = Poly.constant(m, c)
            for k, ek in enumerate(e):
                if ek:
                    term = term * powers[k][ek]
            out = out + term
        return out

    def compose_affine(self, matrix, offset) -> "Poly":
        """Return x -> P(matrix @ x + offset)."""
        matrix = np.asarray(matrix, dtype=object)
        subs = [Poly.linear(list(matrix[k]), offset[k]) for k in range(self.nvars)]
        return self.compose(subs)

    # evaluation
    def value_at(self, point: Sequence):
        """Exact value at a point when both point and coefficients are exact."""
        p = self
        for k, v in enumerate(point):
            p = p.substitute(k, v)
        return p.constant_term()

    def _numeric_form(self):
        if self._numeric is None:
            if self.terms:
                exps = np.array(list(self.terms.keys()), dtype=np.int64).reshape(len(self.terms), self.nvars)
                coefs = np.array([complex(c) for c in self.terms.values()], dtype=complex)
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
                coefs = np.zeros(0, dtype=complex)
            self._numeric = (exps, coefs)
        return self._numeric

    def __call__(self, x) -> np.ndarray:
        """Evaluate on an array of points with trailing axis of length ``nvars``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.nvars,):
            raise ValueError(f"expected trailing dimension {self.nvars}, got shape {x.shape}")
        exps, coefs = self._numeric_form()
        batch = x.shape[:-1]
        if not len(coefs):
            return np.zeros(batch, dtype=complex)
        result = np.zeros(batch, dtype=complex)
        maxdeg = exps.max(axis=0) if len(exps) else np.zeros(self.nvars, dtype=int)
        pw = [np.stack([x[..., k] ** d for d in range(int(maxdeg[k]) + 1)]) for k in range(self.nvars)]
        for e, c in zip(exps, coefs):
            mono = np.ones(batch)
            for k, ek in enumerate(e):
                if ek:
                    mono = mono * pw[k][ek]
            result = result + c * mono
        return result

    # serialization
    def to_json(self) -> list[dict]:
        out = []
        for e in sorted(self.terms):
            c = self.terms[e]
            if isinstance(c, GaussianRational):
                out.append({"exponent": list(e), "re": str(c.re), "im": str(c.im)})
            else:
                out.append({"exponent": list(e), "re": repr(c.real), "im": repr(c.imag)})
        return out

    @classmethod
    def from_json(cls, nvars: int, monomials: Iterable[Mapping]) -> "Poly":
        terms: dict[tuple, object] = {}
        for mono in monomials:
            exp = tuple(int(v) for v in mono["exponent"])
            c = GaussianRational(mono.get("re", 0), mono.get("im", 0))
            terms[exp] = terms[exp] + c if exp in terms else c
        return cls(nvars, terms)


def poly_dot(u: Sequence[Poly], v: Sequence[Poly]) -> Poly:
    out = Poly(u[0].nvars)
    for a, b in zip(u, v):
        out = out + a * b
    return out


def poly_matvec(matrix: Sequence[Sequence[Poly]], vector: Sequence[Poly]) -> list[Poly]:
    return [poly_dot(row, vector) for row in matrix]
