"""Prequantum lifts of the group action and Bohr-Sommerfeld points.

The line bundle is R^n x T^n x C with connection d - 2 pi i N x.dy. A group
element acts on the fiber coordinate z by the phase

    g_gamma * exp(2 pi i N {gtilde_gamma(x) + c_gamma . A_gamma^{-T} y}).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exact
from .group_actions import ActionFamily, reduce_to_fundamental
from .polynomial import GaussianRational, Poly, poly_dot


class NotLiftableError(ValueError):
    """The action does not lift to the prequantum bundle at this tensor power."""


# closed-form pieces --------------------------------------------------------

def _affine_polys(matrix, offset) -> list[Poly]:
    matrix = np.asarray(matrix, dtype=object)
    return [Poly.linear(list(matrix[k]), offset[k]) for k in range(len(offset))]


def g_tilde_poly(family: ActionFamily, gamma) -> Poly:
    """gtilde_gamma as an exact quadratic polynomial in x."""
    n = family.n
    aff, fib = family.evaluate(gamma)
    rho = _affine_polys(aff.A.astype(object), aff.c)
    u = _affine_polys(fib.U, fib.w)
    out = poly_dot(rho, u) - Poly.constant(n, sum(a * b for a, b in zip(aff.c, fib.w)))
    for i in range(n):
        # int_0^{x_i} u(0,..,0,tau,x_{i+1},..,x_n) dtau, then component i of A^T applied to it
        restricted = []
        for uj in u:
            p = uj
            for k in range(i):
                p = p.substitute(k, 0)
            restricted.append(p.antiderivative(i))
        out = out - poly_dot([Poly.constant(n, int(aff.A[j, i])) for j in range(n)], restricted)
    return out


def g_tilde(family: ActionFamily, gamma, x):
    """Real value of gtilde_gamma at x (vectorized over leading axes)."""
    p = g_tilde_poly(family, gamma)
    if isinstance(x, np.ndarray) and x.dtype == object:
        return p.value_at(list(x)).re
    return p(np.asarray(x, float)).real


def _affine_integral(U: np.ndarray, w: np.ndarray, p: np.ndarray, i: int) -> np.ndarray:
    """int_0^{p_i} (U z + w) dtau with z = (0,..,0,tau,p_{i+1},..,p_n)."""
    tail = U[:, i + 1:] @ p[i + 1:] if i + 1 < len(p) else np.zeros(len(w))
    return U[:, i] * p[i] ** 2 / 2 + (tail + w) * p[i]


def cocycle_quantity(family: ActionFamily, g1, g2, x) -> float:
    """Closed-form obstruction for the lift to be a homomorphism (affine fiber maps).

    The expression is constant in x; the lift composes correctly at tensor
    power N iff N times it is an integer for every pair (g1, g2).
    """
    d1, d2 = family.float_data(g1), family.float_data(g2)
    x = np.asarray(x, float)
    n = family.n
    u1 = lambda z: d1.U @ z + d1.w
    u2_0 = d2.w
    rho1_c2 = d1.A @ d2.c + d1.c
    head = (-d1.c @ u1(np.zeros(n)) + d1.c @ (d1.A_inv.T @ u2_0) + rho1_c2 @ u1(d2.c))
    rho2x = d2.A @ x + d2.c
    first = sum((d1.A.T @ _affine_integral(d1.U, d1.w, rho2x, i))[i] for i in range(n))
    # u1 o rho2 is affine with matrix U1 A2 and offset U1 c2 + w1
    U12 = d1.U @ d2.A
    w12 = d1.U @ d2.c + d1.w
    second = sum((d2.A.T @ d1.A.T @ _affine_integral(U12, w12, x, i))[i] for i in range(n))
    return float(head - first + second)


def lift_exponent(family: ActionFamily, gamma, x, y):
    """gtilde_gamma(x) + c_gamma . A^{-T} y, the phase divided by 2 pi i N."""
    d = family.float_data(gamma)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return g_tilde(family, gamma, x) + (y @ d.A_inv) @ d.c


def lift_defect(family: ActionFamily, g1, g2, x, y) -> float:
    """Phase mismatch of lift(g1 g2) against lift(g1) o lift(g2), in units of 2 pi i N."""
    g12 = family.compose(g1, g2)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d2 = family.float_data(g2)
    x2 = d2.A @ x + d2.c
    y2 = d2.A_inv.T @ y + d2.U @ x + d2.w  # unreduced lift of the fiber image
    return float(lift_exponent(family, g12, x, y) - lift_exponent(family, g1, x2, y2)
                 - lift_exponent(family, g2, x, y))


@dataclass
class LiftabilityReport:
    liftable: bool
    N: int
    translation_ok: bool
    samples: int
    witness: dict | None = None


def _frac_distance(v: float) -> float:
    return abs(v - round(v))


def check_liftable(family: ActionFamily, N: int, sample_count: int = 64, seed: int = 0,
                   tol: float = 1e-9) -> LiftabilityReport:
    """Decide whether the action lifts at tensor power N; failures carry a witness."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be a positive integer")
    for e in family.generators():
        c = family.evaluate(e)[0].c
        if not exact.is_integer_vector(N * c):
            return LiftabilityReport(False, N, False, 0,
                                     {"part": 1, "generator": e, "c": [str(v) for v in c]})
    rng = np.random.default_rng(seed)
    gens = family.generators()
    pairs = [(a, b) for a in gens for b in gens]
    pairs += [(family.inverse(a), b) for a in gens for b in gens]
    samples = 0
    for k in range(len(pairs) + sample_count):
        if k < len(pairs):
            g1, g2 = pairs[k]
        else:
            g1 = tuple(int(v) for v in rng.integers(-3, 4, family.n))
            g2 = tuple(int(v) for v in rng.integers(-3, 4, family.n))
        x = rng.uniform(-2.0, 2.0, family.n)
        q = cocycle_quantity(family, g1, g2, x)
        samples += 1
        if _frac_distance(N * q) > tol:
            return LiftabilityReport(False, N, True, samples,
                                     {"part": 2, "gamma1": g1, "gamma2": g2, "x": x.tolist(),
                                      "quantity": q, "N_times_quantity": N * q})
    return LiftabilityReport(True, N, True, samples)


# the lift -------------------------------------------------------------------

def _phase_turns(phases, n: int) -> np.ndarray:
    if phases is None:
        return np.zeros(n)
    vals = np.asarray(phases, dtype=complex).reshape(-1)
    if len(vals) != n:
        raise ValueError(f"need {n} generator phases, got {len(vals)}")
    if np.max(np.abs(np.abs(vals) - 1)) > 1e-12:
        raise ValueError("generator phases must be unit complex numbers")
    return np.angle(vals) / (2 * np.pi)


class PrequantumLift:
    """Tensor power N, generator phases g(e_i) and the family they lift.

    Parameters
    ----------
    family : ActionFamily
    N : int
        Tensor power.
    phases : sequence of unit complex numbers, optional
        Images of the generators under the homomorphism g. Defaults to g = 1.
    hermitian_constant : float
        Constant C of the Hermitian metric C |z|^2.
    """

    def __init__(self, family: ActionFamily, N: int, phases: Sequence[complex] | None = None,
                 hermitian_constant: float = 1.0, sample_count: int = 64, seed: int = 0):
        self.family = family
        self.N = int(N)
        self.turns = _phase_turns(phases, family.n)
        self.hermitian_constant = float(hermitian_constant)
        self.report = check_liftable(family, self.N, sample_count, seed)
        self._check_homomorphism(seed)

    @property
    def liftable(self) -> bool:
        return self.report.liftable

    @property
    def phases(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.turns)

    def _check_homomorphism(self, seed: int, samples: int = 32):
        if not np.any(self.turns):
            return
        rng = np.random.default_rng(seed + 1)
        for _ in range(samples):
            a = tuple(int(v) for v in rng.integers(-3, 4, self.family.n))
            b = tuple(int(v) for v in rng.integers(-3, 4, self.family.n))
            ab = self.family.compose(a, b)
            if abs(self.g(ab) - self.g(a) * self.g(b)) > 1e-12:
                raise ValueError(f"generator phases are not a homomorphism: witness {a}, {b}")

    def g(self, gamma) -> complex:
        gamma = np.asarray(self.family.element(gamma), float)
        return complex(np.exp(2j * np.pi * float(self.turns @ gamma)))

    def require(self):
        if not self.liftable:
            raise NotLiftableError(f"{self.family.name} does not lift at N={self.N}: {self.report.witness}")

    def apply(self, gamma, x, y, z):
        self.require()
        x_new, y_new = self.family.act_total(gamma, x, y)
        phase = self.g(gamma) * np.exp(2j * np.pi * self.N * lift_exponent(self.family, gamma, x, y))
        return x_new, y_new, phase * np.asarray(z, dtype=complex)


def lift_apply(lift: PrequantumLift, gamma, x, y, z):
    return lift.apply(gamma, x, y, z)


# Bohr-Sommerfeld points ----------------------------------------------------

@dataclass(frozen=True)
class BSPoint:
    m: tuple
    N: int

    @property
    def point(self) -> np.ndarray:
        return np.array([Fraction(v, self.N) for v in self.m], dtype=object)

    @property
    def point_float(self) -> np.ndarray:
        return np.array(self.m, float) / self.N


def bs_points(family: ActionFamily, N: int) -> list[BSPoint]:
    """F intersected with (1/N) Z^n, in lexicographic order of m."""
    N = int(N)
    if N < 1:
        raise ValueError("N must be a positive integer")
    n = family.n
    corners = np.array([exact.to_float(family.offset + family.chart @ np.array(s, dtype=object))
                        for s in itertools.product((0, 1), repeat=n)])
    lo = np.floor(corners.min(axis=0) * N).astype(int) - 1
    hi = np.ceil(corners.max(axis=0) * N).astype(int) + 1
    out = []
    for m in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        p = np.array([Fraction(v, N) for v in m], dtype=object)
        if family.in_fundamental(p):
            out.append(BSPoint(tuple(int(v) for v in m), N))
    return out


def orbit_index(family: ActionFamily, gamma, bs: BSPoint) -> np.ndarray:
    """N rho_gamma(m/N) as an integer vector."""
    image = family.act_base(gamma, bs.point) * bs.N
    if not exact.is_integer_vector(image):
        raise ValueError(f"N rho_gamma(m/N) = {list(image)} is not integral; the lift condition fails")
    return exact.as_int_vector(image)


def orbit_lookup(family: ActionFamily, N: int, index) -> tuple[tuple, BSPoint]:
    """Inverse of ``orbit_index``: the (gamma, BS point) with N rho_gamma(m/N) = index."""
    p = np.array([Fraction(int(v), N) for v in index], dtype=object)
    gamma, p0 = reduce_to_fundamental(family, p)
    return gamma, BSPoint(tuple(int(v) for v in exact.as_int_vector(p0 * N)), int(N))


def bs_points_to_json(points: Sequence[BSPoint], N: int) -> str:
    return json.dumps({"N": int(N), "points": [list(p.m) for p in points]})


def bs_points_from_json(text: str) -> list[BSPoint]:
    data = json.loads(text)
    return [BSPoint(tuple(int(v) for v in m), int(data["N"])) for m in data["points"]]
