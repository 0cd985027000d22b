"""Fourier-mode coefficients, theta sections as certified lattice sums, and the reduced Dirac operator.

Sections of the prequantum bundle are written as fiber Fourier series
sum_l a_l(x) exp(2 pi i l.y). A coefficient is stored through its phase
polynomial P with a(x) = scale * exp(2 pi i P(x)), so every derivative is
exact. The reduced Dirac operator acts mode by mode as

    a_l -> d_i a_l + 2 pi i (Omega^t(x) (l - N x))_i a_l.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import exact
from .acs import AdiabaticOmega, OmegaMap, as_omega_map, check_bs_commutativity
from .group_actions import ActionFamily
from .polynomial import GaussianRational, Poly, poly_dot
from .prequantum import BSPoint, PrequantumLift, g_tilde_poly, orbit_lookup
from .truncation import gaussian_tail_bound, lattice_truncation_radius, truncation_radius

TWO_PI_I = 2j * np.pi
FD_STEP = 1e-5


class CommutativityError(ValueError):
    """The Bohr-Sommerfeld commutativity condition fails, so no kernel coefficient exists."""


class ConvergenceError(ValueError):
    """The lattice sum cannot be certified to converge."""


def omega_and_t(omega) -> tuple[OmegaMap, float]:
    if isinstance(omega, AdiabaticOmega):
        return omega.omega, float(omega.t)
    return omega, 1.0


def _bs_vector(n: int, m: Sequence[int], N: int) -> list[Poly]:
    return [Poly.constant(n, int(m[k])) - Poly.variable(n, k) * int(N) for k in range(n)]


def _check_point(m, n: int) -> tuple[int, ...]:
    m = tuple(int(v) for v in m)
    if len(m) != n:
        raise ValueError(f"m must have {n} entries")
    return m


# the kernel coefficient ------------------------------------------------------

def g_path_poly(omega, m: Sequence[int], N: int, i: int, order: Sequence[int] | None = None) -> Poly:
    """G_m^i as a polynomial (i is 0-based here).

    Coordinates preceding i in ``order`` are frozen at m/N and x_i runs from
    m_i/N; the remaining coordinates stay live.
    """
    omega = as_omega_map(omega) if not isinstance(omega, AdiabaticOmega) else omega.omega
    n = omega.n
    m = _check_point(m, n)
    order = tuple(range(n)) if order is None else tuple(int(k) for k in order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the coordinates")
    integrand = omega.matvec(_bs_vector(n, m, N))[i]
    for k in order[:order.index(i)]:
        integrand = integrand.substitute(k, Fraction(m[k], N))
    return integrand.definite_integral(i, Fraction(m[i], N))


def g_path(omega, m: Sequence[int], N: int, i: int, x, order: Sequence[int] | None = None) -> complex:
    """Value of G_m^i at x with i counted from 1."""
    if not 1 <= i <= len(m):
        raise ValueError("i is 1-based and must lie in 1..n")
    p = g_path_poly(omega, m, N, i - 1, order)
    if isinstance(x, np.ndarray) and x.dtype == object or (isinstance(x, (list, tuple)) and exact.is_exact_array(x)):
        return complex(p.value_at(list(x)))
    return complex(p(np.asarray(x, float)))


def exponent_poly(omega, m: Sequence[int], N: int, order: Sequence[int] | None = None) -> Poly:
    """Q_m = sum_i G_m^i, so that d_i Q_m = (Omega (m - N x))_i under commutativity."""
    omega_map, _ = omega_and_t(omega)
    n = omega_map.n
    out = Poly(n)
    for i in range(n):
        out = out + g_path_poly(omega_map, m, N, i, order)
    return out


class LocalCoefficient:
    """a(x) = scale * exp(2 pi i P(x)) for a complex polynomial P."""

    def __init__(self, n: int, phase: Poly, scale: complex = 1.0):
        self.n = n
        self.phase = phase
        self.scale = complex(scale)
        self._grad = [phase.diff(k) for k in range(n)]

    def __call__(self, x) -> np.ndarray:
        return self.scale * np.exp(TWO_PI_I * self.phase(np.asarray(x, float)))

    def phase_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.stack([g(x) for g in self._grad], axis=-1)

    def gradient(self, x) -> np.ndarray:
        return TWO_PI_I * self.phase_gradient(x) * self(x)[..., None]

    def phase_poly(self) -> Poly:
        return self.phase


class CoefficientFunction(LocalCoefficient):
    """Kernel coefficient a_m(x) = scale * exp(-2 pi i Q_m(x)) with a_m(m/N) = scale."""

    def __init__(self, omega, m: Sequence[int], N: int, order: Sequence[int] | None = None,
                 scale: complex = 1.0):
        omega_map, t = omega_and_t(omega)
        self.omega = omega
        self.m = _check_point(m, omega_map.n)
        self.N = int(N)
        self.t = t
        if not check_bs_commutativity(omega_map, self.m, self.N):
            raise CommutativityError(f"commutativity fails at m={self.m}, N={self.N}")
        self.order = None if order is None else tuple(order)
        self.Q = exponent_poly(omega_map, self.m, self.N, order)
        super().__init__(omega_map.n, -self.Q, scale)

    def residual_polys(self) -> list[Poly]:
        """d_i Q_m - (Omega (m - N x))_i, identically zero for a kernel coefficient."""
        omega_map, _ = omega_and_t(self.omega)
        rhs = omega_map.matvec(_bs_vector(self.n, self.m, self.N))
        return [self.Q.diff(i) - rhs[i] for i in range(self.n)]

    def is_kernel(self) -> bool:
        return all(p.is_zero(tol=1e-12) for p in self.residual_polys())


class ApproxCoefficient(LocalCoefficient):
    """a~_m(x) = scale * exp(pi i N d . Omega^t_{m/N} d), d = x - m/N."""

    def __init__(self, omega, m: Sequence[int], N: int, scale: complex = 1.0):
        omega_map, t = omega_and_t(omega)
        self.omega = omega
        self.m = _check_point(m, omega_map.n)
        self.N = int(N)
        self.t = t
        n = omega_map.n
        point = [Fraction(v, self.N) for v in self.m]
        self.frozen = omega_map.frozen_at(point)
        d = [Poly.variable(n, k) - point[k] for k in range(n)]
        phase = poly_dot(d, self.frozen.matvec(d)) * Fraction(self.N, 2)
        super().__init__(n, phase, scale)

    def residual_vector(self, x) -> np.ndarray:
        """2 pi i N a~ (Omega^t_{m/N} - Omega^t_x)(x - m/N): what the Dirac operator leaves."""
        omega_map, _ = omega_and_t(self.omega)
        x = np.asarray(x, float)
        d = x - np.array(self.m, float) / self.N
        diff = self.frozen(x) - omega_map(x)
        return TWO_PI_I * self.N * self(x)[..., None] * np.einsum("...ij,...j->...i", diff, d)


def coefficient(omega, m: Sequence[int], N: int, order: Sequence[int] | None = None,
                scale: complex = 1.0) -> CoefficientFunction:
    return CoefficientFunction(omega, m, N, order, scale)


def approx_coefficient(omega, m: Sequence[int], N: int, scale: complex = 1.0) -> ApproxCoefficient:
    return ApproxCoefficient(omega, m, N, scale)


def base_section_eval(coef: LocalCoefficient, x, y) -> np.ndarray:
    """a_m(x) exp(2 pi i m.y)."""
    y = np.asarray(y, float)
    return coef(x) * np.exp(TWO_PI_I * (y @ np.array(coef.m, float)))


# Fourier sections -------------------------------------------------------------

def _numeric_gradient(fn: Callable, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, float)
    cols = []
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        cols.append((fn(x + e) - fn(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def mode_gradient(mode, x) -> np.ndarray:
    grad = getattr(mode, "gradient", None)
    if grad is not None:
        return grad(x)
    return _numeric_gradient(mode, x)


class FourierSection:
    """Finite fiber Fourier series sum_l a_l(x) exp(2 pi i l.y)."""

    def __init__(self, n: int, modes: Mapping[tuple, Callable] | None = None):
        self.n = int(n)
        self.modes: dict[tuple, Callable] = {}
        for l, a in (modes or {}).items():
            l = tuple(int(v) for v in l)
            if len(l) != self.n:
                raise ValueError("mode index has the wrong dimension")
            if l in self.modes:
                raise ValueError(f"duplicate mode {l}")
            self.modes[l] = a

    def __len__(self) -> int:
        return len(self.modes)

    def indices(self) -> np.ndarray:
        return np.array(list(self.modes), dtype=np.int64).reshape(-1, self.n)

    def coefficients(self, x) -> np.ndarray:
        """(modes, points) array of a_l(x)."""
        x = np.atleast_2d(np.asarray(x, float))
        if not self.modes:
            return np.zeros((0, len(x)), dtype=complex)
        return np.stack([np.broadcast_to(a(x), x.shape[:-1]) for a in self.modes.values()])

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        out = np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1], dtype=complex)
        for l, a in self.modes.items():
            out = out + a(x) * np.exp(TWO_PI_I * (y @ np.array(l, float)))
        return out


def dirac_apply(section: FourierSection, omega, N: int, x) -> dict[tuple, np.ndarray]:
    """Mode-wise reduced Dirac operator: l -> (..., n) array of d_i a_l + 2 pi i (Omega^t (l - N x))_i a_l."""
    omega_map, _ = omega_and_t(omega)
    x = np.asarray(x, float)
    W = omega_map(x)
    out = {}
    for l, a in section.modes.items():
        v = np.array(l, float) - N * x
        out[l] = mode_gradient(a, x) + TWO_PI_I * np.einsum("...ij,...j->...i", W, v) * a(x)[..., None]
    return out


def dirac_field(section: FourierSection, omega, N: int, x, y) -> np.ndarray:
    """The components sum_l (D a)_l(x) exp(2 pi i l.y), shape (..., n)."""
    y = np.asarray(y, float)
    parts = dirac_apply(section, omega, N, x)
    out = 0
    for l, w in parts.items():
        out = out + w * np.exp(TWO_PI_I * (y @ np.array(l, float)))[..., None]
    if isinstance(out, int):
        return np.zeros(np.asarray(x).shape, dtype=complex)
    return out


def mode_dirac_polys(mode, omega, N: int) -> list[Poly]:
    """d_i Phi_l + (Omega^t (l - N x))_i for a mode a_l = c exp(2 pi i Phi_l); zero iff D a_l = 0."""
    omega_map, _ = omega_and_t(omega)
    phase = mode.phase_poly()
    l = mode.l if hasattr(mode, "l") else mode.m
    rhs = omega_map.matvec(_bs_vector(omega_map.n, l, N))
    return [phase.diff(i) + rhs[i] for i in range(omega_map.n)]


# transport by the group action --------------------------------------------------

class TransportedMode:
    """a_l for l = N rho_gamma(m/N), obtained from a base coefficient by the lift of gamma.

    a_l(x) = g_gamma b(x'') exp(2 pi i N [gtilde_gamma(x'') - rho_gamma(m/N) . u~_gamma(x'')])
    with x'' = rho_{gamma^{-1}}(x).
    """

    def __init__(self, lift: PrequantumLift, gamma, m: Sequence[int], base: Callable):
        family = lift.family
        self.family = family
        self.gamma = family.element(gamma)
        self.N = lift.N
        self.base = base
        self.m = tuple(int(v) for v in m)
        d = family.float_data(self.gamma)
        self._d = d
        point = np.array([Fraction(v, self.N) for v in self.m], dtype=object)
        self.l = tuple(int(v) for v in exact.as_int_vector(family.act_base(self.gamma, point) * self.N))
        self._l = np.array(self.l, float)
        self.g = lift.g(self.gamma)
        self._gt = g_tilde_poly(family, self.gamma)
        self._gt_grad = [self._gt.diff(k) for k in range(family.n)]

    def pull_back(self, x) -> np.ndarray:
        return (np.asarray(x, float) - self._d.c) @ self._d.A_inv.T

    def _lift_turns(self, xb: np.ndarray) -> np.ndarray:
        return self.N * self._gt(xb).real - (xb @ self._d.U.T + self._d.w) @ self._l

    def __call__(self, x) -> np.ndarray:
        xb = self.pull_back(x)
        return self.g * self.base(xb) * np.exp(TWO_PI_I * self._lift_turns(xb))

    def gradient(self, x) -> np.ndarray:
        xb = self.pull_back(x)
        factor = self.g * np.exp(TWO_PI_I * self._lift_turns(xb))
        lift_grad = self.N * np.stack([g(xb).real for g in self._gt_grad], axis=-1) - self._l @ self._d.U
        inner = mode_gradient(self.base, xb) + TWO_PI_I * lift_grad * self.base(xb)[..., None]
        # chain rule through x'' = A^{-1}(x - c)
        return (inner @ self._d.A_inv) * factor[..., None]

    def phase_poly(self) -> Poly:
        """Exact phase of the mode; requires a polynomial-phase base and rational g turns."""
        if not hasattr(self.base, "phase_poly"):
            raise TypeError("base coefficient has no polynomial phase")
        aff, fib = self.family.evaluate(self.gamma)
        n = self.family.n
        u = [Poly.linear(list(fib.U[k]), fib.w[k]) for k in range(n)]
        local = self.base.phase_poly() + self._gt * self.N - poly_dot([Poly.constant(n, v) for v in self.l], u)
        A_inv = exact.inverse(aff.A)
        return local.compose_affine(A_inv, -(A_inv @ aff.c))


class EquivariantSection:
    """Gamma-equivariant section sum_gamma rho''_gamma o (b e^{2 pi i m.y}) o rho~_{gamma^{-1}}.

    For translation families the group elements contributing at x are those
    with |x - rho_gamma(m/N)| <= radius; otherwise those with
    |rho_{gamma^{-1}}(x) - m/N| <= radius.
    """

    def __init__(self, lift: PrequantumLift, m: Sequence[int], base: Callable, radius: float):
        lift.require()
        self.lift = lift
        self.family = lift.family
        self.N = lift.N
        self.n = self.family.n
        self.m = _check_point(m, self.n)
        self.base = base
        self.radius = float(radius)
        self.translational = _translational(self.family)
        self._modes: dict[tuple, TransportedMode] = {}
        self.point = np.array(self.m, float) / self.N

    @classmethod
    def from_mode(cls, lift: PrequantumLift, l: Sequence[int], coefficient_l: Callable,
                  radius: float) -> "EquivariantSection":
        """Equivariant section whose mode at index l is ``coefficient_l``."""
        gamma, bs = orbit_lookup(lift.family, lift.N, l)
        probe = TransportedMode(lift, gamma, bs.m, lambda x: np.ones(np.asarray(x).shape[:-1]))

        def base(x):
            x = np.asarray(x, float)
            image = x @ probe._d.A.T + probe._d.c
            return coefficient_l(image) / probe(image)

        return cls(lift, bs.m, base, radius)

    def mode(self, gamma) -> TransportedMode:
        gamma = self.family.element(gamma)
        if gamma not in self._modes:
            self._modes[gamma] = TransportedMode(self.lift, gamma, self.m, self.base)
        return self._modes[gamma]

    def group_elements(self, x, radius: float | None = None) -> np.ndarray:
        """Elements contributing somewhere on the point set x."""
        x = np.atleast_2d(np.asarray(x, float))
        radius = self.radius if radius is None else radius
        if self.translational:
            lo, hi = x.min(axis=0), x.max(axis=0)
            center = (lo + hi) / 2
            spread = float(np.linalg.norm(hi - lo) / 2)
            return self.family.orbit_near(self.point, center, radius + spread + 1e-12)
        found: set[tuple] = set()
        for p in np.unique(np.round(x, 12), axis=0):
            for delta in self.family.orbit_near(p, self.point, radius + 1e-12):
                found.add(self.family.inverse(tuple(int(v) for v in delta)))
        return np.array(sorted(found), dtype=np.int64).reshape(-1, self.n)

    def fourier(self, x, radius: float | None = None) -> FourierSection:
        gammas = self.group_elements(x, radius)
        modes = {}
        for g in gammas:
            mode = self.mode(tuple(g))
            modes[mode.l] = mode
        return FourierSection(self.n, modes)

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluate(x, y)

    def evaluate(self, x, y, radius: float | None = None) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        single = x.ndim == 1
        x2, y2 = np.atleast_2d(x), np.atleast_2d(y)
        out = self.fourier(x2, radius)(x2, y2)
        return out[0] if single else out

    def direct_evaluate(self, x, y, radius: float | None = None) -> np.ndarray:
        """Same sum computed literally as rho''_gamma o s o rho~_{gamma^{-1}} at (x, y)."""
        x2 = np.atleast_2d(np.asarray(x, float))
        y2 = np.atleast_2d(np.asarray(y, float))
        out = np.zeros(len(x2), dtype=complex)
        m_vec = np.array(self.m, float)
        for g in self.group_elements(x2, radius):
            g = tuple(int(v) for v in g)
            xb, yb = self.family.act_total(self.family.inverse(g), x2, y2)
            local = self.base(xb) * np.exp(TWO_PI_I * (yb @ m_vec))
            _, _, z = self.lift.apply(g, xb, yb, local)
            out = out + z
        return out[0] if np.asarray(x).ndim == 1 else out


def _translational(family: ActionFamily) -> bool:
    eye = np.eye(family.n, dtype=np.int64)
    return all(np.array_equal(family.evaluate(e)[0].A, eye) for e in family.generators())


class ThetaSection(EquivariantSection):
    """theta_{m/N} (or its frozen-Omega approximation) with certified truncation.

    Every term has modulus exp(-pi N d . Y d) with d = rho_{gamma^{-1}}(x) - m/N
    and Y the imaginary part of Omega^t (frozen at m/N for the approximation).
    For translation families d = x - l/N with l/N on (1/N) Z^n; for
    triangular families d runs over rows of shifted unit lattices. Either way
    the Gaussian lattice tail bound applies with c = lambda_min(Y).

    Parameters
    ----------
    lift : PrequantumLift
    bs : BSPoint or integer vector m
    omega : OmegaMap or AdiabaticOmega
    eps : float
        Target absolute truncation error.
    approximate : bool
        Use the frozen coefficient a~_m instead of the kernel coefficient.
    """

    approximate = False

    def __init__(self, lift: PrequantumLift, bs, omega, eps: float = 1e-12, scale: complex = 1.0,
                 order: Sequence[int] | None = None, approximate: bool | None = None):
        if approximate is not None:
            self.approximate = approximate
        m = bs.m if isinstance(bs, BSPoint) else tuple(int(v) for v in bs)
        if isinstance(bs, BSPoint) and bs.N != lift.N:
            raise ValueError("BS point and lift use different N")
        if not lift.family.in_fundamental(np.array([Fraction(v, lift.N) for v in m], dtype=object)):
            raise ValueError(f"m/N = {m}/{lift.N} is not in the fundamental domain")
        if not float(eps) > 0:
            raise ValueError("eps must be positive")
        self.omega = omega
        self.omega_map, self.t = omega_and_t(omega)
        if self.approximate:
            coef = ApproxCoefficient(omega, m, lift.N, scale)
        else:
            coef = CoefficientFunction(omega, m, lift.N, order, scale)
        self.coefficient = coef
        self.eps = float(eps)
        super().__init__(lift, m, coef, 0.0)
        im0 = (coef.frozen if self.approximate else self.omega_map)(self.point).imag
        self._require_positive(im0)
        self.spacing = 1.0 / self.N if self.translational else 1.0
        self.certified = ((self.approximate or self.omega_map.imag_is_constant())
                          and (self.translational or self.family.triangular_orbit))
        self.c = float(np.linalg.eigvalsh(im0).min())
        self.radius = self._radius_for(self.eps, self.c)
        if not self.certified:
            self._refine_constant(self.point[None, :])

    @staticmethod
    def _require_positive(im: np.ndarray):
        try:
            np.linalg.cholesky((im + np.swapaxes(im, -1, -2)) / 2)
        except np.linalg.LinAlgError as err:
            raise ConvergenceError("Im Omega is not positive definite on the lattice translates") from err

    def _radius_for(self, eps: float, c: float) -> float:
        return truncation_radius(math.pi * self.N * c, self.spacing, eps / abs(self.coefficient.scale), self.n)

    @property
    def trunc_radius(self) -> float:
        return self.radius

    @property
    def tail_bound(self) -> float:
        return abs(self.coefficient.scale) * gaussian_tail_bound(math.pi * self.N * self.c, self.spacing,
                                                                self.radius, self.n)

    def _sample_points(self, gammas: np.ndarray, x: np.ndarray) -> np.ndarray:
        if self.translational:
            return np.array([self.family.act_base(tuple(g), self.point) for g in gammas]).reshape(-1, self.n)
        pts = [self.family.act_base(self.family.inverse(tuple(g)), x) for g in gammas]
        return np.concatenate(pts).reshape(-1, self.n) if pts else self.point[None, :]

    def _refine_constant(self, x: np.ndarray):
        # heuristic constant for non-constant Im Omega: 0.9 of the smallest eigenvalue seen
        for _ in range(8):
            gammas = EquivariantSection.group_elements(self, x, self.radius)
            im = self.omega_map(self._sample_points(gammas, x)).imag
            self._require_positive(im)
            c_new = 0.9 * float(np.linalg.eigvalsh(im).min())
            if c_new >= self.c:
                return
            self.c = c_new
            self.radius = self._radius_for(self.eps, self.c)
        raise ConvergenceError("truncation constant did not stabilise")

    def group_elements(self, x, radius: float | None = None) -> np.ndarray:
        if not self.certified and radius is None:
            self._refine_constant(np.atleast_2d(np.asarray(x, float)))
        return super().group_elements(x, radius)

    def evaluate(self, x, y, eps: float | None = None) -> np.ndarray:
        radius = None if eps is None or eps >= self.eps else self._radius_for(eps, self.c)
        return super().evaluate(x, y, radius)


class ApproxThetaSection(ThetaSection):
    """theta~^t_{m/N}: the same lattice sum built from the frozen coefficient a~_m."""

    approximate = True

    def __init__(self, lift: PrequantumLift, bs, omega, eps: float = 1e-12, scale: complex = 1.0):
        super().__init__(lift, bs, omega, eps, scale, approximate=True)


def theta_eval(section: EquivariantSection, x, y, eps: float | None = None) -> np.ndarray:
    if isinstance(section, ThetaSection):
        return section.evaluate(x, y, eps)
    return section.evaluate(x, y)


# explicit formulas -------------------------------------------------------------

def _gamma_box(n: int, radius: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-radius, radius + 1), repeat=n))


def _box_for(N: int, t: float, c: float, eps: float, n: int, x) -> int:
    R = lattice_truncation_radius(c, N, t, eps, n)
    return int(math.ceil(R + np.max(np.abs(np.asarray(x, float))) + 2))


def closed_form_theta(example_id: str, m: Sequence[int], N: int, t: float = 1.0, eps: float = 1e-13,
                      params: Mapping | None = None, as_printed: bool = False) -> Callable:
    """Independent evaluator built from the explicit exponent formulas of the catalog examples.

    ``example_id`` is one of ``ex48`` (exact theta of the twisted torus, params C, u),
    ``kodaira_thurston`` (frozen-Omega theta) and ``jordan`` (frozen-Omega theta, params
    lambda). ``as_printed`` switches the Kodaira-Thurston formula to its published
    form, which uses gamma_2 where the derivation produces gamma_1.
    Generator phases are trivial.
    """
    params = dict(params or {})
    lam = float(params.get("lambda", 0))
    m = np.array(m, float)
    mN = m / N

    if example_id == "kodaira_thurston":
        def term(g, x, y):
            g1, g2 = g
            d1 = x[:, 0] - g1 - mN[0]
            d2 = x[:, 1] - g2 - mN[1]
            k = g2 if as_printed else g1
            expo = 0.5 * (t * 1j * d1 ** 2 + (mN[0] + t * 1j) * d2 ** 2)
            expo = expo + (x[:, 1] - g2) * (0.5 * g1 * (x[:, 1] + g2) - (mN[1] + g2) * k)
            return np.exp(TWO_PI_I * N * expo) * np.exp(TWO_PI_I * (y @ (m + N * np.array(g, float))))
        n, c = 2, 1.0
    elif example_id == "jordan":

        def term(g, x, y):
            g1, g2 = g
            e1 = x[:, 0] - g1 - g2 * lam * (x[:, 1] - g2) - mN[0]
            e2 = x[:, 1] - g2 - mN[1]
            expo = (t * 1j / 2 * e1 ** 2 - t * 1j * lam * mN[1] * e1 * e2
                    + 0.5 * (mN[1] + t * 1j * (lam ** 2 * mN[1] ** 2 + 1)) * e2 ** 2
                    + 0.5 * g2 * (x[:, 1] - g2) * (x[:, 1] + g2) - (mN[1] + g2) * g2 * (x[:, 1] - g2))
            mode = (m[0] + g2 * lam * m[1] + N * g1) * y[:, 0] + (m[1] + N * g2) * y[:, 1]
            return np.exp(TWO_PI_I * N * expo) * np.exp(TWO_PI_I * mode)
        n = 2
        im0 = np.array([[1.0, -lam * mN[1]], [-lam * mN[1], lam ** 2 * mN[1] ** 2 + 1]])
        c = 0.5 * float(np.linalg.eigvalsh(im0).min())
    elif example_id == "ex48":
        C = exact.to_float(exact.fraction_array(params["C"]))
        u = np.asarray(params["u"], float)
        n = C.shape[0]
        Cinv_T = np.linalg.inv(C).T
        w = np.einsum("ab,ijb->ija", Cinv_T, u)  # w[i, j] = tC^{-1} u_ij

        def term(g, x, y):
            gv = np.array(g, float)
            xb = x - C @ gv
            d = xb - mN
            expo = np.zeros(len(x), dtype=complex)
            for i in range(n):
                for j in range(i + 1, n):
                    vec = np.concatenate([np.broadcast_to(mN[:i], (len(x), i)),
                                          (0.5 * (xb[:, i] + mN[i]))[:, None], xb[:, i + 1:]], axis=1)
                    expo = expo + d[:, i] * d[:, j] * (vec @ w[i, j])
                vec = np.concatenate([np.broadcast_to(mN[:i], (len(x), i)),
                                      ((2 * xb[:, i] + mN[i]) / 3)[:, None], xb[:, i + 1:]], axis=1)
                expo = expo + 0.5 * d[:, i] ** 2 * (vec @ w[i, i])
            Ug = u @ gv
            expo = expo + 0.5 * np.einsum("ki,ij,kj->k", d, Ug + t * 1j * np.eye(n), d)
            expo = expo - 0.5 * mN @ Ug @ mN
            mode = (C @ gv + mN) * N
            return np.exp(TWO_PI_I * N * expo) * np.exp(TWO_PI_I * (y @ mode))
        c = 1.0
        box_scale = float(np.max(np.abs(np.linalg.inv(C)))) * n
    else:
        raise KeyError(f"unknown example {example_id!r}")

    def evaluate(x, y):
        x2 = np.atleast_2d(np.asarray(x, float))
        y2 = np.atleast_2d(np.asarray(y, float))
        K = _box_for(N, t, c, eps, n, x2)
        if example_id == "ex48":
            K = int(math.ceil(K * box_scale))
        if example_id == "jordan":
            # rho_{gamma^{-1}} shears the first coordinate by gamma_2 lambda (x_2 - gamma_2)
            reach = float(np.max(np.abs(x2[:, 1])))
            gammas = []
            for g2 in range(-K, K + 1):
                shift = int(math.ceil(abs(lam * g2) * (reach + abs(g2))))
                gammas.extend((g1, g2) for g1 in range(-K - shift, K + shift + 1))
        else:
            gammas = _gamma_box(n, K)
        out = np.zeros(len(x2), dtype=complex)
        for g in gammas:
            out = out + term(g, x2, y2)
        return out[0] if np.asarray(x).ndim == 1 else out

    return evaluate
