"""Compatible complex structures through the symmetric matrix Omega = conj(Z)^{-1}.

Omega(x) is a symmetric matrix of complex polynomials in the base variables
with positive-definite imaginary part. Z = X + iY, the matrices J and g, and
M = Y + X Y^{-1} X = (Im Omega)^{-1} are all derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import exact
from .group_actions import ActionFamily
from .polynomial import GaussianRational, Poly, coerce_coefficient, to_fraction


def _as_scalar_coefficient(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return GaussianRational(v[0], v[1])
    if isinstance(v, str):
        s = v.replace(" ", "").replace("j", "i")
        if "i" in s:
            return GaussianRational.coerce(complex(s.replace("i", "j")))
        return GaussianRational(s)
    return coerce_coefficient(v)


class OmegaMap:
    """Symmetric n x n matrix of polynomials in x_1..x_n."""

    def __init__(self, entries: Sequence[Sequence[Poly]]):
        n = len(entries)
        rows = []
        for i, row in enumerate(entries):
            if len(row) != n:
                raise ValueError("Omega must be square")
            new_row = []
            for p in row:
                if not isinstance(p, Poly):
                    p = Poly.constant(n, _as_scalar_coefficient(p))
                if p.nvars != n:
                    raise ValueError("entries must be polynomials in n variables")
                new_row.append(p)
            rows.append(tuple(new_row))
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"Omega is not symmetric at ({i + 1},{j + 1})")
        self.entries = tuple(rows)
        self.n = n

    @classmethod
    def constant(cls, matrix) -> "OmegaMap":
        rows = [[_as_scalar_coefficient(v) for v in row] for row in matrix]
        n = len(rows)
        return cls([[Poly.constant(n, v) for v in row] for row in rows])

    @classmethod
    def from_upper(cls, n: int, upper: Mapping[tuple, Poly]) -> "OmegaMap":
        ent = [[Poly(n) for _ in range(n)] for _ in range(n)]
        for (i, j), p in upper.items():
            ent[i][j] = p
            ent[j][i] = p
        return cls(ent)

    def __repr__(self) -> str:
        return f"OmegaMap({[list(r) for r in self.entries]})"

    def __eq__(self, other) -> bool:
        return isinstance(other, OmegaMap) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def entry(self, i: int, j: int) -> Poly:
        return self.entries[i][j]

    @property
    def is_exact(self) -> bool:
        return all(p.is_exact for row in self.entries for p in row)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        out = np.empty(x.shape[:-1] + (self.n, self.n), dtype=complex)
        for i in range(self.n):
            for j in range(i, self.n):
                v = self.entries[i][j](x)
                out[..., i, j] = v
                out[..., j, i] = v
        return out

    def map_entries(self, fn) -> "OmegaMap":
        return OmegaMap([[fn(p) for p in row] for row in self.entries])

    def real_entries(self) -> list[list[Poly]]:
        return [[p.real_part() for p in row] for row in self.entries]

    def imag_entries(self) -> list[list[Poly]]:
        return [[p.imag_part() for p in row] for row in self.entries]

    def derivative(self, k: int) -> list[list[Poly]]:
        return [[p.diff(k) for p in row] for row in self.entries]

    def is_constant(self) -> bool:
        return all(p.is_constant() for row in self.entries for p in row)

    def imag_is_constant(self) -> bool:
        return all(p.is_constant() for row in self.imag_entries() for p in row)

    def frozen_at(self, point) -> "OmegaMap":
        """Constant map with the value of Omega at ``point`` (exact for rational points)."""
        vals = []
        for row in self.entries:
            vals.append([p.value_at(list(point)) for p in row])
        return OmegaMap.constant(vals)

    def scaled(self, t) -> "OmegaMap":
        """Re Omega + t i Im Omega, coefficient by coefficient."""
        t = _exact_or_float(t)
        def scale(p: Poly) -> Poly:
            def coef(c):
                if isinstance(c, GaussianRational) and isinstance(t, Fraction):
                    return GaussianRational(c.re, c.im * t)
                c = complex(c)
                return complex(c.real, c.imag * float(t))
            return p.map_coefficients(coef)
        return self.map_entries(scale)

    def matvec(self, vector: Sequence[Poly]) -> list[Poly]:
        out = []
        for row in self.entries:
            acc = Poly(self.n)
            for p, v in zip(row, vector):
                acc = acc + p * v
            out.append(acc)
        return out

    def check_positive_imag(self, points) -> bool:
        pts = np.asarray(points, float).reshape(-1, self.n)
        for P in self(pts).imag:
            try:
                np.linalg.cholesky((P + P.T) / 2)
            except np.linalg.LinAlgError:
                return False
        return True

    def to_json(self) -> dict:
        return {"n": self.n,
                "entries": [{"i": i, "j": j, "monomials": self.entries[i][j].to_json()}
                            for i in range(self.n) for j in range(i, self.n)]}

    @classmethod
    def from_json(cls, data: Mapping) -> "OmegaMap":
        n = int(data["n"])
        upper = {}
        for item in data["entries"]:
            i, j = int(item["i"]), int(item["j"])
            if i > j:
                i, j = j, i
            upper[(i, j)] = Poly.from_json(n, item["monomials"])
        return cls.from_upper(n, upper)


def _exact_or_float(t):
    if isinstance(t, (int, Fraction, np.integer)):
        return Fraction(t)
    if isinstance(t, str):
        return to_fraction(t)
    t = float(t)
    return to_fraction(t) if np.isfinite(t) else t


@dataclass(frozen=True, eq=False)
class AdiabaticOmega:
    base: OmegaMap
    t: float

    def __post_init__(self):
        if not float(self.t) > 0:
            raise ValueError("t must be positive")

    @property
    def omega(self) -> OmegaMap:
        cached = self.__dict__.get("_omega")
        if cached is None:
            cached = self.base if _exact_or_float(self.t) == 1 else self.base.scaled(self.t)
            object.__setattr__(self, "_omega", cached)
        return cached

    @property
    def n(self) -> int:
        return self.base.n

    def __call__(self, x) -> np.ndarray:
        return self.omega(x)


def scale_adiabatic(omega: OmegaMap, t) -> AdiabaticOmega:
    if not float(t) > 0:
        raise ValueError("t must be positive")
    if isinstance(omega, AdiabaticOmega):
        omega = omega.base
    return AdiabaticOmega(omega, t)


def as_omega_map(omega) -> OmegaMap:
    return omega.omega if isinstance(omega, AdiabaticOmega) else omega


# Siegel space ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SiegelPoint:
    """Z = X + iY with X real symmetric and Y symmetric positive definite."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, float))
        Y = np.atleast_2d(np.asarray(self.Y, float))
        if X.shape != Y.shape or X.shape[0] != X.shape[1]:
            raise ValueError("X and Y must be square of equal size")
        if not (np.allclose(X, X.T, atol=1e-12) and np.allclose(Y, Y.T, atol=1e-12)):
            raise ValueError("Z must be symmetric")
        try:
            np.linalg.cholesky(Y)
        except np.linalg.LinAlgError as err:
            raise ValueError("Y must be positive definite") from err
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_Z(cls, Z) -> "SiegelPoint":
        Z = np.atleast_2d(np.asarray(Z, complex))
        return cls(Z.real, Z.imag)

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @property
    def n(self) -> int:
        return self.X.shape[0]


def omega_from_Z(Z) -> np.ndarray:
    """(Y + X Y^{-1} X)^{-1} Z Y^{-1}."""
    if not isinstance(Z, SiegelPoint):
        Z = SiegelPoint.from_Z(Z)
    X, Y = Z.X, Z.Y
    Yinv = np.linalg.inv(Y)
    M = Y + X @ Yinv @ X
    return np.linalg.solve(M, Z.Z @ Yinv)


def z_from_omega(omega_value) -> tuple[SiegelPoint, np.ndarray]:
    """Z = conj(Omega)^{-1} and M = (Im Omega)^{-1} for a matrix value of Omega."""
    W = np.atleast_2d(np.asarray(omega_value, complex))
    try:
        np.linalg.cholesky((W.imag + W.imag.T) / 2)
    except np.linalg.LinAlgError as err:
        raise ValueError("Im Omega must be positive definite") from err
    Z = np.linalg.inv(np.conj(W))
    Z = (Z + Z.T) / 2
    M = np.linalg.inv(W.imag)
    return SiegelPoint.from_Z(Z), (M + M.T) / 2


def j_and_g_matrices(Z) -> tuple[np.ndarray, np.ndarray]:
    """Almost complex structure J and metric g = omega_0(., J .) on R^{2n}."""
    if not isinstance(Z, SiegelPoint):
        Z = SiegelPoint.from_Z(Z)
    X, Y = Z.X, Z.Y
    Yinv = np.linalg.inv(Y)
    M = Y + X @ Yinv @ X
    J = np.block([[X @ Yinv, -M], [Yinv, -Yinv @ X]])
    g = np.block([[Yinv, -Yinv @ X], [-X @ Yinv, M]])
    return J, g


def symplectic_form(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


# integrability and invariance -------------------------------------------------

@dataclass
class IntegrabilityReport:
    integrable: bool
    witness: tuple | None = None  # 1-based (i, j, k)

    def __bool__(self) -> bool:
        return self.integrable


def check_integrability(omega) -> IntegrabilityReport:
    """Exact test of d_i Omega_jk == d_j Omega_ik for all i, j, k."""
    omega = as_omega_map(omega)
    n = omega.n
    derivs = [omega.derivative(k) for k in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                if derivs[i][j][k] != derivs[j][i][k]:
                    return IntegrabilityReport(False, (i + 1, j + 1, k + 1))
    return IntegrabilityReport(True)


def _weighted_vector(n: int, m: Sequence[int], N: int) -> list[Poly]:
    return [Poly.constant(n, int(m[k])) - Poly.variable(n, k) * int(N) for k in range(n)]


def check_bs_commutativity(omega, m: Sequence[int], N: int) -> bool:
    """Exact identity ((d_i Omega)(m - N x))_j == ((d_j Omega)(m - N x))_i in x."""
    omega = as_omega_map(omega)
    n = omega.n
    vec = _weighted_vector(n, m, N)
    images = [OmegaMap(omega.derivative(k)).matvec(vec) for k in range(n)]
    return all(images[i][j] == images[j][i] for i in range(n) for j in range(i + 1, n))


@dataclass
class InvarianceReport:
    passed: bool
    max_residual: float
    witness: dict | None = None

    def __bool__(self) -> bool:
        return self.passed


def check_gamma_invariance(omega, family: ActionFamily, sample_count: int = 50, seed: int = 0,
                           tol: float = 1e-10) -> InvarianceReport:
    """A^T Omega(rho(x)) == Omega(x) A^{-1} + (Du)^T on seeded (gamma, x)."""
    omega = as_omega_map(omega)
    if omega.n != family.n:
        raise ValueError("dimension mismatch between Omega and the family")
    rng = np.random.default_rng(seed)
    gens = family.generators()
    worst = 0.0
    for k in range(len(gens) + sample_count):
        gamma = gens[k] if k < len(gens) else tuple(int(v) for v in rng.integers(-3, 4, family.n))
        x = rng.uniform(-2.0, 2.0, family.n)
        d = family.float_data(gamma)
        lhs = d.A.T @ omega(d.A @ x + d.c)
        rhs = omega(x) @ d.A_inv + d.U.T
        res = float(np.max(np.abs(lhs - rhs)))
        worst = max(worst, res)
        if res >= tol:
            return InvarianceReport(False, res, {"gamma": gamma, "x": x.tolist(), "residual": res})
    return InvarianceReport(True, worst)


# catalog maps ---------------------------------------------------------------

def kodaira_thurston_omega() -> OmegaMap:
    """diag(i, x_1 + i)."""
    x1 = Poly.variable(2, 0)
    i = GaussianRational(0, 1)
    return OmegaMap([[Poly.constant(2, i), Poly(2)], [Poly(2), x1 + i]])


def jordan_omega(lam) -> OmegaMap:
    """[[i, -i lam x2], [-i lam x2, x2 + i (lam^2 x2^2 + 1)]] for the n = 2 Jordan block."""
    lam = to_fraction(lam)
    x2 = Poly.variable(2, 1)
    i = GaussianRational(0, 1)
    off = x2 * GaussianRational(0, -lam)
    return OmegaMap([[Poly.constant(2, i), off],
                     [off, x2 + (x2 * x2 * (lam * lam) + 1) * i]])


def twisted_torus_omega(C, u) -> OmegaMap:
    """[u_ij . C^{-1} x]_{ij} + i I, invariant under the twisted torus action."""
    C = exact.fraction_array(C)
    n = C.shape[0]
    Cinv = exact.inverse(C)
    u_arr = exact.fraction_array(u)
    ent = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            coeffs = u_arr[a, b] @ Cinv  # linear form u_ab . C^{-1} x
            p = Poly.linear(list(coeffs), 0)
            if a == b:
                p = p + GaussianRational(0, 1)
            ent[a][b] = p
    return OmegaMap(ent)


def omega_catalog(name: str, params: Mapping | None = None) -> OmegaMap:
    params = dict(params or {})
    if name == "kodaira_thurston":
        return kodaira_thurston_omega()
    if name == "jordan":
        return jordan_omega(params.get("lambda", 0))
    if name == "twisted_torus":
        return twisted_torus_omega(params["C"], params["u"])
    if name == "identity":
        n = int(params.get("n", 1))
        return OmegaMap.constant([[GaussianRational(0, int(i == j)) for j in range(n)] for i in range(n)])
    raise KeyError(f"unknown Omega {name!r}")
