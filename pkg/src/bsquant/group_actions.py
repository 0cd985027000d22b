"""Integral-affine group actions on R^n and their lifts to R^n x T^n.

A group element is an integer vector gamma. Each family supplies, in closed
form, the base action x -> A x + c together with an affine fiber map
u(x) = U x + w, so that the total action is
(x, y) -> (A x + c, A^{-T} y + u(x)) on R^n x T^n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import exact

Element = tuple  # tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AffinePart:
    A: np.ndarray  # integer matrix
    c: np.ndarray  # Fraction vector

    def __post_init__(self):
        det = exact.determinant(self.A)
        if abs(det) != 1:
            raise ValueError(f"A must be unimodular, got det {det}")


@dataclass(frozen=True, eq=False)
class FiberMap:
    U: np.ndarray  # Fraction matrix
    w: np.ndarray  # Fraction vector


@dataclass(frozen=True)
class _FloatData:
    A: np.ndarray
    A_inv: np.ndarray
    c: np.ndarray
    U: np.ndarray
    w: np.ndarray


class ReductionError(RuntimeError):
    """No group element maps a point into the fundamental domain."""


def _as_element(gamma, n: int) -> Element:
    g = tuple(int(v) for v in np.asarray(gamma).reshape(-1))
    if len(g) != n:
        raise ValueError(f"group element {g} does not have dimension {n}")
    if any(Fraction(v) != Fraction(w) for v, w in zip(g, np.asarray(gamma, dtype=object).reshape(-1))):
        raise ValueError(f"group element {gamma} must be integral")
    return g


def _box_candidates(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    ranges = [np.arange(int(np.floor(a)), int(np.ceil(b)) + 1) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1).astype(np.int64)


def translation_orbit(C: np.ndarray) -> Callable:
    """Orbit enumerator for rho_gamma(p) = p + C gamma."""
    Cf = exact.to_float(C)
    Cinv = np.linalg.inv(Cf)
    row_norm = np.linalg.norm(Cinv, axis=1)

    def orbit(point, center, radius):
        s = Cinv @ (np.asarray(center, float) - np.asarray(point, float))
        cand = _box_candidates(s - radius * row_norm - 1e-9, s + radius * row_norm + 1e-9)
        images = np.asarray(point, float) + cand @ Cf.T
        keep = np.linalg.norm(images - np.asarray(center, float), axis=1) <= radius
        return cand[keep]

    return orbit


class ActionFamily:
    """A group Gamma = (Z^n, law) acting on R^n x T^n through closed-form data.

    Parameters
    ----------
    name, params
        Catalog label and the parameters that produced the family.
    n
        Dimension of the base.
    evaluate
        Map ``gamma -> (AffinePart, FiberMap)``.
    law, inverse
        Group law and inversion on integer tuples. Default: vector addition.
    chart, offset
        Fundamental domain ``F = offset + chart [0,1)^n``.
    orbit
        ``orbit(point, center, radius)`` returning all gamma (as rows) with
        ``|rho_gamma(point) - center| <= radius``.
    reducer
        Optional closed form ``x -> gamma`` with ``rho_gamma^{-1}(x)`` in F.
    """

    def __init__(self, name: str, n: int, evaluate: Callable, law: Callable | None = None,
                 inverse: Callable | None = None, chart=None, offset=None, params: dict | None = None,
                 orbit: Callable | None = None, reducer: Callable | None = None,
                 abelian: bool | None = None, triangular_orbit: bool = False):
        self.name = name
        # orbits {rho_delta(x)} split into rows of shifted unit lattices, one coordinate at a time
        self.triangular_orbit = bool(triangular_orbit)
        self.n = int(n)
        self.params = dict(params or {})
        self._evaluate = evaluate
        self._law = law or (lambda a, b: tuple(x + y for x, y in zip(a, b)))
        self._inverse = inverse or (lambda a: tuple(-x for x in a))
        self.chart = exact.fraction_array(chart if chart is not None else np.eye(self.n, dtype=int))
        self.offset = exact.fraction_array(offset if offset is not None else [0] * self.n)
        if exact.determinant(self.chart) == 0:
            raise ValueError("fundamental-domain chart is singular")
        self._chart_inv = exact.inverse(self.chart)
        self._chart_inv_f = exact.to_float(self._chart_inv)
        self._offset_f = exact.to_float(self.offset)
        self._cache: dict[Element, tuple[AffinePart, FiberMap]] = {}
        self._fcache: dict[Element, _FloatData] = {}
        self._reducer = reducer
        self.abelian = abelian if abelian is not None else law is None
        if orbit is None:
            generators = [self.evaluate(e)[0] for e in self.generators()]
            if any(not np.array_equal(g.A, np.eye(self.n, dtype=np.int64)) for g in generators):
                raise ValueError("an orbit enumerator is required when A is not the identity")
            C = np.stack([g.c for g in generators], axis=1)
            orbit = translation_orbit(C)
        self._orbit = orbit

    def __repr__(self) -> str:
        return f"ActionFamily({self.name!r}, n={self.n}, params={self.params})"

    # group structure
    def element(self, gamma) -> Element:
        return _as_element(gamma, self.n)

    def identity(self) -> Element:
        return (0,) * self.n

    def generators(self) -> list[Element]:
        return [tuple(int(i == k) for i in range(self.n)) for k in range(self.n)]

    def compose(self, g1, g2) -> Element:
        return tuple(int(v) for v in self._law(self.element(g1), self.element(g2)))

    def inverse(self, g) -> Element:
        return tuple(int(v) for v in self._inverse(self.element(g)))

    # closed-form data
    def evaluate(self, gamma) -> tuple[AffinePart, FiberMap]:
        g = self.element(gamma)
        if g not in self._cache:
            aff, fib = self._evaluate(g)
            aff = AffinePart(np.asarray(aff.A, dtype=np.int64), exact.fraction_array(aff.c))
            fib = FiberMap(exact.fraction_array(fib.U), exact.fraction_array(fib.w))
            self._cache[g] = (aff, fib)
        return self._cache[g]

    def float_data(self, gamma) -> _FloatData:
        g = self.element(gamma)
        if g not in self._fcache:
            aff, fib = self.evaluate(g)
            A = aff.A.astype(float)
            self._fcache[g] = _FloatData(A, np.linalg.inv(A), exact.to_float(aff.c),
                                         exact.to_float(fib.U), exact.to_float(fib.w))
        return self._fcache[g]

    # actions
    def act_base(self, gamma, x):
        if isinstance(x, np.ndarray) and x.dtype == object or isinstance(x, (list, tuple)) and exact.is_exact_array(x):
            aff, _ = self.evaluate(gamma)
            return aff.A.astype(object) @ exact.fraction_array(x) + aff.c
        d = self.float_data(gamma)
        x = np.asarray(x, dtype=float)
        return x @ d.A.T + d.c

    def fiber_shift(self, gamma, x):
        """The lifted fiber map u_gamma(x) = U x + w (not reduced mod Z^n)."""
        d = self.float_data(gamma)
        return np.asarray(x, dtype=float) @ d.U.T + d.w

    def act_total(self, gamma, x, y):
        d = self.float_data(gamma)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x_new = x @ d.A.T + d.c
        y_new = y @ d.A_inv + x @ d.U.T + d.w  # row-vector form of A^{-T} y
        return x_new, np.mod(y_new, 1.0)

    # fundamental domain
    @property
    def fundamental_volume(self) -> Fraction:
        return abs(exact.determinant(self.chart))

    def chart_coordinates(self, x):
        if isinstance(x, np.ndarray) and x.dtype == object:
            return self._chart_inv @ (x - self.offset)
        return (np.asarray(x, float) - self._offset_f) @ self._chart_inv_f.T

    def in_fundamental(self, x, tol: float = 1e-12) -> bool:
        s = self.chart_coordinates(x)
        if isinstance(s, np.ndarray) and s.dtype == object:
            return all(0 <= v < 1 for v in s)
        return bool(np.all(s >= -tol) and np.all(s < 1))

    def orbit_near(self, point, center, radius: float) -> np.ndarray:
        """All gamma with |rho_gamma(point) - center| <= radius, one per row."""
        return np.asarray(self._orbit(np.asarray(point, float), np.asarray(center, float), float(radius)),
                          dtype=np.int64).reshape(-1, self.n)

    def guess_reduction(self, x) -> Element:
        if self._reducer is not None:
            return self.element(self._reducer(x))
        s = self.chart_coordinates(np.asarray(x, float))
        return self.element(np.floor(s).astype(np.int64))


def compose(family: ActionFamily, g1, g2) -> Element:
    return family.compose(g1, g2)


def act_base(family: ActionFamily, gamma, x):
    return family.act_base(gamma, x)


def act_total(family: ActionFamily, gamma, x, y):
    return family.act_total(gamma, x, y)


def reduce_to_fundamental(family: ActionFamily, x, search_radius: int = 2, tol: float = 1e-12):
    """Return ``(gamma, x0)`` with ``x0`` in F and ``rho_gamma(x0) = x``."""
    exact_input = isinstance(x, np.ndarray) and x.dtype == object
    guess = family.guess_reduction(x)
    offsets = [(0,) * family.n] + [d for d in itertools.product(range(-search_radius, search_radius + 1),
                                                                repeat=family.n) if any(d)]
    for d in offsets:
        gamma = tuple(int(a + b) for a, b in zip(guess, d))
        x0 = family.act_base(family.inverse(gamma), x)
        if exact_input:
            if family.in_fundamental(x0):
                return gamma, x0
            continue
        back = family.act_base(gamma, x0)
        if family.in_fundamental(x0, tol) and np.max(np.abs(back - np.asarray(x, float))) <= 1e-12 * max(1.0, np.max(np.abs(x))):
            return gamma, x0
    raise ReductionError(f"no group element within radius {search_radius} of {guess} maps {x} into F")


@dataclass
class ActionReport:
    passed: bool
    samples: int
    witness: dict | None = None
    failures: list = field(default_factory=list)


def _nearest_integer_distance(v) -> float:
    v = np.asarray(v, float)
    return float(np.max(np.abs(v - np.round(v)))) if v.size else 0.0


def verify_action_axioms(family: ActionFamily, sample_count: int = 100, seed: int = 0,
                         gamma_range: int = 3, x_range: float = 2.0, tol: float = 1e-10) -> ActionReport:
    """Check the action identities on seeded samples (gamma1, gamma2, x)."""
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    n = family.n
    for k in range(sample_count):
        g1 = tuple(int(v) for v in rng.integers(-gamma_range, gamma_range + 1, n))
        g2 = tuple(int(v) for v in rng.integers(-gamma_range, gamma_range + 1, n))
        x = rng.uniform(-x_range, x_range, n)
        g12 = family.compose(g1, g2)
        (a1, f1), (a2, f2), (a12, f12) = (family.evaluate(g) for g in (g1, g2, g12))
        witness = {"gamma1": g1, "gamma2": g2, "x": x.tolist()}
        for g, (aff, fib) in ((g1, (a1, f1)), (g2, (a2, f2)), (g12, (a12, f12))):
            sym = aff.A.T.astype(object) @ fib.U
            if not all(sym[i, j] == sym[j, i] for i in range(n) for j in range(n)):
                return ActionReport(False, k + 1, {**witness, "check": "symmetry of A^T Du", "gamma": g})
        if not np.array_equal(a12.A, a1.A @ a2.A):
            return ActionReport(False, k + 1, {**witness, "check": "A composition"})
        c_expected = a1.A.astype(object) @ a2.c + a1.c
        if not all(u == v for u, v in zip(a12.c, c_expected)):
            return ActionReport(False, k + 1, {**witness, "check": "c composition"})
        d1, d2, d12 = family.float_data(g1), family.float_data(g2), family.float_data(g12)
        rho2 = d2.A @ x + d2.c
        lhs = d12.U @ x + d12.w
        rhs = d1.A_inv.T @ (d2.U @ x + d2.w) + d1.U @ rho2 + d1.w
        if _nearest_integer_distance(lhs - rhs) > tol:
            return ActionReport(False, k + 1, {**witness, "check": "u cocycle mod Z^n",
                                               "residual": (lhs - rhs).tolist()})
    return ActionReport(True, sample_count)


# catalog ------------------------------------------------------------------

def _zero_fiber(n: int) -> FiberMap:
    return FiberMap(exact.fraction_array(np.zeros((n, n), dtype=int)), exact.fraction_array([0] * n))


def flat_torus(C) -> ActionFamily:
    """Translations x -> x + C gamma with trivial fiber map."""
    C = exact.fraction_array(C)
    n = C.shape[0]
    if C.shape != (n, n) or exact.determinant(C) == 0:
        raise ValueError("C must be an invertible square matrix")
    eye = np.eye(n, dtype=np.int64)
    Cinv = exact.inverse(C)

    def evaluate(g):
        return AffinePart(eye, C @ np.array(g, dtype=object)), _zero_fiber(n)

    def reducer(x):
        s = Cinv @ exact.fraction_array(x) if isinstance(x, np.ndarray) and x.dtype == object \
            else exact.to_float(Cinv) @ np.asarray(x, float)
        return exact.floor_vector(s)

    return ActionFamily("flat_torus", n, evaluate, chart=C, params={"C": [[str(v) for v in row] for row in C]},
                        orbit=translation_orbit(C), reducer=reducer)


def twisted_torus(C, u) -> ActionFamily:
    """Translations by C gamma with fiber map x -> [u_ij . gamma]_{ij} x.

    ``u[i][j]`` are integer n-vectors with ``u[i][j] == u[j][i]``; C must be integral.
    """
    C = exact.fraction_array(C)
    n = C.shape[0]
    if C.shape != (n, n) or exact.determinant(C) == 0:
        raise ValueError("C must be an invertible square matrix")
    if not all(v.denominator == 1 for v in C.flat):
        raise ValueError("twisted torus requires an integral C")
    u_arr = exact.fraction_array(u)
    if u_arr.shape != (n, n, n):
        raise ValueError(f"u must have shape ({n}, {n}, {n})")
    if not all(v.denominator == 1 for v in u_arr.flat):
        raise ValueError("u_ij must be integer vectors")
    for i in range(n):
        for j in range(n):
            if any(a != b for a, b in zip(u_arr[i, j], u_arr[j, i])):
                raise ValueError(f"u[{i}][{j}] != u[{j}][{i}]")
    eye = np.eye(n, dtype=np.int64)
    Cinv = exact.inverse(C)

    def evaluate(g):
        gv = np.array(g, dtype=object)
        U = np.array([[sum(u_arr[i, j] * gv) for j in range(n)] for i in range(n)], dtype=object)
        return AffinePart(eye, C @ gv), FiberMap(U, exact.fraction_array([0] * n))

    def reducer(x):
        return exact.floor_vector(exact.to_float(Cinv) @ np.asarray(x, float))

    return ActionFamily("twisted_torus", n, evaluate, chart=C,
                        params={"C": [[str(v) for v in row] for row in C],
                                "u": [[[int(v) for v in u_arr[i, j]] for j in range(n)] for i in range(n)]},
                        orbit=translation_orbit(C), reducer=reducer)


def kodaira_thurston() -> ActionFamily:
    """Gamma = Z^2 acting by x -> x + gamma with fiber map (0, gamma_1 x_2)."""
    eye = np.eye(2, dtype=np.int64)

    def evaluate(g):
        U = exact.fraction_array([[0, 0], [0, g[0]]])
        return AffinePart(eye, exact.fraction_array(g)), FiberMap(U, exact.fraction_array([0, 0]))

    return ActionFamily("kodaira_thurston", 2, evaluate, params={},
                        orbit=translation_orbit(exact.identity(2)), reducer=lambda x: exact.floor_vector(x))


def _unipotent_power(lams: Sequence[int], k: int) -> np.ndarray:
    """J^k for J = I + L with L the superdiagonal of lams (exact, any integer k)."""
    n = len(lams) + 1
    nil = np.zeros((n, n), dtype=object)
    for i, lam in enumerate(lams):
        nil[i, i + 1] = int(lam)
    eye = np.eye(n, dtype=np.int64).astype(object)
    if k >= 0:
        base = eye + nil
    else:
        # L is nilpotent, so J^{-1} = sum_j (-L)^j
        base, term = eye.copy(), eye.copy()
        for _ in range(1, n):
            term = term @ (-nil)
            base = base + term
    out = eye.copy()
    for _ in range(abs(k)):
        out = out @ base
    return out.astype(np.int64)


def jordan_block(lams: Sequence[int]) -> ActionFamily:
    """Non-abelian Gamma = (Z^n, o) with A_gamma = J^{gamma_n}, J unipotent with superdiagonal lams."""
    lams = [int(v) for v in lams]
    if not lams:
        raise ValueError("jordan_block needs n >= 2, i.e. at least one lambda")
    n = len(lams) + 1
    powers: dict[int, np.ndarray] = {}

    def power(k: int) -> np.ndarray:
        if k not in powers:
            powers[k] = _unipotent_power(lams, k)
        return powers[k]

    def evaluate(g):
        U = np.zeros((n, n), dtype=object)
        U[n - 1, n - 1] = g[n - 1]
        return AffinePart(power(g[n - 1]), exact.fraction_array(g)), FiberMap(U, exact.fraction_array([0] * n))

    def law(a, b):
        return tuple(int(v) for v in power(a[n - 1]) @ np.array(b, dtype=np.int64) + np.array(a, dtype=np.int64))

    def inverse(a):
        return tuple(int(v) for v in -(power(-a[n - 1]) @ np.array(a, dtype=np.int64)))

    def orbit(point, center, radius):
        rows = []
        lo_n = int(np.floor(center[-1] - radius - point[-1] - 1e-9))
        hi_n = int(np.ceil(center[-1] + radius - point[-1] + 1e-9))
        for k in range(lo_n, hi_n + 1):
            q = power(k).astype(float) @ point
            head = _box_candidates(center[:-1] - q[:-1] - radius - 1e-9, center[:-1] - q[:-1] + radius + 1e-9)
            cand = np.concatenate([head, np.full((len(head), 1), k, dtype=np.int64)], axis=1)
            images = q + cand
            keep = np.linalg.norm(images - center, axis=1) <= radius
            rows.append(cand[keep])
        return np.concatenate(rows) if rows else np.zeros((0, n), dtype=np.int64)

    def reducer(x):
        # delta with rho_delta(x) in [0,1)^n, then gamma = delta^{-1}
        x = np.asarray(x, float)
        dn = -int(np.floor(x[-1]))
        q = power(dn).astype(float) @ x
        delta = np.append(-np.floor(q[:-1]).astype(np.int64), dn)
        return inverse(tuple(int(v) for v in delta))

    return ActionFamily("jordan_block", n, evaluate, law=law, inverse=inverse,
                        params={"lambdas": lams}, orbit=orbit, reducer=reducer,
                        abelian=all(v == 0 for v in lams) or n == 2, triangular_orbit=True)


def catalog(name: str, params: dict | None = None) -> ActionFamily:
    """Build a catalog family by name."""
    params = dict(params or {})
    if name == "flat_torus":
        C = params.get("C")
        if C is None:
            C = np.eye(int(params.get("n", 1)), dtype=int)
        return flat_torus(C)
    if name == "kodaira_thurston":
        return kodaira_thurston()
    if name == "twisted_torus":
        return twisted_torus(params["C"], params["u"])
    if name == "jordan_block":
        return jordan_block(params["lambdas"])
    raise KeyError(f"unknown family {name!r}")
