"""Norms, delta pairings and Dirac residuals of theta sections, and adiabatic sweeps.

Integrals over M are taken over F x T^n with the density C N^n |dx| |dy|.
Fiber integrals are collapsed by Fourier orthogonality unless a direct
quadrature is requested.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .acs import scale_adiabatic
from .prequantum import PrequantumLift
from .quadrature import QuadratureGrid
from .theta import (TWO_PI_I, ApproxThetaSection, EquivariantSection, FourierSection, ThetaSection,
                    dirac_apply, omega_and_t)
from .truncation import lattice_tail_bound, lattice_truncation_radius  # noqa: F401  (re-exported)

DEFAULT_GRID = QuadratureGrid()


class QuadratureInstability(RuntimeError):
    """Doubling the grid moved the value by more than ten times the tolerance."""


def _modes_on_grid(section, x) -> FourierSection:
    if isinstance(section, FourierSection):
        return section
    return section.fourier(x)


def closed_form_lp(section: ThetaSection, p: float) -> float | None:
    """C^{p/2} sqrt(det M) (N / p t)^{n/2} |scale|^p when the Gaussian width is constant, else None."""
    if not (section.approximate or section.omega_map.imag_is_constant()):
        return None
    im = (section.coefficient.frozen if section.approximate else section.omega_map)(section.point).imag
    C = section.lift.hermitian_constant
    n, N = section.n, section.N
    return C ** (p / 2) * abs(section.coefficient.scale) ** p * (N / p) ** (n / 2) / math.sqrt(np.linalg.det(im))


@dataclass
class LpNormResult:
    p: float
    integral: float  # the p-th power of the norm
    norm: float
    closed_form: float | None
    rel_err: float | None
    method: str
    refined: float | None = None
    stable: bool | None = None


def _lp_integral(section, p: float, grid: QuadratureGrid, method: str, family=None, N=None,
                 hermitian_constant=None) -> float:
    family = family or section.family
    N = N or section.N
    if hermitian_constant is not None:
        C = hermitian_constant
    else:
        C = section.lift.hermitian_constant if hasattr(section, "lift") else 1.0
    x, wx = grid.base(family)
    n = family.n
    if method == "modes":
        coeffs = _modes_on_grid(section, x).coefficients(x)
        if not len(coeffs):
            return 0.0
        return float(C * N ** n * np.sum(np.abs(coeffs) ** 2 @ wx))
    if method == "direct":
        modes = _modes_on_grid(section, x)
        if not len(modes):
            return 0.0
        idx = modes.indices()
        size = int(np.max(np.ptp(idx, axis=0))) + 1 if len(idx) else 1
        size = max(grid.fiber_size, 2 * size + 1)
        y, wy = grid.fiber(n, size)
        coeffs = modes.coefficients(x)  # (L, K)
        phases = np.exp(TWO_PI_I * (idx @ y.T))  # (L, Ky)
        values = coeffs.T @ phases  # (K, Ky)
        return float(C ** (p / 2) * N ** n * (wx @ (np.abs(values) ** p) @ wy))
    raise ValueError(f"unknown method {method!r}")


def lp_norm(section, p: float, t: float | None = None, grid: QuadratureGrid | None = None,
            method: str = "auto", check_refinement: bool = False, tol: float = 1e-10,
            family=None, N: int | None = None, hermitian_constant: float | None = None) -> LpNormResult:
    """L^p norm of a section over M.

    ``method="modes"`` integrates C N^n sum_l |a_l|^2 over F, which is exact for
    p = 2 by orthogonality of the fiber modes; ``method="direct"`` integrates
    |s|^p over F x T^n. ``auto`` picks modes for p = 2 and direct for p = 1,
    where summing |a_l| mode by mode only bounds the norm from above. ``t`` is
    optional and only checked against the section's own adiabatic parameter.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if method == "auto":
        method = "modes" if p == 2 else "direct"
    if method == "modes" and p != 2:
        raise ValueError("the mode-wise reduction is only exact for p = 2")
    if t is not None and isinstance(section, ThetaSection) and not math.isclose(t, section.t):
        raise ValueError(f"section was built at t={section.t}, not t={t}")
    grid = grid or DEFAULT_GRID
    value = _lp_integral(section, p, grid, method, family, N, hermitian_constant)
    closed = closed_form_lp(section, p) if isinstance(section, ThetaSection) else None
    rel = abs(value - closed) / closed if closed else None
    result = LpNormResult(p, value, value ** (1.0 / p), closed, rel, method)
    if check_refinement:
        refined = _lp_integral(section, p, grid.doubled(), method, family, N, hermitian_constant)
        result.refined = refined
        result.stable = abs(refined - value) <= 10 * tol * max(1.0, abs(value))
    return result


# delta pairing ----------------------------------------------------------------------

@dataclass
class PairingResult:
    lhs: complex
    rhs: complex
    error: float
    l1_norm: float


def check_equivariant(section, samples: int = 8, seed: int = 0, tol: float = 1e-8) -> bool:
    """Sampled test of rho''_gamma(s(x, y)) == s(rho~_gamma(x, y))."""
    if not isinstance(section, EquivariantSection):
        return False
    rng = np.random.default_rng(seed)
    family = section.family
    x = rng.uniform(0, 1, (samples, family.n))
    y = rng.uniform(0, 1, (samples, family.n))
    values = section(x, y)
    scale = max(1.0, float(np.max(np.abs(values))))
    for g in family.generators() + [family.inverse(e) for e in family.generators()]:
        _, _, z = section.lift.apply(g, x, y, values)
        x2, y2 = family.act_total(g, x, y)
        if np.max(np.abs(z - section(x2, y2))) > tol * scale:
            return False
    return True


def delta_pairing(test: EquivariantSection, section: ThetaSection, t: float | None = None,
                  grid: QuadratureGrid | None = None, check: bool = True) -> PairingResult:
    """Pairing of a test section with theta / ||theta||_{L^1}, against the fiber delta.

    lhs = C N^n / ||theta||_1 * sum_l int_F b_l conj(a_l) |dx| with the L^1 norm
    integrated over F x T^n, rhs = b_m(m/N).
    """
    if t is not None and not math.isclose(t, section.t):
        raise ValueError(f"section was built at t={section.t}, not t={t}")
    if check and not check_equivariant(test):
        raise ValueError("test section is not Gamma-equivariant")
    grid = grid or DEFAULT_GRID
    x, wx = grid.base(section.family)
    theta_modes = section.fourier(x)
    test_modes = test.fourier(x)
    common = [l for l in theta_modes.modes if l in test_modes.modes]
    C = section.lift.hermitian_constant
    n, N = section.n, section.N
    total = 0j
    for l in common:
        total += np.sum(test_modes.modes[l](x) * np.conj(theta_modes.modes[l](x)) * wx)
    l1 = _lp_integral(section, 1, grid, "direct")
    lhs = C * N ** n * total / l1
    point = section.point[None, :]
    at_point = test.fourier(point).modes.get(section.m)
    rhs = complex(at_point(point)[0]) if at_point is not None else 0j
    return PairingResult(complex(lhs), rhs, abs(lhs - rhs), l1)


# Dirac residual --------------------------------------------------------------------------

@dataclass
class DiracResidualResult:
    norm: float
    squared: float
    method: str


def _require_residual_setup(section: ApproxThetaSection):
    if section.n < 2:
        raise ValueError("the residual norm is only meaningful for n >= 2")
    if not isinstance(section, ThetaSection):
        raise TypeError("expected a theta section")


def _sqrt_spd(M: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(M)
    return (V * np.sqrt(w)) @ V.T


def dirac_residual_l2(section: ApproxThetaSection, t: float | None = None, grid: QuadratureGrid | None = None,
                      method: str = "reduced", tau_radius: float = 7.0) -> DiracResidualResult:
    """||D^t theta~^t||_{L^2}.

    ``reduced`` integrates (2 pi)^2 C N^{n+1} / t * ||(Omega^t_{m/N} - Omega^t_x')(m/N - x')||^2_{M_x'}
    against exp(-2 pi N d . Im Omega^t_{m/N} d) over R^n, with d = x' - m/N and
    M = (Im Omega)^{-1} at t = 1. ``direct`` integrates the pointwise norm of the
    Dirac image over F x T^n.
    """
    _require_residual_setup(section)
    if t is not None and not math.isclose(t, section.t):
        raise ValueError(f"section was built at t={section.t}, not t={t}")
    grid = grid or DEFAULT_GRID
    omega_t, t = section.omega_map, section.t
    n, N = section.n, section.N
    C = section.lift.hermitian_constant
    scale2 = abs(section.coefficient.scale) ** 2
    if method == "reduced":
        if not section.approximate:
            raise ValueError("the reduced formula needs the frozen-coefficient section")
        frozen = section.coefficient.frozen
        Y0 = frozen(section.point).imag
        # d = S tau with S = (2 pi N Y0)^{-1/2} turns the weight into exp(-|tau|^2)
        S = np.linalg.inv(_sqrt_spd(2 * np.pi * N * Y0))
        tau, w = grid.box(np.zeros(n), tau_radius)
        d = tau @ S.T
        xp = section.point + d
        diff = frozen(xp) - omega_t(xp)
        v = np.einsum("kij,kj->ki", diff, -d)
        M = t * np.linalg.inv(omega_t(xp).imag)
        normsq = np.einsum("ki,kij,kj->k", v, M, np.conj(v)).real
        integral = np.sum(normsq * np.exp(-np.sum(tau ** 2, axis=1)) * w) * abs(np.linalg.det(S))
        value = (2 * np.pi) ** 2 * C * N ** (n + 1) / t * integral * scale2
        return DiracResidualResult(math.sqrt(max(value, 0.0)), float(value), method)
    if method == "direct":
        x, wx = grid.base(section.family)
        modes = section.fourier(x)
        idx = modes.indices()
        size = max(grid.fiber_size, 2 * (int(np.max(np.ptp(idx, axis=0))) + 1))
        y, wy = grid.fiber(n, size)
        parts = dirac_apply(modes, section.omega, N, x)
        W = np.stack([parts[tuple(l)] for l in idx])  # (L, K, n)
        phases = np.exp(TWO_PI_I * (idx @ y.T))  # (L, Ky)
        M = t * np.linalg.inv(omega_t(x).imag)  # (K, n, n)
        total = 0.0
        for i in range(n):
            Wi = W[:, :, i].T @ phases  # (K, Ky)
            for j in range(n):
                Wj = W[:, :, j].T @ phases
                total += float(np.real(wx @ (M[:, i, j][:, None] * Wi * np.conj(Wj)) @ wy))
        value = N ** n * C / (N * t) * total
        return DiracResidualResult(math.sqrt(max(value, 0.0)), float(value), method)
    raise ValueError(f"unknown method {method!r}")


# sweeps ------------------------------------------------------------------------------------

def fit_loglog_slope(ts: Sequence[float], values: Sequence[float]) -> float:
    ts = np.asarray(ts, float)
    values = np.asarray(values, float)
    if len(ts) < 2 or np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


@dataclass
class SweepSetup:
    """Everything an adiabatic sweep needs apart from the t values."""

    lift: PrequantumLift
    m: tuple
    omega: object  # base OmegaMap
    approximate: bool = False
    eps: float = 1e-12
    grid: QuadratureGrid = field(default_factory=QuadratureGrid)
    quantities: tuple = ("l1_norm", "l2_norm", "pairing_error", "dirac_residual")
    test_base: Callable | None = None
    test_radius: float = 6.0
    tolerance: float = 1e-8


@dataclass
class SweepRecord:
    t: float
    quantity: str
    value: float | None
    closed_form: float | None
    rel_err: float | None
    tolerance: float
    error: str | None = None


@dataclass
class SweepResult:
    records: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)

    CSV_COLUMNS = ("t", "quantity", "value", "closed_form", "rel_err", "tolerance")

    def values(self, quantity: str) -> tuple[list[float], list[float]]:
        rows = [r for r in self.records if r.quantity == quantity and r.value is not None]
        return [r.t for r in rows], [r.value for r in rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for r in self.records:
            writer.writerow([_fmt(r.t), r.quantity, _fmt(r.value), _fmt(r.closed_form),
                             _fmt(r.rel_err), _fmt(r.tolerance)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"records": [asdict(r) for r in self.records], "slopes": self.slopes},
                          indent=2, sort_keys=True)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _sweep_point(setup: SweepSetup, t: float) -> list[SweepRecord]:
    omega_t = scale_adiabatic(setup.omega, t)
    cls = ApproxThetaSection if setup.approximate else ThetaSection
    section = cls(setup.lift, setup.m, omega_t, eps=setup.eps)
    out = []
    for q in setup.quantities:
        try:
            if q in ("l1_norm", "l2_norm"):
                p = 1 if q == "l1_norm" else 2
                r = lp_norm(section, p, grid=setup.grid)
                closed = None if r.closed_form is None else r.closed_form ** (1.0 / p)
                rel = None if closed is None else abs(r.norm - closed) / closed
                out.append(SweepRecord(t, q, r.norm, closed, rel, setup.tolerance))
            elif q == "pairing_error":
                if setup.test_base is None:
                    continue
                test = EquivariantSection(setup.lift, setup.m, setup.test_base, setup.test_radius)
                r = delta_pairing(test, section, grid=setup.grid)
                out.append(SweepRecord(t, q, r.error, None, None, setup.tolerance))
            elif q == "dirac_residual":
                if section.n < 2:
                    continue
                r = dirac_residual_l2(section, grid=setup.grid)
                out.append(SweepRecord(t, q, r.norm, None, None, setup.tolerance))
            else:
                raise ValueError(f"unknown quantity {q!r}")
        except Exception as err:  # recorded per t, the sweep goes on
            out.append(SweepRecord(t, q, None, None, None, setup.tolerance, f"{type(err).__name__}: {err}"))
    return out


def adiabatic_sweep(setup: SweepSetup, t_list: Sequence[float]) -> SweepResult:
    t_list = [float(t) for t in t_list]
    if any(t <= 0 for t in t_list):
        raise ValueError("t values must be positive")
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t values must be strictly ascending")
    result = SweepResult()
    for t in t_list:
        try:
            result.records.extend(_sweep_point(setup, t))
        except Exception as err:
            for q in setup.quantities:
                result.records.append(SweepRecord(t, q, None, None, None, setup.tolerance,
                                                  f"{type(err).__name__}: {err}"))
    for q in setup.quantities:
        ts, vs = result.values(q)
        if len(ts) >= 2:
            result.slopes[q] = fit_loglog_slope(ts, vs)
    return result
