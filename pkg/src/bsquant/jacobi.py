"""Jacobi theta functions with characteristics and their dictionary with theta sections.

For constant Omega on the flat torus with C = I the linear map
F(x, y) = N(-Omega x + y) is complex linear from (R^2n, J_Z) to C^n, and the
bundle map F~(x, y, w) = (F(x, y), exp(-pi i N x.Omega x) w) carries
theta_{m/N} to theta[m/N; 0](., N Omega).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .acs import OmegaMap, j_and_g_matrices, z_from_omega
from .group_actions import flat_torus
from .prequantum import BSPoint, PrequantumLift
from .theta import ThetaSection, omega_and_t
from .truncation import truncation_radius

STEP_RANGE = (1e-6, 1e-2)


@dataclass(frozen=True)
class Characteristics:
    a: tuple
    b: tuple

    def __post_init__(self):
        a = tuple(Fraction(v) for v in self.a)
        b = tuple(Fraction(v) for v in self.b)
        if len(a) != len(b):
            raise ValueError("characteristics a and b must have the same length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def zero(cls, n: int) -> "Characteristics":
        return cls((0,) * n, (0,) * n)

    @property
    def n(self) -> int:
        return len(self.a)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([float(v) for v in self.a]), np.array([float(v) for v in self.b])


class SiegelModulus:
    """Complex symmetric T with positive definite imaginary part."""

    def __init__(self, T):
        T = np.atleast_2d(np.asarray(T, dtype=complex))
        if T.shape[0] != T.shape[1]:
            raise ValueError("T must be square")
        if not np.allclose(T, T.T, atol=1e-12):
            raise ValueError("T must be symmetric")
        try:
            np.linalg.cholesky(T.imag)
        except np.linalg.LinAlgError as err:
            raise ValueError("Im T is not positive definite") from err
        self.T = T

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def __repr__(self) -> str:
        return f"SiegelModulus({self.T.tolist()})"


def _modulus(T) -> SiegelModulus:
    return T if isinstance(T, SiegelModulus) else SiegelModulus(T)


def _lattice_box(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    axes = [np.arange(math.floor(a), math.ceil(b) + 1) for a, b in zip(lo, hi)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1).astype(float)


def jacobi_theta(chars: Characteristics, z, T, eps: float = 1e-13) -> np.ndarray | complex:
    """sum over gamma in Z^n of exp(pi i v.T v + 2 pi i v.(z + b)), v = gamma + a.

    The modulus of a term is exp(pi Im z.Y^-1 Im z) exp(-pi (v - v0).Y (v - v0))
    with v0 = -Y^-1 Im z, so the lattice is cut to a ball around gamma = v0 - a
    whose certified tail is below eps. ``z`` may carry leading batch axes.
    """
    mod = _modulus(T)
    n = mod.n
    if chars.n != n:
        raise ValueError("characteristics and modulus have different sizes")
    if not float(eps) > 0:
        raise ValueError("eps must be positive")
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    zf = z.reshape(-1, n)
    a, b = chars.arrays()
    Y = mod.T.imag
    Yinv = np.linalg.inv(Y)
    lam = float(np.linalg.eigvalsh(Y).min())
    alpha = math.pi * lam
    centers = -a - zf.imag @ Yinv.T
    envelope = np.einsum("ki,ij,kj->k", zf.imag, Yinv, zf.imag) * math.pi
    radius = np.array([truncation_radius(alpha, 1.0, eps * math.exp(-e), n) for e in envelope])
    gammas = _lattice_box((centers - radius[:, None]).min(axis=0), (centers + radius[:, None]).max(axis=0))
    v = gammas + a
    quad = np.einsum("li,ij,lj->l", v, mod.T, v)
    out = np.empty(len(zf), dtype=complex)
    # chunk over z to keep the (points x lattice) array small
    for start in range(0, len(zf), 256):
        block = zf[start:start + 256]
        phase = math.pi * 1j * quad[None, :] + 2j * math.pi * ((block + b) @ v.T)
        out[start:start + 256] = np.exp(phase).sum(axis=1)
    out = out.reshape(z.shape[:-1])
    return complex(out) if single else out


def shift_factor(chars: Characteristics, m) -> complex:
    """theta(z + m) / theta(z) for integer m."""
    a, _ = chars.arrays()
    return complex(np.exp(2j * math.pi * a @ np.asarray(m, float)))


def quasi_period_factor(chars: Characteristics, z, T, m) -> np.ndarray | complex:
    """theta(z + T m) / theta(z) for integer m."""
    T = _modulus(T).T
    _, b = chars.arrays()
    m = np.asarray(m, float)
    z = np.asarray(z, dtype=complex)
    val = np.exp(-2j * math.pi * b @ m - 1j * math.pi * m @ T @ m - 2j * math.pi * (z @ m))
    return val


# the dictionary F, F~ --------------------------------------------------------------

def _constant_omega(omega) -> np.ndarray:
    if isinstance(omega, (np.ndarray, list, tuple, complex, float, int)):
        return np.atleast_2d(np.asarray(omega, dtype=complex))
    omega_map, _ = omega_and_t(omega)
    if not omega_map.is_constant():
        raise ValueError("the identification with Jacobi theta needs a constant Omega")
    return omega_map(np.zeros(omega_map.n))


def map_F(x, y, N: int, omega) -> np.ndarray:
    W = _constant_omega(omega)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    return N * (y - x @ W.T)


def map_F_tilde(x, y, w, N: int, omega) -> tuple[np.ndarray, np.ndarray]:
    W = _constant_omega(omega)
    x = np.asarray(x, float)
    z = map_F(x, y, N, W)
    quad = np.einsum("...i,ij,...j->...", x, W, x)
    return z, np.exp(-1j * math.pi * N * quad) * np.asarray(w, dtype=complex)


def act_real(gamma, gamma_prime, x, y, w, N: int):
    """Z^2n action on R^2n x C: (x + gamma, y + gamma', exp(2 pi i N gamma.y) w)."""
    gamma = np.asarray(gamma, float)
    gamma_prime = np.asarray(gamma_prime, float)
    y = np.asarray(y, float)
    return x + gamma, y + gamma_prime, np.exp(2j * math.pi * N * (y @ gamma)) * w


def act_complex(gamma, gamma_prime, z, w, N: int, omega):
    """Z^2n action on C^n x C covering z -> z + N(-Omega gamma + gamma')."""
    W = _constant_omega(omega)
    gamma = np.asarray(gamma, float)
    shift = N * (np.asarray(gamma_prime, float) - W @ gamma)
    factor = np.exp(-1j * math.pi * N * gamma @ W @ gamma + 2j * math.pi * (np.asarray(z) @ gamma))
    return z + shift, factor * w


def f_tilde_equivariance_residual(gamma, gamma_prime, x, y, w, N: int, omega) -> float:
    """Largest of |z_left - z_right| and the relative fiber error |w_left - w_right| / |w_right|.

    The fiber coordinate grows like exp(pi N x.Im(Omega) x), so only its
    relative error is meaningful in floating point.
    """
    x2, y2, w2 = act_real(gamma, gamma_prime, x, y, w, N)
    z_left, w_left = map_F_tilde(x2, y2, w2, N, omega)
    z, wz = map_F_tilde(x, y, w, N, omega)
    z_right, w_right = act_complex(gamma, gamma_prime, z, wz, N, omega)
    scale = np.maximum(np.abs(w_right), np.finfo(float).tiny)
    return float(max(np.max(np.abs(z_left - z_right)), np.max(np.abs(w_left - w_right) / scale)))


def complex_linearity_residual(omega, N: int = 1) -> float:
    """max |F(J_Z u) - i F(u)| over the standard basis of R^2n."""
    W = _constant_omega(omega)
    n = W.shape[0]
    point, _ = z_from_omega(W)
    J, _ = j_and_g_matrices(point.Z)
    worst = 0.0
    for k in range(2 * n):
        u = np.zeros(2 * n)
        u[k] = 1.0
        ju = J @ u
        lhs = map_F(ju[:n], ju[n:], N, W)
        rhs = 1j * map_F(u[:n], u[n:], N, W)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def inverse_F(z, N: int, omega) -> tuple[np.ndarray, np.ndarray]:
    W = _constant_omega(omega)
    z = np.asarray(z, dtype=complex)
    x = -(z.imag / N) @ np.linalg.inv(W.imag).T
    y = z.real / N + x @ W.real.T
    return x, y


# checks -------------------------------------------------------------------------------

def jacobi_side(m, N: int, omega, x, y, eps: float = 1e-13) -> np.ndarray:
    """exp(pi i N x.Omega x) theta[m/N; 0](N(-Omega x + y), N Omega)."""
    W = _constant_omega(omega)
    x = np.asarray(x, float)
    chars = Characteristics(tuple(Fraction(int(v), N) for v in m), (0,) * W.shape[0])
    z = map_F(x, y, N, W)
    quad = np.einsum("...i,ij,...j->...", x, W, x)
    return np.exp(1j * math.pi * N * quad) * jacobi_theta(chars, z.reshape(-1, W.shape[0]), N * W, eps).reshape(
        quad.shape)


def relation_check(bs, omega, points, eps: float = 1e-13) -> float:
    """max |theta_{m/N}(x, y) - exp(pi i N x.Omega x) theta[m/N;0](F(x, y), N Omega)|.

    ``bs`` is a BSPoint; the family is the flat torus with C = I and trivial g.
    ``points`` is a pair (x, y) of (k, n) arrays.
    """
    if not isinstance(bs, BSPoint):
        raise TypeError("bs must be a BSPoint")
    W = _constant_omega(omega)
    n = W.shape[0]
    omega_map = OmegaMap.constant(W)
    lift = PrequantumLift(flat_torus(np.eye(n, dtype=int)), bs.N)
    section = ThetaSection(lift, bs, omega_map, eps=eps)
    x, y = (np.asarray(p, float).reshape(-1, n) for p in points)
    lhs = section.evaluate(x, y)
    rhs = jacobi_side(bs.m, bs.N, W, x, y, eps)
    return float(np.max(np.abs(lhs - rhs)))


def holomorphy_check(section, omega, N: int, z_points, step: float = 1e-4) -> float:
    """Central-difference d/dzbar of h(z) = s(F^-1 z) exp(-pi i N x.Omega x).

    ``section`` is any callable s(x, y). Returns the max modulus over points
    and coordinates; for a holomorphic h it is O(step^2).
    """
    if not STEP_RANGE[0] <= step <= STEP_RANGE[1]:
        raise ValueError(f"step must lie in [{STEP_RANGE[0]}, {STEP_RANGE[1]}]")
    W = _constant_omega(omega)
    n = W.shape[0]
    z_points = np.asarray(z_points, dtype=complex).reshape(-1, n)

    def h(z):
        x, y = inverse_F(z, N, W)
        quad = np.einsum("...i,ij,...j->...", x, W, x)
        return np.asarray(section(x, y)) * np.exp(-1j * math.pi * N * quad)

    worst = 0.0
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        d_re = (h(z_points + e) - h(z_points - e)) / (2 * step)
        d_im = (h(z_points + 1j * e) - h(z_points - 1j * e)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(0.5 * (d_re + 1j * d_im)))))
    return worst


def bs_points_unit_cube(n: int, N: int) -> list[BSPoint]:
    grids = np.meshgrid(*[np.arange(N)] * n, indexing="ij")
    rows = np.stack([g.ravel() for g in grids], axis=-1)
    return [BSPoint(tuple(int(v) for v in r), N) for r in rows]


def seeded_points(n: int, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, (count, n)), rng.uniform(0, 1, (count, n))


__all__ = [
    "Characteristics", "SiegelModulus", "jacobi_theta", "shift_factor", "quasi_period_factor",
    "map_F", "map_F_tilde", "inverse_F", "act_real", "act_complex", "f_tilde_equivariance_residual",
    "complex_linearity_residual", "jacobi_side", "relation_check", "holomorphy_check",
    "bs_points_unit_cube", "seeded_points",
]
