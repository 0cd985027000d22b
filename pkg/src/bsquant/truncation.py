"""Certified tail bounds for Gaussian sums over shifted lattices.

For points p in (h Z + s)^n and f(p) = exp(-alpha |p|^2) the sum over
|p| > R is bounded, uniformly in the shift s, by

    n * T1(R / sqrt(n)) * S1^(n-1)

where T1(r) bounds the one-dimensional tail beyond r and S1 bounds the full
one-dimensional sum. Both follow from comparing a monotone summand with its
integral, one spacing at a time.
"""

from __future__ import annotations

import math


def _one_dim_tail(alpha: float, spacing: float, r: float) -> float:
    # on each side: first point past r, then the integral comparison for the rest
    e = math.exp(-alpha * r * r)
    return 2.0 * e + math.sqrt(math.pi / alpha) * math.erfc(math.sqrt(alpha) * r) / spacing


def _one_dim_total(alpha: float, spacing: float) -> float:
    return 1.0 + math.sqrt(math.pi / alpha) / spacing


def gaussian_tail_bound(alpha: float, spacing: float, radius: float, n: int = 1) -> float:
    """Upper bound for sum_{p in (spacing Z + s)^n, |p| > radius} exp(-alpha |p|^2)."""
    if alpha <= 0 or spacing <= 0:
        raise ValueError("alpha and spacing must be positive")
    if radius <= 0:
        return math.inf
    r = radius / math.sqrt(n)
    return n * _one_dim_tail(alpha, spacing, r) * _one_dim_total(alpha, spacing) ** (n - 1)


def truncation_radius(alpha: float, spacing: float, eps: float, n: int = 1) -> float:
    """Smallest radius (to 1e-9 relative) whose certified tail is below eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if alpha <= 0 or spacing <= 0:
        raise ValueError("alpha and spacing must be positive")
    eps = max(eps, 1e-300)
    lo, hi = 0.0, 1.0
    while gaussian_tail_bound(alpha, spacing, hi, n) >= eps:
        hi *= 2.0
        if hi > 1e8:
            raise ValueError("no finite truncation radius reaches the requested eps")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gaussian_tail_bound(alpha, spacing, mid, n) < eps:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


def lattice_truncation_radius(c: float, N: int, t: float, eps: float, n: int = 1) -> float:
    """Radius R in base units such that, for every x in R^n,

        sum_{l in Z^n, |x - l/N| > R} exp(-c N pi t |x - l/N|^2) < eps.
    """
    if not (c > 0 and N > 0 and t > 0):
        raise ValueError("c, N and t must be positive")
    return truncation_radius(math.pi * c * N * t, 1.0 / N, eps, n)


def lattice_tail_bound(c: float, N: int, t: float, radius: float, n: int = 1) -> float:
    return gaussian_tail_bound(math.pi * c * N * t, 1.0 / N, radius, n)
