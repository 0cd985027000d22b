"""Exact rational vectors and matrices stored as numpy object arrays of Fractions."""

from __future__ import annotations

from fractions import Fraction
import math

import numpy as np

from .polynomial import to_fraction


def fraction_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = to_fraction(arr[idx])
    return out


def identity(n: int) -> np.ndarray:
    return fraction_array(np.eye(n, dtype=int))


def to_float(arr) -> np.ndarray:
    return np.asarray(arr, dtype=object).astype(float)


def is_exact_array(arr) -> bool:
    arr = np.asarray(arr)
    if arr.dtype != object:
        return np.issubdtype(arr.dtype, np.integer)
    return all(isinstance(v, (Fraction, int)) for v in arr.flat)


def determinant(matrix) -> Fraction:
    m = [list(row) for row in fraction_array(matrix)]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                for k in range(col, n):
                    m[r][k] -= f * m[col][k]
    return det


def inverse(matrix) -> np.ndarray:
    m = [list(row) for row in fraction_array(matrix)]
    n = len(m)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise np.linalg.LinAlgError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return np.array([row[n:] for row in aug], dtype=object).reshape(n, n)


def floor_vector(v) -> np.ndarray:
    return np.array([math.floor(x) for x in v], dtype=np.int64)


def is_integer_vector(v) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


def as_int_vector(v) -> np.ndarray:
    if not is_integer_vector(v):
        raise ValueError(f"vector {list(v)} is not integral")
    return np.array([int(Fraction(x)) for x in v], dtype=np.int64)
