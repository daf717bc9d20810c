"""Least-squares polynomial fits with R^2, for the behavior curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class FitResult:
    """Polynomial fit in ascending order: coefficients[k] multiplies x^k."""

    coefficients: tuple[float, ...]
    r_squared: float

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc


def fit_polynomial(values: Sequence[float], degree: int,
                   x: Optional[Sequence[float]] = None) -> FitResult:
    """Least-squares fit of ``values`` against ``x`` (defaults to 1..n).

    A constant series gets the exact answer (intercept, zeros) rather than
    a rank-deficient solve; R^2 is defined as 1 for any perfect fit. The
    fit is performed on a scaled domain for conditioning and converted
    back, so exact polynomial data is recovered to near machine precision.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1:
        raise ValueError("values must be one-dimensional")
    n = y.size
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if n <= degree:
        raise ValueError(f"need more than {degree} points for a degree-{degree} fit")
    xs = np.arange(1, n + 1, dtype=float) if x is None else np.asarray(x, dtype=float)
    if xs.shape != y.shape:
        raise ValueError("x and values must have the same length")

    if np.all(y == y[0]):
        coeffs = (float(y[0]),) + (0.0,) * degree
        return FitResult(coeffs, 1.0)

    series = np.polynomial.Polynomial.fit(xs, y, degree)
    coeffs = series.convert().coef
    if coeffs.size < degree + 1:
        coeffs = np.pad(coeffs, (0, degree + 1 - coeffs.size))
    predicted = series(xs)
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(tuple(float(c) for c in coeffs), r_squared)
