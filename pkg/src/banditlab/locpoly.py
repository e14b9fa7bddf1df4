"""Multi-index arithmetic and local polynomial regression.

The estimator fits, around a center x and bandwidth h, the polynomial
sum_{|s| <= p} xi_s u^s minimizing sum_i (Y_i - theta(X_i - x))^2 K((X_i-x)/h)
with the box kernel K(u) = 1{||u||_inf <= 1}.  The normal equations are
Q xi = V with

    Q[s1, s2] = sum_i (X_i - x)^(s1+s2) K((X_i - x)/h)
    V[s]      = sum_i Y_i (X_i - x)^s  K((X_i - x)/h)

If Q is not numerically positive definite the fit is flagged degenerate and
evaluates to 0 everywhere; callers never see an exception from a bad window.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

# Smallest eigenvalue below RIDGE_TOL times the largest |entry| means a
# non-unique minimizer; scale-free so huge or tiny bandwidths behave alike.
SINGULARITY_TOL = 1e-10


class Sample(NamedTuple):
    """One (covariate, reward) observation with x in [0,1]^d."""

    x: tuple
    y: float


def floor_strict(beta: float) -> int:
    """Largest integer strictly less than beta (so floor_strict(1.0) == 0)."""
    f = int(np.floor(beta))
    return f - 1 if f == beta else f


def enumerate_multi_indices(d: int, p: int) -> list[tuple[int, ...]]:
    """All s in N^d with |s| <= p, lexicographically sorted.

    The count is C(p+d, d); callers size their coefficient vectors off the
    position of each index in this list.
    """
    if d < 1 or p < 0:
        raise ValueError(f"need d >= 1 and p >= 0, got d={d}, p={p}")
    out = [s for s in itertools.product(range(p + 1), repeat=d) if sum(s) <= p]
    out.sort()
    assert len(out) == comb(p + d, d)
    return out


def _as_xy_arrays(data, d_hint=None):
    """Accept a list of Sample/(x, y) pairs or an (X, y) array pair."""
    if isinstance(data, tuple) and len(data) == 2 and hasattr(data[0], "ndim"):
        X = np.asarray(data[0], dtype=float)
        y = np.asarray(data[1], dtype=float)
    else:
        xs, ys = [], []
        for rec in data:
            x, yv = rec
            xs.append(np.atleast_1d(np.asarray(x, dtype=float)))
            ys.append(float(yv))
        if not xs:
            d = d_hint or 1
            return np.empty((0, d)), np.empty(0)
        X = np.stack(xs)
        y = np.asarray(ys)
    if X.ndim == 1:
        X = X[:, None]
    return X, y


@dataclass(frozen=True)
class PolynomialEstimate:
    """A fitted local polynomial: coefficients xi_s around a center.

    When ``degenerate`` is set the estimate is identically zero, matching
    the convention that a non-unique least-squares minimizer yields the
    zero estimator.
    """

    coefficients: dict
    center: tuple
    bandwidth: float
    degree: int
    degenerate: bool

    @property
    def value(self) -> float:
        """Estimate at the center, xi_(0,...,0)."""
        if self.degenerate:
            return 0.0
        d = len(self.center)
        return self.coefficients[(0,) * d]

    def __call__(self, x) -> float:
        if self.degenerate:
            return 0.0
        u = np.atleast_1d(np.asarray(x, dtype=float)) - np.asarray(self.center)
        total = 0.0
        for s, coef in self.coefficients.items():
            total += coef * float(np.prod(u ** np.asarray(s)))
        return total


def fit_local_polynomial(data, center, bandwidth: float, degree: int) -> PolynomialEstimate:
    """Box-kernel local polynomial fit of the given degree.

    Parameters
    ----------
    data : sequence of (x, y) pairs, or an (X, y) array pair
    center : point the polynomial is centered on
    bandwidth : kernel half-width h > 0 (sup-norm window)
    degree : polynomial degree p >= 0

    Returns
    -------
    PolynomialEstimate, possibly with degenerate=True when the in-window
    design does not pin down a unique minimizer.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    center_arr = np.atleast_1d(np.asarray(center, dtype=float))
    d = center_arr.shape[0]
    X, y = _as_xy_arrays(data, d_hint=d)
    indices = enumerate_multi_indices(d, degree)
    m = len(indices)

    dx = X - center_arr
    inside = np.max(np.abs(dx), axis=1) <= bandwidth if len(X) else np.zeros(0, bool)
    dxw = dx[inside]
    yw = y[inside]

    def _degenerate():
        return PolynomialEstimate(
            coefficients={},
            center=tuple(center_arr),
            bandwidth=float(bandwidth),
            degree=degree,
            degenerate=True,
        )

    if len(yw) == 0:
        return _degenerate()

    # Monomials (X_i - x)^s for every index, shape (n_window, m).
    mono = np.empty((len(yw), m))
    for j, s in enumerate(indices):
        mono[:, j] = np.prod(dxw ** np.asarray(s, dtype=float), axis=1)

    Q = mono.T @ mono
    V = mono.T @ yw

    scale = np.max(np.abs(Q))
    if scale == 0.0:
        return _degenerate()
    eigmin = np.linalg.eigvalsh(Q)[0]
    if eigmin <= SINGULARITY_TOL * scale:
        return _degenerate()

    # SPD solve via Cholesky; the eigenvalue gate above makes this safe and
    # keeps the zero-fallback semantics exact (no pseudo-inverse rescue).
    L = np.linalg.cholesky(Q)
    xi = np.linalg.solve(L.T, np.linalg.solve(L, V))

    coefs = {s: float(xi[j]) for j, s in enumerate(indices)}
    return PolynomialEstimate(
        coefficients=coefs,
        center=tuple(center_arr),
        bandwidth=float(bandwidth),
        degree=degree,
        degenerate=False,
    )


def lpr_value(data, center, bandwidth: float, degree: int) -> float:
    """Convenience: the local polynomial estimate at the center point."""
    return fit_local_polynomial(data, center, bandwidth, degree).value
