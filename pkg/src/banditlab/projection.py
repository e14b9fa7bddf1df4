"""Population L2 projection of a payoff function onto polynomials.

For a hypercube U, bandwidth h and degree p, the projection of f at a point
x in U is g(x) where g minimizes

    integral_U |f(v) - g(v)|^2 K((x - v)/h) p(v | U) dv

over polynomials of degree at most p, with the box kernel K.  The closed
form is xi = B^{-1} W in the rescaled monomial basis u = (v - x)/h, with

    B[s1, s2] = integral u^(s1+s2) K(u) p(x + h u | U) du
    W[s]      = integral u^s f(x + h u) K(u) p(x + h u | U) du

Both integrals are evaluated by a tensor-product midpoint rule over U; the
node count per axis is part of the call signature so results are exactly
reproducible from the configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedError, InsufficientGridError
from .locpoly import SINGULARITY_TOL, enumerate_multi_indices

DEFAULT_NODES_PER_AXIS = 256


@dataclass(frozen=True)
class Box:
    """Axis-aligned hypercube [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: tuple
    hi: tuple

    @staticmethod
    def make(lo, hi) -> "Box":
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate box lo={lo} hi={hi}")
        return Box(lo, hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    @property
    def side(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def midpoint_nodes(self, n_per_axis: int):
        """Tensor midpoint nodes, shape (n_per_axis^d, d), and cell volume."""
        axes = [
            lo + (hi - lo) * (np.arange(n_per_axis) + 0.5) / n_per_axis
            for lo, hi in zip(self.lo, self.hi)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=1)
        cell_vol = float(np.prod(self.side) / n_per_axis ** self.d)
        return nodes, cell_vol


def _eval_f(f, nodes: np.ndarray) -> np.ndarray:
    """Evaluate f at (n, d) nodes, accepting scalar- or vector-aware f."""
    arg = nodes[:, 0] if nodes.shape[1] == 1 else nodes
    vals = np.asarray(f(arg), dtype=float)
    if vals.shape != (len(nodes),):
        vals = np.array(
            [f(x[0] if len(x) == 1 else x) for x in nodes], dtype=float
        )
    return vals


def _solve_projection(powers, fw, w, x, h, nodes):
    u = (nodes - x) / h
    inside = np.max(np.abs(u), axis=1) <= 1.0
    if not np.any(inside):
        raise IllConditionedError(
            f"kernel window around {x} contains no quadrature mass"
        )
    uu = u[inside]
    weights = w[inside] if w.ndim else np.full(len(uu), float(w))
    m = len(powers)
    mono = np.empty((len(uu), m))
    for j, s in enumerate(powers):
        mono[:, j] = np.prod(uu ** np.asarray(s, dtype=float), axis=1)
    B = (mono * weights[:, None]).T @ mono
    W = (mono * weights[:, None]).T @ fw[inside]
    scale = np.max(np.abs(B))
    if scale == 0.0 or np.linalg.eigvalsh(B)[0] <= SINGULARITY_TOL * scale:
        raise IllConditionedError(
            "projection normal matrix lost positive definiteness; "
            "bandwidth/bin pairing is mis-sized"
        )
    xi = np.linalg.solve(B, W)
    return float(xi[0])


def project_to_polynomial(f, bin_box: Box, degree: int, bandwidth: float,
                          density=None, nodes_per_axis: int = DEFAULT_NODES_PER_AXIS):
    """Pointwise evaluator for the degree-p projection of f over a hypercube.

    Parameters
    ----------
    f : payoff function on the bin (scalar or vectorized)
    bin_box : the hypercube U
    degree : maximum polynomial degree p >= 0
    bandwidth : kernel half-width h > 0
    density : covariate density on the bin (None means uniform); only its
        shape matters, normalization cancels in B^{-1} W
    nodes_per_axis : midpoint-rule resolution, recorded on the returned
        callable as ``quadrature_nodes``

    Returns
    -------
    A function g with g(x) = projection value at x, valid for x in the bin.
    Raises IllConditionedError at call time if B degenerates.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    powers = enumerate_multi_indices(bin_box.d, degree)
    nodes, cell_vol = bin_box.midpoint_nodes(nodes_per_axis)
    fv = _eval_f(f, nodes)
    if density is None:
        w = np.float64(cell_vol)
    else:
        w = _eval_f(density, nodes) * cell_vol
        if np.any(w <= 0):
            raise ValueError("density must be strictly positive on the bin")

    def g(x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        return _solve_projection(powers, fv, w, x_arr, bandwidth, nodes)

    g.quadrature_nodes = nodes_per_axis
    g.degree = degree
    g.bandwidth = float(bandwidth)
    return g


def brute_force_projection(f, bin_box: Box, degree: int, bandwidth: float,
                           density=None, grid_n: int = 10_000):
    """Independent oracle: discrete least squares on a grid_n-point grid.

    Minimizes the same weighted integral as `project_to_polynomial` but as a
    plain least-squares problem over grid samples, with no shared code path
    (numpy lstsq on the raw design).  Used to cross-check the quadrature
    route in tests.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    d = bin_box.d
    n_axis = max(2, int(round(grid_n ** (1.0 / d))))
    powers = enumerate_multi_indices(d, degree)
    nodes, _ = bin_box.midpoint_nodes(n_axis)
    fv = _eval_f(f, nodes)
    dens = np.ones(len(nodes)) if density is None else _eval_f(density, nodes)

    def g(x):
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        u = (nodes - x_arr) / bandwidth
        inside = np.max(np.abs(u), axis=1) <= 1.0
        uu = u[inside]
        if len(uu) < len(powers):
            raise InsufficientGridError(
                f"only {len(uu)} grid points in window, need >= {len(powers)}"
            )
        design = np.empty((len(uu), len(powers)))
        for j, s in enumerate(powers):
            design[:, j] = np.prod(uu ** np.asarray(s, dtype=float), axis=1)
        sqrt_w = np.sqrt(dens[inside])
        A = design * sqrt_w[:, None]
        b = fv[inside] * sqrt_w
        coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
        if rank < len(powers):
            raise InsufficientGridError(
                f"grid design rank {rank} < basis size {len(powers)}"
            )
        # powers is lexicographically sorted, so coef[0] is the constant
        # term, which equals the projection value at x.
        return float(coef[0])

    g.grid_n = grid_n
    return g
