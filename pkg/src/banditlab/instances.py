"""Problem instances: payoff generators, property verifiers, exponents.

Generators return `ProblemInstance` values whose payoff callables are pure
and vectorized (d = 1 payoffs accept arrays of points; d > 1 payoffs accept
(n, d) arrays).  Verifiers grade declared smoothness / margin /
self-similarity constants on dense grids and return `PropertyReport`s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateBumpsError, InvalidGapError, InvalidRegimeError
from .locpoly import floor_strict
from .partition import qadic_boxes
from .projection import project_to_polynomial

GAUSSIAN_SIGMA_DEFAULT = 0.05


@dataclass(frozen=True)
class ProblemInstance:
    """Two-armed contextual bandit instance on [0,1]^d.

    noise is ("gaussian", sigma) or ("bernoulli",); covariates are uniform
    (density bounds rho = (1, 1)).  meta carries declared constants
    (beta, L, alpha, C0, self-similarity b / l0, ...) where known.
    """

    name: str
    d: int
    f1: object
    f2: object
    noise: tuple
    meta: dict = field(default_factory=dict)
    rho: tuple = (1.0, 1.0)

    def payoff(self, arm: int, x):
        f = self.f1 if arm == 1 else self.f2
        return f(x)

    def payoffs(self, x):
        """Stacked payoffs, shape (n, 2)."""
        return np.stack([np.asarray(self.f1(x), dtype=float),
                         np.asarray(self.f2(x), dtype=float)], axis=-1)


@dataclass(frozen=True)
class PropertyReport:
    """Outcome of a grid-based property check.

    holds is margin_of_violation >= 0; witness records the worst grid
    configuration and the measured value there.
    """

    holds: bool
    witness: dict
    margin_of_violation: float


# ---------------------------------------------------------------------------
# bump primitives


def bump(x, beta: float):
    """Tent-power bump (1 - |x|)^beta on |x| <= 1, zero outside."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    inside = np.abs(xa) <= 1.0
    out = np.zeros_like(xa)
    out[inside] = (1.0 - np.abs(xa[inside])) ** beta
    return float(out[0]) if scalar else out


def _norms(points, d):
    """Sup-norms for a batch of points of dimension d."""
    p = np.asarray(points, dtype=float)
    if d == 1:
        return np.abs(p).reshape(-1)
    return np.max(np.abs(p.reshape(-1, d)), axis=1)


def psi_tilde(x, kappa: float, d: int = 1):
    """Inner bump |1 - ||x||_inf|^kappa on ||x||_inf <= 1, zero outside."""
    n = _norms(x, d)
    out = np.zeros_like(n)
    inside = n <= 1.0
    out[inside] = np.abs(1.0 - n[inside]) ** kappa
    return out


def psi_hat(x, kappa: float, d: int = 1):
    """Signed bump: positive core, negative collar, -1 far field."""
    n = _norms(x, d)
    out = np.full_like(n, -1.0)
    mid = (n > 1.0) & (n <= 2.0)
    core = n <= 1.0
    out[mid] = -np.abs(n[mid] - 1.0) ** kappa
    out[core] = np.abs(1.0 - n[core]) ** kappa
    return out


# ---------------------------------------------------------------------------
# Setting I / II generators (one-dimensional experiment payoffs)


def _settings_payoffs(beta, L1, C, M, m, sigma, name, alpha, extra_meta):
    """Shared left branch plus the oscillating right branch."""
    amp = C * (2.0 * M) ** (-beta)
    a = (np.arange(1, m + 1) + 0.5) / M
    signs = (-1.0) ** np.arange(1, m + 1)
    half = 0.5 * (1.0 + L1 * 0.5 ** beta)

    def left(x):
        return half - 0.5 * L1 * x ** beta

    def right_osc(x):
        y = 2.0 - 2.0 * x
        total = np.zeros_like(y)
        for aj, sj in zip(a, signs):
            total += sj * bump(2.0 * M * (y - aj), beta)
        return 0.5 + amp * total

    def f1(x):
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        lo = xa <= 0.5
        out = np.empty_like(xa)
        out[lo] = left(xa[lo])
        out[~lo] = right_osc(xa[~lo])
        return float(out[0]) if scalar else out

    def f2(x):
        scalar = np.ndim(x) == 0
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        lo = xa <= 0.5
        out = np.empty_like(xa)
        out[lo] = left(xa[lo])
        out[~lo] = 0.5
        return float(out[0]) if scalar else out

    # Margin constant: within each bump the mass where 0 < gap <= delta is
    # (delta/amp)^(1/beta) of the bump width; maximized at delta = amp.
    bump_mass = m / (2.0 * M)
    C0 = bump_mass * amp ** (-alpha)
    # Holder constant: adjacent opposite-sign bumps can double the local
    # variation (2^(1+beta) C in x units) and gluing the two halves at 1/2
    # costs another 2^(1-beta).
    L_decl = 2.0 ** (1.0 - beta) * max(L1, 2.0 ** (1.0 + beta) * C)
    meta = {
        "beta": beta, "L": L_decl, "alpha": alpha,
        "C0": C0, "M": M, "m": m, "amplitude": amp, "bump_centers": a,
        "sigma": sigma,
    }
    meta.update(extra_meta)
    return ProblemInstance(
        name=name, d=1, f1=f1, f2=f2, noise=("gaussian", sigma), meta=meta,
    )


def _capped_bump_count(M: float, alpha: float, beta: float) -> int:
    # Bumps j with (j + 1)/M <= 1 keep their support inside (1/2, 1), which
    # is what keeps f1 continuous at 1/2; the nominal count M^(1-alpha*beta)
    # can exceed that by one for alpha near 0.
    m = math.floor(M ** (1.0 - alpha * beta))
    m_fit = math.floor(M - 1.0)
    return min(m, m_fit)


def make_setting_one(beta: float, T: int, overrides: dict | None = None) -> ProblemInstance:
    """Rough-payoff experiment instance (misspecification from below).

    M = (1/16) floor((1/(2 c0)) (2 ln 2 / T)^(-tau/(tau+1)))^(1/beta) with
    tau = 0.8, then m = floor(M^(1 - alpha beta)) alternating bumps of
    half-width 1/(4M) on the right half, Gaussian rewards (sigma = 0.05).
    """
    if not (0 < beta <= 1):
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if T < 1000:
        raise ValueError(f"horizon too short for the construction, T={T}")
    ov = dict(overrides or {})
    tau = ov.get("tau", 0.8)
    L1 = ov.get("L1", 1.0)
    C = ov.get("C", 1.0)
    alpha = ov.get("alpha", 0.01)
    c0 = ov.get("c0", 2.0)
    sigma = ov.get("sigma", GAUSSIAN_SIGMA_DEFAULT)
    if "M" in ov:
        M = float(ov["M"])
    else:
        inner = math.floor((1.0 / (2.0 * c0))
                           * (2.0 * math.log(2.0) / T) ** (-tau / (tau + 1.0)))
        M = inner ** (1.0 / beta) / 16.0
    m = int(ov.get("m", _capped_bump_count(M, alpha, beta)))
    if m < 1:
        raise DegenerateBumpsError(f"bump count m={m} < 1 for M={M:.4g}")
    return _settings_payoffs(beta, L1, C, M, m, sigma, "setting1", alpha,
                             {"tau": tau, "C": C, "L1": L1, "c0": c0})


def make_setting_two(beta: float, T: int, overrides: dict | None = None) -> ProblemInstance:
    """Smooth-payoff experiment instance (misspecification from above).

    M = 2^ceil(log2(T / (2 ln 2)) / (tau + 1)) / 4 with tau = 0.6, margin
    exponent alpha = 1/beta, amplitude factor C = 50.
    """
    if not (0 < beta <= 1):
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if T < 1000:
        raise ValueError(f"horizon too short for the construction, T={T}")
    ov = dict(overrides or {})
    tau = ov.get("tau", 0.6)
    L1 = ov.get("L1", 1.0)
    C = ov.get("C", 50.0)
    alpha = ov.get("alpha", 1.0 / beta)
    sigma = ov.get("sigma", GAUSSIAN_SIGMA_DEFAULT)
    if "M" in ov:
        M = float(ov["M"])
    else:
        k = math.ceil(math.log2(T / (2.0 * math.log(2.0))) / (tau + 1.0))
        M = 2.0 ** k / 4.0
    m = int(ov.get("m", _capped_bump_count(M, alpha, beta)))
    if m < 1:
        raise DegenerateBumpsError(f"bump count m={m} < 1 for M={M:.4g}")
    return _settings_payoffs(beta, L1, C, M, m, sigma, "setting2", alpha,
                             {"tau": tau, "C": C, "L1": L1})


def make_power_payoff(beta: float, delta: float,
                      noise: tuple | None = None) -> ProblemInstance:
    """Self-similar power payoff: f1 = x^beta capped at delta, f2 = 1/2.

    Self-similar with b = 1/(beta+1) and l0 = -(1/beta) log2(delta): on the
    leftmost q-adic cell the degree-0 projection misses f1(0) = 0 by exactly
    q^(-l beta)/(beta+1) once the cell sits inside the power region.
    """
    if not (0 < beta < 1):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    if not (0 < delta <= 1):
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    x_cap = delta ** (1.0 / beta)

    def f1(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= x_cap, x ** beta, delta)

    def f2(x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, 0.5)

    meta = {
        "beta": beta, "L": 1.0, "delta": delta,
        "b": 1.0 / (beta + 1.0),
        "l0": -math.log2(delta) / beta,
        "alpha": 1.0 / beta,
    }
    return ProblemInstance(
        name="power", d=1, f1=f1, f2=f2,
        noise=noise or ("gaussian", GAUSSIAN_SIGMA_DEFAULT), meta=meta,
    )


# ---------------------------------------------------------------------------
# adversarial lower-bound families


def make_lower_bound_family(beta: float, gamma: float, alpha: float,
                            Delta: float, variant: str, d: int = 1,
                            C_phi: float = 1.0) -> list:
    """Nominal instance plus alternatives differing on one region each.

    variant "at-most-lipschitz": nominal has a downward gamma-smooth bump
    near the origin; alternative m adds an upward beta-smooth bump on the
    m-th cell H_m of the nominal bump's support.  variant
    "at-least-lipschitz": linear crossing payoffs (beta must be 1) plus one
    triangular bump on [1/2 - Delta, 1/2].  Rewards are Bernoulli.
    """
    if Delta > 0.25 or Delta <= 0:
        raise InvalidGapError(f"need 0 < Delta <= 1/4, got {Delta}")
    if C_phi * Delta > 0.25:
        raise InvalidGapError("C_phi * Delta must stay <= 1/4")

    def _half(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.reshape(-1, d).shape[0] if d > 1 else x.shape, 0.5)

    if variant == "at-most-lipschitz":
        if not (0 < beta < gamma <= 1):
            raise InvalidRegimeError(
                f"at-most-lipschitz needs 0 < beta < gamma <= 1, got {beta}, {gamma}")
        M = math.floor(Delta ** (alpha - d / beta)) if d == 1 else \
            math.ceil(Delta ** (alpha - d / beta))
        if M < 1:
            raise InvalidGapError(f"alternative count M={M} < 1")
        side0 = 2.0 * Delta ** (alpha / d)
        a0 = np.full(d, Delta ** (alpha / d))

        def phi0(x):
            pts = np.asarray(x, dtype=float).reshape(-1, d)
            arg = (pts - a0) / Delta ** (alpha / d)
            cap = np.minimum(Delta, Delta ** (alpha * gamma / d)
                             * psi_tilde(arg, gamma, d))
            out = 0.5 - C_phi * cap
            return out if out.shape[0] > 1 or np.ndim(x) else float(out[0])

        meta0 = {
            "beta": gamma, "L": C_phi * 2.0 ** (2.0 + 2.0 * gamma),
            "alpha": alpha, "C0": 2.0 ** d * 3.0 * d * C_phi ** (-alpha),
            "Delta": Delta, "M": M, "variant": variant, "member": 0,
        }
        out = [ProblemInstance("lower_bound", d, phi0, _half,
                               ("bernoulli",), meta0)]
        per_axis = M if d == 1 else math.ceil(M ** (1.0 / d))
        cell_side = side0 / per_axis
        l_m = cell_side / 4.0
        cells = [np.array(idx) for idx in np.ndindex(*([per_axis] * d))][:M]
        for member, idx in enumerate(cells, start=1):
            a_m = (idx + 0.5) * cell_side

            def phi_m(x, a_m=a_m):
                pts = np.asarray(x, dtype=float).reshape(-1, d)
                bump_val = 0.5 + C_phi * Delta * psi_hat(
                    2.0 / l_m * (pts - a_m), beta, d)
                base = np.asarray(phi0(pts), dtype=float).reshape(-1)
                out_v = np.maximum(base, bump_val)
                return out_v if out_v.shape[0] > 1 or np.ndim(x) else float(out_v[0])

            meta_m = dict(meta0)
            meta_m.update({"beta": beta,
                           "L": C_phi * 2.0 ** (2.0 + 2.0 * beta),
                           "member": member, "bump_center": tuple(a_m),
                           "cell_side": cell_side})
            out.append(ProblemInstance("lower_bound", d, phi_m, _half,
                                       ("bernoulli",), meta_m))
        return out

    if variant == "at-least-lipschitz":
        if beta != 1:
            raise InvalidRegimeError(
                f"at-least-lipschitz alternative is 1-smooth, got beta={beta}")
        if gamma <= 1:
            raise InvalidRegimeError(f"need gamma > 1, got {gamma}")

        def phi0(x):
            pts = np.asarray(x, dtype=float).reshape(-1, d)
            out = 0.5 - C_phi * (0.5 - pts[:, 0])
            return out if out.shape[0] > 1 or np.ndim(x) else float(out[0])

        a0_1 = (1.0 - Delta) / 2.0

        def phi1(x):
            pts = np.asarray(x, dtype=float).reshape(-1, d)
            arg = 2.0 / Delta * (pts[:, 0] - a0_1)
            tri = np.where(np.abs(arg) <= 1.0, 1.0 - np.abs(arg), 0.0)
            out = 0.5 - C_phi * (0.5 - pts[:, 0]) + 2.0 * C_phi * Delta * tri
            return out if out.shape[0] > 1 or np.ndim(x) else float(out[0])

        meta0 = {"beta": gamma, "L": C_phi * 2.0 ** (2.0 * gamma),
                 "alpha": alpha, "C0": 2.5 / C_phi, "Delta": Delta,
                 "variant": variant, "member": 0}
        meta1 = dict(meta0)
        meta1.update({"beta": 1.0, "member": 1,
                      "bump_interval": (0.5 - Delta, 0.5)})
        return [
            ProblemInstance("lower_bound", d, phi0, _half, ("bernoulli",), meta0),
            ProblemInstance("lower_bound", d, phi1, _half, ("bernoulli",), meta1),
        ]

    raise InvalidRegimeError(f"unknown variant {variant!r}")


def make_example1_family(beta: float, tilde_beta: float, T: int, part: int,
                         L: float = 1.0, c0: float = 2.0, mu: float = 0.5,
                         d: int = 1) -> ProblemInstance:
    """Misspecified-ABSE analysis payoffs (bump fields around 1/2).

    part 1: all-positive bump field at the first m cell centers of an
    M-per-axis grid; part 2: alternating field along the first axis.
    Bernoulli rewards.
    """
    if d != 1:
        raise NotImplementedError("analysis family is generated for d = 1")
    C = min(2.0 ** (beta - 1.0) * L, 0.25)
    if part == 1:
        M_raw = (0.5 / c0) * (2.0 * math.log(2.0) / T) ** (-tilde_beta / (2 * tilde_beta + d))
        M = max(1, round(math.floor(M_raw) ** (1.0 / beta)))
        alpha = 1.0 / beta
        m = max(1, math.ceil(mu * M ** (d - alpha * beta)))
        centers = (np.arange(m) + 0.5) / M

        def f1(x):
            x = np.asarray(x, dtype=float)
            total = np.zeros_like(x)
            for aj in centers:
                total += bump(M * (x - aj), beta)
            return 0.5 + C * M ** (-beta) * total
    elif part == 2:
        k = math.ceil(math.log2(T / (2.0 * math.log(2.0))) / (2 * tilde_beta + 1))
        M = 2 ** k
        alpha = 1.0 / beta
        m = min(M - 2, 2 * math.ceil(mu * M ** (1 - alpha * beta)))
        centers = (np.arange(1, m + 1) + 0.5) / M
        signs = (-1.0) ** np.arange(1, m + 1)

        def f1(x):
            x = np.asarray(x, dtype=float)
            total = np.zeros_like(x)
            for aj, sj in zip(centers, signs):
                total += sj * bump(M * (x - aj), beta)
            return 0.5 + C * M ** (-beta) * total
    else:
        raise ValueError(f"part must be 1 or 2, got {part}")

    def f2(x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, 0.5)

    meta = {"beta": beta, "L": L, "alpha": alpha, "M": M, "m": m, "C": C,
            "part": part, "tilde_beta": tilde_beta}
    return ProblemInstance("example1", 1, f1, f2, ("bernoulli",), meta)


def make_instance(spec: dict, T: int) -> ProblemInstance:
    """Build an instance from a declarative spec (CLI / worker entry point).

    Recognized kinds: setting1, setting2, power, lower_bound, example1.
    """
    spec = dict(spec)
    kind = spec.pop("kind")
    beta = float(spec.pop("beta"))
    if kind == "setting1":
        return make_setting_one(beta, T, overrides=spec.pop("overrides", None))
    if kind == "setting2":
        return make_setting_two(beta, T, overrides=spec.pop("overrides", None))
    if kind == "power":
        noise = spec.pop("noise", None)
        if noise is not None:
            noise = tuple(noise)
        return make_power_payoff(beta, float(spec.pop("delta", 1.0)), noise=noise)
    if kind == "lower_bound":
        family = make_lower_bound_family(
            beta,
            float(spec.pop("gamma")),
            float(spec.pop("alpha")),
            float(spec.pop("delta")),
            spec.pop("variant", "at-most-lipschitz"),
            d=int(spec.pop("d", 1)),
        )
        member = int(spec.pop("member", 0))
        if not (0 <= member < len(family)):
            raise ValueError(f"member {member} outside family of {len(family)}")
        return family[member]
    if kind == "example1":
        return make_example1_family(beta, float(spec.pop("tilde_beta")), T,
                                    int(spec.pop("part", 1)))
    raise ValueError(f"unknown instance kind {kind!r}")


# ---------------------------------------------------------------------------
# property verifiers


def _instance_arms(obj):
    if isinstance(obj, ProblemInstance):
        return [("f1", obj.f1), ("f2", obj.f2)], obj.d
    return [("f", obj)], 1


def _grid(d: int, n: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, n)
    if d == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def check_holder(instance, beta: float, L: float, grid_n: int = 200,
                 fd_step: float = 1e-4) -> PropertyReport:
    """Grid check of |f(x') - f_x(x')| <= L ||x - x'||_inf^beta.

    For beta <= 1 the Taylor term is f(x) itself; for beta in (1, 2] the
    gradient is taken by central differences with step ``fd_step`` and the
    check tolerance widens to 1e-3 to absorb the discretization.
    """
    arms, d = _instance_arms(instance)
    k = floor_strict(beta)
    if k > 1:
        raise NotImplementedError("check_holder supports beta <= 2")
    tol = 1e-3 if k >= 1 else 0.0
    pts = _grid(d, grid_n if d == 1 else max(2, int(round(grid_n ** (1 / d)))))
    n = len(pts)
    worst = None
    margin = math.inf
    for arm_name, f in arms:
        vals = np.asarray(f(pts[:, 0] if d == 1 else pts), dtype=float)
        if k == 0:
            diff = np.abs(vals[:, None] - vals[None, :])
        else:
            grads = np.empty((n, d))
            for j in range(d):
                shift = np.zeros(d)
                shift[j] = fd_step
                hi = np.clip(pts + shift, 0.0, 1.0)
                lo = np.clip(pts - shift, 0.0, 1.0)
                fhi = np.asarray(f(hi[:, 0] if d == 1 else hi), dtype=float)
                flo = np.asarray(f(lo[:, 0] if d == 1 else lo), dtype=float)
                grads[:, j] = (fhi - flo) / (hi[:, j] - lo[:, j])
            taylor = vals[:, None] + np.einsum(
                "ij,kij->ik", grads, pts[None, :, :] - pts[:, None, :])
            diff = np.abs(vals[None, :] - taylor)
        dist = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2)
        with np.errstate(invalid="ignore"):
            slack = L * dist ** beta + tol - diff
        np.fill_diagonal(slack, math.inf)
        idx = np.unravel_index(np.argmin(slack), slack.shape)
        if slack[idx] < margin:
            margin = float(slack[idx])
            worst = {
                "arm": arm_name,
                "x": tuple(pts[idx[0]]),
                "x_prime": tuple(pts[idx[1]]),
                "deviation": float(diff[idx]),
                "bound": float(L * dist[idx] ** beta),
            }
    return PropertyReport(holds=margin >= 0.0, witness=worst,
                          margin_of_violation=margin)


def check_margin(instance: ProblemInstance, alpha: float, C0: float,
                 grid_n: int = 100_000, delta_grid=None,
                 quad_tol: float | None = None) -> PropertyReport:
    """Grid estimate of P{0 < |f1 - f2| <= delta} against C0 delta^alpha."""
    deltas = np.asarray(delta_grid if delta_grid is not None
                        else np.geomspace(1e-3, 1.0, 13), dtype=float)
    if np.any((deltas <= 0) | (deltas > 1)):
        raise ValueError("delta grid must lie in (0, 1]")
    d = instance.d
    n_axis = grid_n if d == 1 else max(2, int(round(grid_n ** (1 / d))))
    pts = _grid(d, n_axis)
    gaps = np.abs(np.asarray(instance.f1(pts[:, 0] if d == 1 else pts), dtype=float)
                  - np.asarray(instance.f2(pts[:, 0] if d == 1 else pts), dtype=float))
    tol = quad_tol if quad_tol is not None else 8.0 / n_axis ** (1 / d) + 1e-12
    margin = math.inf
    worst = None
    for delta in deltas:
        prob = float(np.mean((gaps > 0) & (gaps <= delta)))
        slack = C0 * delta ** alpha + tol - prob
        if slack < margin:
            margin = float(slack)
            worst = {"delta": float(delta), "probability": prob,
                     "bound": float(C0 * delta ** alpha)}
    return PropertyReport(holds=margin >= 0.0, witness=worst,
                          margin_of_violation=margin)


def check_self_similarity(instance: ProblemInstance, beta: float, b: float,
                          l0: int, l_max: int, q: float, p: int,
                          probe_per_axis: int = 65,
                          nodes_per_axis: int = 2048) -> PropertyReport:
    """Verify the projection-bias lower bound b q^{-l beta} at each level.

    For every level l in [l0, l_max] the maximum of
    |Gamma_{q^-l}^p f_k(x; B) - f_k(x)| over exact q-adic cells B, arms k,
    and an in-cell probe grid must reach b q^{-l beta}.
    """
    if l_max < l0:
        raise ValueError("l_max must be >= l0")
    if p < floor_strict(beta):
        raise ValueError(f"degree p={p} below floor_strict(beta)={floor_strict(beta)}")
    d = instance.d
    margin = math.inf
    worst = None
    for level in range(int(math.ceil(l0)), int(l_max) + 1):
        h = q ** (-level)
        best = -math.inf
        best_at = None
        for box in qadic_boxes(d, q, level):
            probes = box.midpoint_nodes(probe_per_axis)[0]
            edges = np.array(np.meshgrid(*[np.array([lo, hi]) for lo, hi in
                                           zip(box.lo, box.hi)],
                                         indexing="ij")).reshape(d, -1).T
            eval_pts = np.vstack([probes, edges])
            for arm, f in (("f1", instance.f1), ("f2", instance.f2)):
                proj = project_to_polynomial(f, box, p, h,
                                             nodes_per_axis=nodes_per_axis)
                fvals = np.asarray(
                    f(eval_pts[:, 0] if d == 1 else eval_pts), dtype=float)
                for x_pt, f_val in zip(eval_pts, fvals):
                    bias = abs(proj(x_pt if d > 1 else x_pt[0]) - f_val)
                    if bias > best:
                        best = bias
                        best_at = {"level": level, "arm": arm,
                                   "x": tuple(x_pt), "bias": bias}
        required = b * q ** (-level * beta)
        slack = best - required
        if slack < margin:
            margin = float(slack)
            worst = dict(best_at or {})
            worst["required"] = float(required)
    return PropertyReport(holds=margin >= 0.0, witness=worst,
                          margin_of_violation=margin)


def projection_bias_constant(f, beta: float, p: int, q: float,
                             levels, d: int = 1,
                             probe_per_axis: int = 65,
                             nodes_per_axis: int = 2048) -> float:
    """Empirical upper-bound constant: max over levels of sup|Gamma f - f| / h^beta."""
    worst = 0.0
    for level in levels:
        h = q ** (-level)
        for box in qadic_boxes(d, q, level):
            proj = project_to_polynomial(f, box, p, h, nodes_per_axis=nodes_per_axis)
            probes = box.midpoint_nodes(probe_per_axis)[0]
            fvals = np.asarray(f(probes[:, 0] if d == 1 else probes), dtype=float)
            for x_pt, f_val in zip(probes, fvals):
                bias = abs(proj(x_pt if d > 1 else x_pt[0]) - f_val)
                worst = max(worst, bias / h ** beta)
    return worst


# ---------------------------------------------------------------------------
# theory exponents


def minimax_exponent(beta: float, alpha: float, d: int) -> float:
    """Optimal worst-case regret exponent 1 - beta(1+alpha)/(2 beta + d)."""
    if beta <= 0 or alpha < 0 or d < 1:
        raise ValueError(f"need beta > 0, alpha >= 0, d >= 1; got {beta}, {alpha}, {d}")
    return 1.0 - beta * (1.0 + alpha) / (2.0 * beta + d)


def impossibility_exponent(beta: float, gamma: float, alpha: float, d: int,
                           regime: str) -> float:
    """Lower-bound exponent forced on a policy rate-optimal at smoothness gamma.

    "at-most-lipschitz" (0 < beta < gamma <= 1):
        1 - (beta+d)(2 gamma + d - alpha gamma) /
            ((2 gamma + d)(2 beta + d - alpha beta))
    "at-least-lipschitz" (beta = 1 < gamma):
        1 - (2 gamma + d - gamma alpha) / (2 gamma + d)
    """
    if regime == "at-most-lipschitz":
        if not (0 < beta < gamma <= 1):
            raise InvalidRegimeError(
                f"at-most-lipschitz needs 0 < beta < gamma <= 1, got {beta}, {gamma}")
        if not (0 < alpha <= 1.0 / gamma):
            raise InvalidRegimeError(f"alpha={alpha} outside (0, 1/gamma]")
        return 1.0 - (beta + d) * (2 * gamma + d - alpha * gamma) / (
            (2 * gamma + d) * (2 * beta + d - alpha * beta))
    if regime == "at-least-lipschitz":
        if beta != 1 or gamma <= 1:
            raise InvalidRegimeError(
                f"at-least-lipschitz needs beta = 1 < gamma, got {beta}, {gamma}")
        if not (0 < alpha <= 1):
            raise InvalidRegimeError(f"alpha={alpha} outside (0, 1]")
        return 1.0 - (2 * gamma + d - gamma * alpha) / (2 * gamma + d)
    raise InvalidRegimeError(f"unknown regime {regime!r}")
