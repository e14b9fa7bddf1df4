"""Policy protocol, reference policies, and config-facing policy specs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np


class Policy(Protocol):
    """Online two-armed contextual policy."""

    def choose(self, x) -> int: ...

    def update(self, x, arm: int, y: float) -> None: ...


class FixedArmPolicy:
    """Always plays one arm; the simplest baseline."""

    kind = "fixed"

    def __init__(self, arm: int):
        if arm not in (1, 2):
            raise ValueError(f"arm must be 1 or 2, got {arm}")
        self.arm = arm

    def choose(self, x) -> int:
        return self.arm

    def update(self, x, arm, y) -> None:
        pass


class OraclePolicy:
    """Plays argmax of the true payoff means; ties go to arm 1."""

    kind = "oracle"

    def __init__(self, instance):
        self.instance = instance

    def choose(self, x) -> int:
        f1 = float(np.asarray(self.instance.f1(x)).reshape(-1)[0])
        f2 = float(np.asarray(self.instance.f2(x)).reshape(-1)[0])
        return 2 if f2 > f1 else 1

    def update(self, x, arm, y) -> None:
        pass


@dataclass(frozen=True)
class PolicySpec:
    """Declarative policy description used by the runner and the CLI.

    kind: "abse" | "sacb" | "oracle" | "fixed".  params are kind-specific;
    abse accepts {beta, c0, gamma_abse, noise_scale}, sacb accepts
    {gamma, q, upsilon, beta_lo, beta_hi, c0, gamma_abse, noise_scale,
    handoff_horizon}, fixed accepts {arm}.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def label(self) -> str:
        if self.kind == "abse":
            return f"abse({self.params.get('beta')})"
        if self.kind == "fixed":
            return f"fixed({self.params.get('arm', 1)})"
        return self.kind

    def build(self, instance, T: int):
        """Construct a live policy for one episode."""
        from .abse import AbseConfig, AbsePolicy
        from .sacb import SacbConfig, SacbPolicy

        p = dict(self.params)
        if self.kind == "fixed":
            return FixedArmPolicy(int(p.get("arm", 1)))
        if self.kind == "oracle":
            return OraclePolicy(instance)
        noise_scale = p.get("noise_scale")
        if noise_scale is None:
            noise_scale = (instance.noise[1]
                           if instance.noise[0] == "gaussian" else 0.5)
        if self.kind == "abse":
            cfg = AbseConfig(
                beta=float(p["beta"]),
                c0=float(p.get("c0", 2.0)),
                gamma_abse=float(p.get("gamma_abse", 1.0)),
                T=int(T),
                d=instance.d,
                noise_scale=float(noise_scale),
            )
            return AbsePolicy(cfg)
        if self.kind == "sacb":
            abse_params = {
                "c0": float(p.get("c0", 2.0)),
                "gamma_abse": float(p.get("gamma_abse", 1.0)),
                "noise_scale": float(noise_scale),
            }
            cfg = SacbConfig(
                beta_lo=float(p.get("beta_lo", 0.4)),
                beta_hi=float(p.get("beta_hi", 1.0)),
                gamma=float(p.get("gamma", 0.145)),
                q=float(p.get("q", 1.1)),
                upsilon=float(p.get("upsilon", 0.325)),
                handoff_horizon=p.get("handoff_horizon", "full"),
                abse_params=abse_params,
            )
            return SacbPolicy(cfg, T=int(T), d=instance.d)
        raise ValueError(f"unknown policy kind {self.kind!r}")
