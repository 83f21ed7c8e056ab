"""Behavioral compact model of a single ferroelectric FET.

The device is a two-state threshold-voltage switch. Channel conductance is a
logistic function of gate drive, bounded below by the off-state leakage and
above by the fully-on conductance. Threshold variation is an independent
Gaussian offset re-drawn on every write.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class VthState(enum.Enum):
    LOW = "low"
    HIGH = "high"


class Polarity(enum.Enum):
    SET = "set"  # positive write pulse -> low V_TH
    RESET = "reset"  # negative write pulse -> high V_TH


@dataclass(frozen=True)
class FeFetParams:
    vth_low: float = -0.5
    vth_high: float = 1.5
    g_on: float = 1e-4
    g_leak: float = 1e-10
    v_slope: float = 0.05
    sigma_vth: float = 0.0

    def __post_init__(self):
        if not self.vth_low < self.vth_high:
            raise ValueError(f"memory window must be positive: vth_low={self.vth_low} vth_high={self.vth_high}")
        if not self.g_on > self.g_leak > 0:
            raise ValueError(f"need g_on > g_leak > 0, got g_on={self.g_on} g_leak={self.g_leak}")
        if self.sigma_vth < 0:
            raise ValueError(f"sigma_vth must be >= 0, got {self.sigma_vth}")
        if self.v_slope <= 0:
            raise ValueError(f"v_slope must be > 0, got {self.v_slope}")

    def mean_vth(self, state: VthState) -> float:
        return self.vth_low if state is VthState.LOW else self.vth_high

    def sample_vth(self, mean, rng: np.random.Generator, size=None):
        """Draw threshold voltages around ``mean`` (scalar or array)."""
        offsets = rng.standard_normal(size=size if size is not None else np.shape(mean))
        return mean + self.sigma_vth * offsets


def logistic_conductance(v_gate, vth, params: FeFetParams):
    """Vectorized channel conductance for gate drive ``v_gate`` and threshold ``vth``.

    Works on scalars or broadcastable arrays.
    """
    z = (np.asarray(v_gate, dtype=float) - vth) / params.v_slope
    # past |z| = 500 the fraction is pinned to 0/1 far below g_leak resolution;
    # clipping avoids exp overflow and subnormal products
    frac = 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))
    g = params.g_leak + (params.g_on - params.g_leak) * frac
    return g if np.ndim(g) else float(g)


@dataclass
class FeFetDevice:
    params: FeFetParams = field(default_factory=FeFetParams)
    state: VthState = VthState.HIGH
    vth_effective: float | None = None

    def __post_init__(self):
        if self.vth_effective is None:
            self.vth_effective = self.params.mean_vth(self.state)

    def write(self, polarity: Polarity, rng: np.random.Generator) -> FeFetDevice:
        """Program the device and re-sample its threshold. Mutates and returns self."""
        self.state = VthState.LOW if polarity is Polarity.SET else VthState.HIGH
        self.vth_effective = float(self.params.sample_vth(self.params.mean_vth(self.state), rng))
        return self

    def conductance(self, v_gate_overdrive) -> float:
        return logistic_conductance(v_gate_overdrive, self.vth_effective, self.params)
