"""Buffer and inverter delay chains with conditionally loaded stages.

Stage indexing is 1-based in the physical sense: ``bits[0]`` is stage 1, the
first stage after the input. For inverter chains the rising output edge
(phase I) sees only the even stages (``bits[1::2]``) and the falling edge
(phase II) only the odd stages (``bits[0::2]``).

Analytical delay per phase::

    T = N_tot * T_intrinsic + N_active * T_C,   T_C = ln2 * r_drive * c_load

The transient engine integrates every stage as a first-order RC node driven by
an ideal threshold copy of the previous stage. Each step is updated with the
closed-form exponential, and VDD/2 crossings are solved exactly inside the
step, so the only discretization is the step on which a load switches phase.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


class Topology(enum.Enum):
    BUFFER = "buffer"
    INVERTER = "inverter"


class ProtocolError(ValueError):
    """Input pulse too short for the two-phase protocol."""


@dataclass(frozen=True)
class ChainConfig:
    n_stages: int = 32
    topology: Topology = Topology.INVERTER
    t_intrinsic: float = 10e-12
    c_load: float = 9e-15
    c_intrinsic: float | None = None  # None -> calibrated so ln2*R*C_int == t_intrinsic
    r_drive: float = 10e3
    vdd: float = 0.9

    def __post_init__(self):
        if isinstance(self.topology, str):
            object.__setattr__(self, "topology", Topology(self.topology))
        if self.c_intrinsic is None:
            object.__setattr__(self, "c_intrinsic", self.t_intrinsic / (LN2 * self.r_drive))
        if self.n_stages < 1:
            raise ValueError(f"n_stages must be >= 1, got {self.n_stages}")
        for name in ("t_intrinsic", "c_load", "c_intrinsic", "r_drive", "vdd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.topology is Topology.INVERTER and self.n_stages % 2:
            raise ValueError(f"inverter chains need an even stage count, got {self.n_stages}")

    @property
    def t_c(self) -> float:
        return delay_per_load(self)

    @property
    def phase_baseline(self) -> float:
        return self.n_stages * self.t_intrinsic


@dataclass(frozen=True)
class DelayResult:
    t_rise: float
    t_fall: float
    t_total: float


def delay_per_load(config: ChainConfig) -> float:
    return LN2 * config.r_drive * config.c_load


def _as_activation(config: ChainConfig, act) -> np.ndarray:
    bits = np.asarray(act, dtype=bool)
    if bits.shape[-1] != config.n_stages:
        raise ValueError(f"activation length {bits.shape[-1]} != n_stages {config.n_stages}")
    return bits


def parity_counts(act) -> tuple[np.ndarray, np.ndarray]:
    """(N_even, N_odd) active-stage counts along the last axis, 1-based stage parity."""
    bits = np.asarray(act, dtype=bool)
    return bits[..., 1::2].sum(axis=-1), bits[..., 0::2].sum(axis=-1)


def phase_masks(n_stages: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(n_stages)
    return idx % 2 == 1, idx % 2 == 0


def analytical_delays(config: ChainConfig, act) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched analytical (t_rise, t_fall, t_total) over leading axes of ``act``."""
    bits = _as_activation(config, act)
    base = config.phase_baseline
    if config.topology is Topology.BUFFER:
        t = base + bits.sum(axis=-1) * config.t_c
        return t, t, t
    n_even, n_odd = parity_counts(bits)
    t_rise = base + n_even * config.t_c
    t_fall = base + n_odd * config.t_c
    return t_rise, t_fall, t_rise + t_fall


def analytical_delay_buffer(config: ChainConfig, act) -> DelayResult:
    if config.topology is not Topology.BUFFER:
        raise ValueError("analytical_delay_buffer needs a buffer chain")
    t, _, _ = analytical_delays(config, act)
    return DelayResult(float(t), float(t), float(t))


def analytical_delay_inverter(config: ChainConfig, act) -> DelayResult:
    if config.topology is not Topology.INVERTER:
        raise ValueError("analytical_delay_inverter needs an inverter chain")
    r, f, t = analytical_delays(config, act)
    return DelayResult(float(r), float(f), float(t))


def analytical_delay(config: ChainConfig, act) -> DelayResult:
    if config.topology is Topology.BUFFER:
        return analytical_delay_buffer(config, act)
    return analytical_delay_inverter(config, act)


def sense_count(measured, config: ChainConfig, phase_baseline: float | None = None):
    """Quantize a measured edge delay back to an active-stage count."""
    base = config.phase_baseline if phase_baseline is None else phase_baseline
    m = np.asarray(measured, dtype=float)
    if np.any(m < 0):
        raise ValueError("measured delay must be non-negative")
    n = np.floor((m - base) / config.t_c + 0.5)
    n = np.clip(n, 0, config.n_stages).astype(np.int64)
    return n if n.ndim else int(n)


def default_pulse_width(config: ChainConfig) -> float:
    """Wide enough for phase I to finish and every loaded stage to settle."""
    worst = config.n_stages * (config.t_intrinsic + config.t_c)
    tau_loaded = config.r_drive * (config.c_intrinsic + config.c_load)
    return 2.0 * worst + 10.0 * tau_loaded


@dataclass
class TransientResult:
    delay: DelayResult
    times: np.ndarray = field(repr=False)  # (T,)
    voltages: np.ndarray = field(repr=False)  # (T, n_stages)
    pulse_width: float = 0.0


def transient_delays(config: ChainConfig, acts, pulse_width: float | None = None,
                     dt: float | None = None, record: bool = False):
    """Simulate a batch of chains sharing ``config``.

    ``acts`` has shape (B, n_stages). Returns ``(t_rise, t_fall, t_total,
    pulse_width)`` as arrays of shape (B,), plus ``(times, voltages)`` when
    ``record`` is set (voltages shaped (T, B, n_stages)).
    """
    bits = _as_activation(config, np.atleast_2d(acts))
    batch, n = bits.shape
    dt = config.t_intrinsic / 20 if dt is None else dt
    if dt > config.t_intrinsic / 20 * (1 + 1e-9):
        raise ValueError(f"dt={dt} exceeds t_intrinsic/20")
    inverting = config.topology is Topology.INVERTER
    pw = default_pulse_width(config) if pulse_width is None else pulse_width
    if pw <= 0:
        raise ValueError("pulse_width must be > 0")
    pw_steps = int(math.ceil(pw / dt - 1e-9))
    pw = pw_steps * dt

    if inverting:
        even, odd = phase_masks(n)
        phase1 = bits & even
        phase2 = bits & odd
        t_rise_expected = analytical_delays(config, bits)[0]
        if np.any(pw <= t_rise_expected):
            raise ProtocolError(f"pulse width {pw:.3e}s does not exceed the phase I delay "
                                f"{float(t_rise_expected.max()):.3e}s")
    else:
        phase1 = phase2 = bits
    c1 = config.c_intrinsic + config.c_load * phase1
    c2 = config.c_intrinsic + config.c_load * phase2
    tau1, tau2 = config.r_drive * c1, config.r_drive * c2
    a1, a2 = np.exp(-dt / tau1), np.exp(-dt / tau2)

    vdd, half = config.vdd, config.vdd / 2
    # settled state with the input held low
    if inverting:
        drive = np.broadcast_to(np.arange(n) % 2 == 0, (batch, n)).copy()
    else:
        drive = np.zeros((batch, n), dtype=bool)
    v = drive * vdd

    worst_phase = n * (config.t_intrinsic + config.t_c)
    t_end = pw + 2.0 * worst_phase + 20.0 * float(tau2.max())
    n_steps = int(math.ceil(t_end / dt))

    rise_at = np.full(batch, np.nan)
    fall_at = np.full(batch, np.nan)
    times, trace = ([0.0], [v.copy()]) if record else (None, None)

    for k in range(n_steps):
        t0 = k * dt
        first = k < pw_steps
        tau, a = (tau1, a1) if first else (tau2, a2)
        drive[:, 0] = first != inverting  # input high during the pulse
        target = drive * vdd
        v_new = target + (v - target) * a

        crossed = ((v < half) & (v_new >= half)) | ((v > half) & (v_new <= half))
        if crossed.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                s = tau * np.log((v - target) / (half - target))
            s = np.where(crossed, s, 0.0)
            # stage i crossing flips the drive of stage i+1 at offset s inside the step
            flip = np.zeros_like(crossed)
            flip[:, 1:] = crossed[:, :-1]
            if flip.any():
                s_in = np.zeros_like(s)
                s_in[:, 1:] = s[:, :-1]
                old_t = target
                new_t = np.where(drive, 0.0, vdd)
                v_mid = old_t + (v - old_t) * np.exp(-s_in / tau)
                v_two = new_t + (v_mid - new_t) * np.exp(-(dt - s_in) / tau)
                v_new = np.where(flip, v_two, v_new)
                drive = drive ^ flip
            last = crossed[:, -1]
            if last.any():
                t_cross = t0 + s[:, -1]
                rising = last & (v_new[:, -1] >= half)
                falling = last & ~rising
                rise_at = np.where(rising & np.isnan(rise_at), t_cross, rise_at)
                fall_at = np.where(falling & (t_cross >= pw) & np.isnan(fall_at), t_cross, fall_at)
        v = v_new
        if record:
            times.append(t0 + dt)
            trace.append(v.copy())
        if not record and not np.isnan(fall_at).any():
            break

    if np.isnan(rise_at).any() or np.isnan(fall_at).any():
        raise RuntimeError("output edge not observed; simulation window too short")
    t_rise = rise_at
    t_fall = fall_at - pw
    t_total = t_rise + t_fall if inverting else t_rise
    out = (t_rise, t_fall, t_total, pw)
    if record:
        return out + (np.asarray(times), np.stack(trace))
    return out


def transient_simulate(config: ChainConfig, act, pulse_width: float | None = None,
                       dt: float | None = None) -> TransientResult:
    """Single-chain transient with the full per-stage waveform."""
    t_rise, t_fall, t_total, pw, times, trace = transient_delays(
        config, np.asarray(act)[None, :], pulse_width, dt, record=True)
    delay = DelayResult(float(t_rise[0]), float(t_fall[0]), float(t_total[0]))
    return TransientResult(delay, times, trace[:, 0, :], pw)
