"""Two-FeFET series cell computing XOR/XNOR (search) or AND (MAC).

The two devices form a resistive divider between the SL rail (top) and the
SL-bar rail (bottom); the settled internal node voltage gates the stage's load
capacitor through an access transistor.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from tdcim.device import FeFetDevice, FeFetParams, Polarity, VthState, logistic_conductance

FP_TOL = 1e-3
FP_MAX_ITER = 100


class Solver(enum.Enum):
    RAIL_REFERENCED = "rail"
    FIXED_POINT = "fixed_point"


class ConvergenceError(RuntimeError):
    """Fixed-point solve of the internal node did not settle."""


@dataclass(frozen=True)
class CellDrive:
    v_sl: float
    v_slbar: float
    v_read: float

    def __post_init__(self):
        if self.v_sl < 0 or self.v_slbar < 0 or self.v_read < 0:
            raise ValueError(f"drive voltages must be non-negative: {self}")


def drive_for_search(bit: int, vdd: float, v_read: float) -> CellDrive:
    # search 0 -> VDD/GND on SL/SL-bar, search 1 -> GND/VDD
    if bit:
        return CellDrive(0.0, vdd, v_read)
    return CellDrive(vdd, 0.0, v_read)


def drive_for_and(bit: int, vdd: float, v_read: float) -> CellDrive:
    return CellDrive(vdd if bit else 0.0, 0.0, v_read)


def _divide(g_top, g_bottom, v_sl, v_slbar):
    return (g_top * v_sl + g_bottom * v_slbar) / (g_top + g_bottom)


def divider_vint(vth_top, vth_bottom, v_sl, v_slbar, v_read, params: FeFetParams,
                 solver: Solver = Solver.RAIL_REFERENCED):
    """Settled internal node voltage for arrays of cells.

    All arguments broadcast against each other. ``RAIL_REFERENCED`` takes each
    device's gate drive relative to its own rail. ``FIXED_POINT`` takes the
    lower of (rail, V_int) as each device's source and iterates until the node
    moves by less than 1 mV.
    """
    v_sl = np.asarray(v_sl, dtype=float)
    v_slbar = np.asarray(v_slbar, dtype=float)
    g_top = logistic_conductance(v_read - v_sl, vth_top, params)
    g_bottom = logistic_conductance(v_read - v_slbar, vth_bottom, params)
    v_int = _divide(g_top, g_bottom, v_sl, v_slbar)
    if solver is Solver.RAIL_REFERENCED:
        return v_int

    for _ in range(FP_MAX_ITER):
        g_top = logistic_conductance(v_read - np.minimum(v_sl, v_int), vth_top, params)
        g_bottom = logistic_conductance(v_read - np.minimum(v_slbar, v_int), vth_bottom, params)
        v_next = _divide(g_top, g_bottom, v_sl, v_slbar)
        if np.all(np.abs(v_next - v_int) < FP_TOL):
            return v_next
        v_int = v_next
    raise ConvergenceError(f"internal node did not converge within {FP_MAX_ITER} iterations")


def logic_output(v_int, vdd: float, v_threshold: float | None = None):
    """Access-transistor decision: 1 iff V_int is strictly above the threshold (default VDD/2)."""
    thr = vdd / 2 if v_threshold is None else v_threshold
    out = np.asarray(v_int) > thr
    return out.astype(np.uint8) if out.ndim else int(out)


@dataclass
class XorAndCell:
    params: FeFetParams = field(default_factory=FeFetParams)
    top: FeFetDevice = None
    bottom: FeFetDevice = None
    stored_bit: int = 0

    def __post_init__(self):
        # default is a noise-free bit 0: top high-V_TH, bottom low-V_TH
        if self.top is None:
            self.top = FeFetDevice(self.params, VthState.HIGH if self.stored_bit == 0 else VthState.LOW)
        if self.bottom is None:
            self.bottom = FeFetDevice(self.params, VthState.LOW if self.stored_bit == 0 else VthState.HIGH)

    def store(self, bit: int, rng: np.random.Generator) -> XorAndCell:
        bit = int(bool(bit))
        if bit:
            self.top.write(Polarity.SET, rng)
            self.bottom.write(Polarity.RESET, rng)
        else:
            self.top.write(Polarity.RESET, rng)
            self.bottom.write(Polarity.SET, rng)
        self.stored_bit = bit
        return self

    def resolve_vint(self, drive: CellDrive, solver: Solver = Solver.RAIL_REFERENCED) -> float:
        return float(divider_vint(self.top.vth_effective, self.bottom.vth_effective,
                                  drive.v_sl, drive.v_slbar, drive.v_read, self.params, solver))

    def conductances(self, drive: CellDrive) -> tuple[float, float]:
        """Rail-referenced (G_top, G_bottom) at this drive."""
        return (self.top.conductance(drive.v_read - drive.v_sl),
                self.bottom.conductance(drive.v_read - drive.v_slbar))
