"""R x C time-domain CiM array: one inverter chain per row, one 2FeFET cell per stage.

The same stored data serves two operations. ``mac`` drives the cells in AND
mode, so each row's active-stage count is the binary dot product with the
input. ``cam_search`` drives them in XOR mode, where a mismatch pulls V_int
high and loads the stage, so each row's count is its Hamming distance to the
query and the fastest row is the nearest neighbour.

Counts are never read from the boolean activations directly: they are sensed
from the two-phase edge delays, as the hardware would.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from tdcim.cell import Solver, XorAndCell, divider_vint, logic_output
from tdcim.chain import (ChainConfig, DelayResult, Topology, analytical_delays,
                         sense_count, transient_delays)
from tdcim.device import FeFetDevice, FeFetParams, VthState


class Mode(enum.Enum):
    MAC = "mac"
    CAM = "cam"


class Fidelity(enum.Enum):
    LOGICAL = "logical"
    DIVIDER = "divider"
    TRANSIENT = "transient"


@dataclass
class OpReceipt:
    counts: np.ndarray
    delays: list[DelayResult]
    energy: float
    latency: float
    best_match: int | None = None

    def to_dict(self) -> dict:
        out = {
            "counts": [int(c) for c in self.counts],
            "t_rise_s": [d.t_rise for d in self.delays],
            "t_fall_s": [d.t_fall for d in self.delays],
            "energy_j": self.energy,
            "latency_s": self.latency,
        }
        if self.best_match is not None:
            out["best_match"] = int(self.best_match)
        return out


def energy_of(activations, chain_config: ChainConfig, e_intrinsic_per_stage: float | None = None,
              rows: int | None = None) -> float:
    """Compute energy of one operation over ``activations`` (rows x cols, any dtype castable to bool).

    Every stage pays an intrinsic switching cost; each activated stage also
    charges its load capacitor once. ``e_intrinsic_per_stage`` defaults to
    C_intrinsic * VDD^2.
    """
    act = np.atleast_2d(np.asarray(activations, dtype=bool))
    n_rows = act.shape[0] if rows is None else rows
    cols = chain_config.n_stages
    vdd2 = chain_config.vdd ** 2
    e_int = chain_config.c_intrinsic * vdd2 if e_intrinsic_per_stage is None else e_intrinsic_per_stage
    return n_rows * cols * e_int + int(act.sum()) * chain_config.c_load * vdd2


class TdCimArray:
    def __init__(self, rows: int, chain_config: ChainConfig | None = None,
                 device_params: FeFetParams | None = None, v_read: float = 1.0,
                 solver: Solver = Solver.RAIL_REFERENCED,
                 e_intrinsic_per_stage: float | None = None,
                 write_energy_per_cell: float = 1e-15,
                 sense_overhead: float = 0.0,
                 pulse_width: float | None = None):
        self.chain_config = chain_config or ChainConfig()
        if self.chain_config.topology is not Topology.INVERTER:
            raise ValueError("array rows are inverter chains")
        if rows < 1:
            raise ValueError("rows must be >= 1")
        self.rows = rows
        self.cols = self.chain_config.n_stages
        self.params = device_params or FeFetParams()
        self.v_read = v_read
        self.solver = solver
        self.e_intrinsic_per_stage = e_intrinsic_per_stage
        self.write_energy_per_cell = write_energy_per_cell
        self.sense_overhead = sense_overhead
        self.pulse_width = pulse_width
        self.write_energy = 0.0
        # noise-free bit 0 everywhere until written
        self.stored = np.zeros((rows, self.cols), dtype=np.uint8)
        self.vth_top = np.full((rows, self.cols), self.params.vth_high)
        self.vth_bottom = np.full((rows, self.cols), self.params.vth_low)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def vdd(self) -> float:
        return self.chain_config.vdd

    def write_row(self, row: int, word, rng: np.random.Generator) -> TdCimArray:
        bits = np.asarray(word, dtype=np.uint8).ravel()
        if bits.size != self.cols:
            raise ValueError(f"word length {bits.size} != cols {self.cols}")
        if not 0 <= row < self.rows:
            raise IndexError(f"row {row} out of range for {self.rows} rows")
        p = self.params
        top_mean = np.where(bits == 1, p.vth_low, p.vth_high)
        bottom_mean = np.where(bits == 1, p.vth_high, p.vth_low)
        # per cell: top device first, then bottom
        offsets = rng.standard_normal(size=(self.cols, 2))
        self.vth_top[row] = top_mean + p.sigma_vth * offsets[:, 0]
        self.vth_bottom[row] = bottom_mean + p.sigma_vth * offsets[:, 1]
        self.stored[row] = bits
        self.write_energy += self.cols * self.write_energy_per_cell
        return self

    def write(self, matrix, rng: np.random.Generator) -> TdCimArray:
        m = np.asarray(matrix, dtype=np.uint8)
        if m.shape != self.shape:
            raise ValueError(f"matrix shape {m.shape} != array shape {self.shape}")
        for r in range(self.rows):
            self.write_row(r, m[r], rng)
        return self

    def cell(self, row: int, col: int) -> XorAndCell:
        """Snapshot of one cell as a standalone object."""
        bit = int(self.stored[row, col])
        top = FeFetDevice(self.params, VthState.LOW if bit else VthState.HIGH, float(self.vth_top[row, col]))
        bottom = FeFetDevice(self.params, VthState.HIGH if bit else VthState.LOW, float(self.vth_bottom[row, col]))
        return XorAndCell(self.params, top, bottom, bit)

    def _check_inputs(self, inputs) -> np.ndarray:
        x = np.atleast_2d(np.asarray(inputs, dtype=np.uint8))
        if x.shape[-1] != self.cols:
            raise ValueError(f"input length {x.shape[-1]} != cols {self.cols}")
        return x

    def activations(self, inputs, mode: Mode, fidelity: Fidelity = Fidelity.DIVIDER) -> np.ndarray:
        """Stage activations of shape (B, rows, cols) for a batch of inputs."""
        x = self._check_inputs(inputs)[:, None, :]
        if fidelity is Fidelity.LOGICAL:
            if mode is Mode.MAC:
                return (self.stored[None] & x).astype(bool)
            return (self.stored[None] ^ x).astype(bool)
        vdd = self.vdd
        if mode is Mode.MAC:
            v_sl, v_slbar = x * vdd, np.zeros_like(x, dtype=float)
        else:
            v_sl, v_slbar = (1 - x) * vdd, x * vdd
        v_int = divider_vint(self.vth_top[None], self.vth_bottom[None], v_sl.astype(float),
                             v_slbar.astype(float), self.v_read, self.params, self.solver)
        return logic_output(v_int, vdd).astype(bool)

    def _sense(self, act: np.ndarray, fidelity: Fidelity):
        cfg = self.chain_config
        if fidelity is Fidelity.TRANSIENT:
            b = act.shape[0]
            out = transient_delays(cfg, act.reshape(b * self.rows, self.cols), self.pulse_width)
            t_rise, t_fall, t_total = (a.reshape(b, self.rows) for a in out[:3])
        else:
            t_rise, t_fall, t_total = analytical_delays(cfg, act)
        counts = sense_count(t_rise, cfg) + sense_count(t_fall, cfg)
        return t_rise, t_fall, t_total, counts

    def run(self, inputs, mode: Mode, fidelity: Fidelity = Fidelity.DIVIDER) -> list[OpReceipt]:
        act = self.activations(inputs, mode, fidelity)
        t_rise, t_fall, t_total, counts = self._sense(act, fidelity)
        receipts = []
        for b in range(act.shape[0]):
            delays = [DelayResult(float(r), float(f), float(t))
                      for r, f, t in zip(t_rise[b], t_fall[b], t_total[b])]
            energy = energy_of(act[b], self.chain_config, self.e_intrinsic_per_stage)
            latency = float(np.max(t_total[b])) + self.sense_overhead
            best = int(np.argmin(counts[b])) if mode is Mode.CAM else None
            receipts.append(OpReceipt(counts[b].copy(), delays, energy, latency, best))
        return receipts

    def mac(self, input_bits, fidelity: Fidelity = Fidelity.DIVIDER) -> OpReceipt:
        return self.run(self._check_inputs(input_bits)[:1], Mode.MAC, fidelity)[0]

    def cam_search(self, query, fidelity: Fidelity = Fidelity.DIVIDER) -> OpReceipt:
        return self.run(self._check_inputs(query)[:1], Mode.CAM, fidelity)[0]

    def counts(self, inputs, mode: Mode, fidelity: Fidelity = Fidelity.DIVIDER) -> np.ndarray:
        """(B, rows) sensed counts for a batch, without building receipts."""
        return self._sense(self.activations(inputs, mode, fidelity), fidelity)[3]
