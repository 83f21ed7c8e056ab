"""Variation studies, design-space sweeps and efficiency metrics.

Every Monte Carlo trial draws from its own generator seeded by
``(seed, ..., trial)``, so tables are reproducible and trials could be
evaluated in any order or in parallel.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from tdcim.array import energy_of
from tdcim.cell import Solver, divider_vint, logic_output
from tdcim.chain import ChainConfig, Topology, analytical_delays, sense_count
from tdcim.device import FeFetParams

ALPHA = 1.3
VTH_LOGIC = 0.35

# (stored, search) for the four cell cases; XOR == 1 is a mismatch
CELL_CASES = ((0, 0), (1, 1), (0, 1), (1, 0))


@dataclass(frozen=True)
class MonteCarloSpec:
    n_trials: int = 60
    sigma_vth: float = 0.12
    v_read_sweep: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 3.0, 31), 6))
    chain_lengths: tuple[int, ...] = (32, 64, 128)
    sense_margin: float = 100e-12
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "v_read_sweep", tuple(float(v) for v in self.v_read_sweep))
        object.__setattr__(self, "chain_lengths", tuple(int(n) for n in self.chain_lengths))
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.sense_margin <= 0:
            raise ValueError("sense_margin must be > 0")
        if self.sigma_vth < 0:
            raise ValueError("sigma_vth must be >= 0")


@dataclass(frozen=True)
class DseSpec:
    c_load_values: tuple[float, ...] = tuple(10e-15 * 2 ** i for i in range(8))  # 10 fF .. 1280 fF
    stage_counts: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    vdd_values: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9, 1.0, 1.1)

    def __post_init__(self):
        for name in ("c_load_values", "stage_counts", "vdd_values"):
            vals = tuple(getattr(self, name))
            if not vals or any(v <= 0 for v in vals):
                raise ValueError(f"{name} must be non-empty and positive")
            object.__setattr__(self, name, vals)


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *(int(k) for k in key)])


@dataclass
class CellVintTable:
    v_read: np.ndarray  # (V,)
    cases: tuple[tuple[int, int], ...]
    samples: np.ndarray  # (trials, V, cases)

    def is_mismatch(self) -> np.ndarray:
        return np.array([s ^ q for s, q in self.cases], dtype=bool)

    def summary(self) -> list[dict]:
        """Per (v_read, match/mismatch) mean, std, min, max over trials and stored values."""
        mis = self.is_mismatch()
        rows = []
        for i, vr in enumerate(self.v_read):
            for label, sel in (("match", ~mis), ("mismatch", mis)):
                x = self.samples[:, i, sel].ravel()
                rows.append({"v_read": float(vr), "case": label, "mean": float(x.mean()),
                             "std": float(x.std()), "min": float(x.min()), "max": float(x.max())})
        return rows

    def std_at(self, v_read: float) -> float:
        """Pooled V_int sample std at one read voltage, per case then averaged."""
        i = int(np.argmin(np.abs(self.v_read - v_read)))
        return float(self.samples[:, i, :].std(axis=0).mean())

    def decision_errors(self, v_read: float, vdd: float) -> int:
        i = int(np.argmin(np.abs(self.v_read - v_read)))
        out = logic_output(self.samples[:, i, :], vdd)
        return int((out != self.is_mismatch()[None, :]).sum())


def mc_cell_vint(spec: MonteCarloSpec, device_params: FeFetParams | None = None, vdd: float = 0.9,
                 solver: Solver = Solver.RAIL_REFERENCED, v_read_sweep=None) -> CellVintTable:
    """Monte Carlo of the internal node voltage against read voltage.

    Each trial draws fresh thresholds for one cell storing 0 and one storing 1,
    then applies both search values to each.
    """
    base = device_params or FeFetParams()
    params = replace(base, sigma_vth=spec.sigma_vth)
    v_read = np.asarray(spec.v_read_sweep if v_read_sweep is None else v_read_sweep, dtype=float)
    # offsets[t, stored, device]; device 0 = top, 1 = bottom
    offsets = np.stack([trial_rng(spec.seed, t).standard_normal((2, 2)) for t in range(spec.n_trials)])

    stored = np.array([s for s, _ in CELL_CASES])
    search = np.array([q for _, q in CELL_CASES])
    top_mean = np.where(stored == 1, params.vth_low, params.vth_high)
    bottom_mean = np.where(stored == 1, params.vth_high, params.vth_low)
    vth_top = top_mean[None, :] + params.sigma_vth * offsets[:, stored, 0]  # (T, 4)
    vth_bottom = bottom_mean[None, :] + params.sigma_vth * offsets[:, stored, 1]
    v_sl = np.where(search == 1, 0.0, vdd)
    v_slbar = np.where(search == 1, vdd, 0.0)

    v_int = divider_vint(vth_top[:, None, :], vth_bottom[:, None, :], v_sl, v_slbar,
                         v_read[None, :, None], params, solver)
    return CellVintTable(v_read, CELL_CASES, np.broadcast_to(v_int, (spec.n_trials, v_read.size, 4)).copy())


PositionGenerator = Callable[[np.random.Generator, int, int], np.ndarray]


def random_positions(rng: np.random.Generator, length: int, k: int) -> np.ndarray:
    """Boolean mask with exactly ``k`` mismatch positions out of ``length``."""
    mask = np.zeros(length, dtype=bool)
    mask[rng.permutation(length)[:k]] = True
    return mask


def _ordinal_cells(seed: int, trial: int, level: int, stream: int, count: int):
    """Stored bits and (top, bottom) offsets for the first ``count`` cells of one stream.

    Draws are prefix-consistent: the i-th cell is identical whatever ``count``
    is, so different chain lengths share their cells (common random numbers).
    """
    rng = trial_rng(seed, trial, level, stream)
    offsets = rng.standard_normal((count, 2))
    stored = (rng.random(count) < 0.5).astype(np.uint8) if count else np.zeros(0, np.uint8)
    return stored, offsets


def _level_cells(seed, trial, length, k, positions: PositionGenerator):
    """One search-mode row at Hamming level ``k``: stored bits, query bits, offsets."""
    mis = positions(trial_rng(seed, length, trial, k), length, k)
    s_mis, o_mis = _ordinal_cells(seed, trial, k, 0, k)
    s_mat, o_mat = _ordinal_cells(seed, trial, k, 1, length - k)
    stored = np.empty(length, np.uint8)
    offsets = np.empty((length, 2))
    stored[mis], offsets[mis] = s_mis, o_mis
    stored[~mis], offsets[~mis] = s_mat, o_mat
    return stored, stored ^ mis.astype(np.uint8), offsets


@dataclass
class ChainMcResult:
    length: int
    levels: np.ndarray  # (L+1,)
    delays: np.ndarray  # (trials, L+1) total delays
    separable: np.ndarray  # (L,) bool, pair (k, k+1)
    pass_rate: float
    sense_error_rate: float
    meta: dict = field(default_factory=dict)


def mc_chain_delay(spec: MonteCarloSpec, chain: ChainConfig | None = None,
                   device_params: FeFetParams | None = None, v_read: float = 1.0,
                   positions: PositionGenerator = random_positions,
                   solver: Solver = Solver.RAIL_REFERENCED) -> list[ChainMcResult]:
    """Delay distribution per ideal activation count, for each chain length.

    For every trial and every level k = 0..L a row is built with exactly k
    search mismatches; activations come from the divider model of the sampled
    cells. A pair of adjacent levels is separable when the empirical min/max
    envelopes of their total delays are at least ``sense_margin`` apart.

    The i-th mismatched (and i-th matched) cell of a level draws the same
    thresholds at every chain length, so lengths are compared on shared cells.
    """
    base_chain = chain or ChainConfig()
    params = replace(device_params or FeFetParams(), sigma_vth=spec.sigma_vth)
    results = []
    for length in spec.chain_lengths:
        if length % 2:
            raise ValueError(f"chain lengths must be even, got {length}")
        cfg = replace(base_chain, n_stages=length, topology=Topology.INVERTER)
        vdd = cfg.vdd
        shape = (spec.n_trials, length + 1, length)
        stored = np.empty(shape, np.uint8)
        query = np.empty(shape, np.uint8)
        offs = np.empty(shape + (2,))
        for t in range(spec.n_trials):
            for k in range(length + 1):
                stored[t, k], query[t, k], offs[t, k] = _level_cells(spec.seed, t, length, k, positions)
        vth_top = np.where(stored == 1, params.vth_low, params.vth_high) + params.sigma_vth * offs[..., 0]
        vth_bot = np.where(stored == 1, params.vth_high, params.vth_low) + params.sigma_vth * offs[..., 1]
        v_int = divider_vint(vth_top, vth_bot, (1.0 - query) * vdd, query * vdd, v_read, params, solver)
        act = logic_output(v_int, vdd).astype(bool)

        t_rise, t_fall, t_total = analytical_delays(cfg, act)
        sensed = sense_count(t_rise, cfg) + sense_count(t_fall, cfg)
        levels = np.arange(length + 1)
        lo, hi = t_total.min(axis=0), t_total.max(axis=0)
        separable = (lo[1:] - hi[:-1]) >= spec.sense_margin * (1 - 1e-9)
        results.append(ChainMcResult(
            length=length, levels=levels, delays=t_total, separable=separable,
            pass_rate=float(separable.mean()),
            sense_error_rate=float((sensed != levels[None, :]).mean()),
            meta={"t_c": cfg.t_c, "sigma_vth": spec.sigma_vth}))
    return results


def alpha_power_factor(vdd: float, vdd_ref: float, alpha: float = ALPHA, vth_t: float = VTH_LOGIC) -> float:
    """Gate-delay scale factor relative to ``vdd_ref`` under the alpha-power law."""
    if vdd <= vth_t or vdd_ref <= vth_t:
        raise ValueError(f"supply must exceed the logic threshold {vth_t} V")
    return (vdd / (vdd - vth_t) ** alpha) / (vdd_ref / (vdd_ref - vth_t) ** alpha)


@dataclass(frozen=True)
class DsePoint:
    c_load: float
    n_stages: int
    vdd: float
    energy: float
    activation_energy: float
    delay: float


def dse_energy_delay(spec: DseSpec, base: ChainConfig | None = None,
                     e_intrinsic_per_stage: float | None = None,
                     alpha: float = ALPHA, vth_t: float = VTH_LOGIC) -> list[DsePoint]:
    """Energy and fully-activated delay of a single chain over the grid.

    ``base.vdd`` is the reference supply the chain's delay parameters refer to;
    other supplies rescale the delay by the alpha-power factor.
    """
    base = base or ChainConfig(topology=Topology.BUFFER)
    points = []
    for c_load, n, vdd in itertools.product(spec.c_load_values, spec.stage_counts, spec.vdd_values):
        cfg = replace(base, c_load=c_load, n_stages=n, vdd=vdd)
        act = np.ones((1, n), dtype=bool)
        energy = energy_of(act, cfg, e_intrinsic_per_stage)
        intrinsic = energy_of(np.zeros_like(act), cfg, e_intrinsic_per_stage)
        delay = float(analytical_delays(cfg, act)[2][0]) * alpha_power_factor(vdd, base.vdd, alpha, vth_t)
        points.append(DsePoint(c_load, n, vdd, energy, energy - intrinsic, delay))
    return points


def diagonal_deviation(points: list[DsePoint]) -> float:
    """Largest relative spread of the activation energy among grid points sharing
    the same VDD and the same total switched capacitance c_load * n_stages."""
    groups: dict[tuple, list[float]] = {}
    for p in points:
        key = (p.vdd, round(p.c_load * p.n_stages / 1e-18))
        groups.setdefault(key, []).append(p.activation_energy)
    worst = 0.0
    for vals in groups.values():
        if len(vals) > 1:
            worst = max(worst, (max(vals) - min(vals)) / max(vals))
    return worst


def efficiency_tops_per_watt(ops_per_cycle: float, cycle_time: float, energy_per_cycle: float) -> float:
    if energy_per_cycle == 0:
        raise ZeroDivisionError("energy per cycle is zero")
    if ops_per_cycle <= 0 or cycle_time <= 0 or energy_per_cycle < 0:
        raise ValueError("inputs must be positive")
    # (ops / s) / (J / s) = ops / J; 1e12 ops/J == 1 TOPS/W
    ops_per_s = ops_per_cycle / cycle_time
    watts = energy_per_cycle / cycle_time
    return ops_per_s / watts / 1e12


def fit_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x - x.mean()
    return float((xm * (y - y.mean())).sum() / (xm ** 2).sum())


def is_unimodal_interior(y) -> bool:
    """True if ``y`` strictly rises to a single interior maximum then strictly falls."""
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    if k == 0 or k == y.size - 1:
        return False
    return bool(np.all(np.diff(y[:k + 1]) > 0) and np.all(np.diff(y[k:]) < 0))

