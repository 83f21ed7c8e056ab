"""Splitting a pool of identical tiles between MAC and CAM duty, and
application-level energy/latency accounting.

Both sides run concurrently (encoding of the next query overlaps the search
of the previous one), so a task's latency is set by the slower side and the
best split minimises ``max(L_mac / n_mac, L_cam / n_cam)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from tdcim.array import OpReceipt


class Duty(enum.Enum):
    MAC = "mac"
    CAM = "cam"
    IDLE = "idle"


@dataclass
class TilePool:
    n_tiles: int
    tile_shape: tuple[int, int] = (32, 32)
    assignment: list[Duty] = field(default_factory=list)

    def __post_init__(self):
        if not self.assignment:
            self.assignment = [Duty.IDLE] * self.n_tiles
        if len(self.assignment) != self.n_tiles:
            raise ValueError("assignment must cover every tile")

    def count(self, duty: Duty) -> int:
        return sum(a is duty for a in self.assignment)


@dataclass
class WorkloadProfile:
    mac_ops: int = 0
    cam_ops: int = 0
    mac_energy: list[float] = field(default_factory=list)
    mac_latency: list[float] = field(default_factory=list)
    cam_energy: list[float] = field(default_factory=list)
    cam_latency: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.mac_ops < 0 or self.cam_ops < 0:
            raise ValueError("op counts must be >= 0")

    @classmethod
    def from_receipts(cls, mac: list[OpReceipt], cam: list[OpReceipt]) -> WorkloadProfile:
        return cls(len(mac), len(cam), [r.energy for r in mac], [r.latency for r in mac],
                   [r.energy for r in cam], [r.latency for r in cam])

    @property
    def mac_serial_latency(self) -> float:
        return math.fsum(self.mac_latency)

    @property
    def cam_serial_latency(self) -> float:
        return math.fsum(self.cam_latency)


def tile_op_counts(n_features: int, dim: int, n_classes: int, n_queries: int,
                   quant_bits: int, tile_shape: tuple[int, int]) -> tuple[int, int]:
    """(MAC, CAM) tile operations for ``n_queries`` inferences.

    Encoding stores the transposed base matrix (one row per output dimension),
    so it needs ceil(D/rows) * ceil(N/cols) tiles per bit-plane. Search stores
    one class per row: ceil(classes/rows) * ceil(D/cols) tiles.
    """
    rows, cols = tile_shape
    mac = n_queries * quant_bits * math.ceil(dim / rows) * math.ceil(n_features / cols)
    cam = n_queries * math.ceil(n_classes / rows) * math.ceil(dim / cols)
    return mac, cam


def profile_task(model, n_queries: int, tile_shape: tuple[int, int],
                 mac_receipt: OpReceipt, cam_receipt: OpReceipt,
                 quant_bits: int | None = None) -> WorkloadProfile:
    """Workload of ``n_queries`` inferences with every op costed like the given receipts."""
    qb = model.quant_bits if quant_bits is None else quant_bits
    mac, cam = tile_op_counts(model.base.n_features, model.dim, model.n_classes,
                              n_queries, qb, tile_shape)
    return WorkloadProfile(mac, cam, [mac_receipt.energy] * mac, [mac_receipt.latency] * mac,
                           [cam_receipt.energy] * cam, [cam_receipt.latency] * cam)


def split_cost(mac_latency: float, cam_latency: float, n_mac: int, n_cam: int) -> float:
    def side(lat, n):
        if lat == 0:
            return 0.0
        return lat / n if n else math.inf
    return max(side(mac_latency, n_mac), side(cam_latency, n_cam))


def best_split(mac_latency: float, cam_latency: float, n_tiles: int) -> tuple[int, int]:
    """Exhaustive minimax split; ties prefer the lower summed side latency, then fewer MAC tiles."""
    if mac_latency == 0 and cam_latency == 0:
        return 0, 0
    if cam_latency == 0:
        return n_tiles, 0
    if mac_latency == 0:
        return 0, n_tiles
    best = None
    for m in range(1, n_tiles):
        c = n_tiles - m
        key = (split_cost(mac_latency, cam_latency, m, c), mac_latency / m + cam_latency / c, m)
        if best is None or key < best:
            best = key
    return best[2], n_tiles - best[2]


def allocate(pool: TilePool, profile: WorkloadProfile, policy: str = "proportional_latency") -> TilePool:
    if policy != "proportional_latency":
        raise ValueError(f"unknown allocation policy {policy!r}")
    if pool.n_tiles < 2:
        raise ValueError("need at least two tiles")
    n_mac, n_cam = best_split(profile.mac_serial_latency, profile.cam_serial_latency, pool.n_tiles)
    assignment = [Duty.MAC] * n_mac + [Duty.CAM] * n_cam
    assignment += [Duty.IDLE] * (pool.n_tiles - len(assignment))
    return TilePool(pool.n_tiles, pool.tile_shape, assignment)


def _pct(part: float, total: float) -> float:
    return 100.0 * part / total if total > 0 else 0.0


def account(pool: TilePool, profile: WorkloadProfile, previous: TilePool | None = None,
            write_energy_per_cell: float = 1e-15, task: str = "") -> dict:
    """Energy/latency breakdown of one task on an allocated pool.

    Tiles whose duty differs from ``previous`` (all idle if omitted) are
    charged a full rewrite.
    """
    before = previous.assignment if previous is not None else [Duty.IDLE] * pool.n_tiles
    rewritten = sum(a is not b and a is not Duty.IDLE for a, b in zip(pool.assignment, before))
    rows, cols = pool.tile_shape
    e_write = rewritten * rows * cols * write_energy_per_cell
    e_mac = math.fsum(profile.mac_energy)
    e_cam = math.fsum(profile.cam_energy)
    n_mac, n_cam = pool.count(Duty.MAC), pool.count(Duty.CAM)
    if (profile.mac_ops and not n_mac) or (profile.cam_ops and not n_cam):
        raise ValueError("pool has no tiles for a side with nonzero demand")
    l_mac = profile.mac_serial_latency / n_mac if n_mac else 0.0
    l_cam = profile.cam_serial_latency / n_cam if n_cam else 0.0
    e_total = e_mac + e_cam + e_write
    return {
        "task": task,
        "tiles_mac": n_mac,
        "tiles_cam": n_cam,
        "ops": {"mac": profile.mac_ops, "cam": profile.cam_ops},
        "energy_j": {"mac": e_mac, "cam": e_cam, "write": e_write},
        "latency_s": {"mac": l_mac, "cam": l_cam},
        "totals": {"energy_j": e_total, "latency_s": max(l_mac, l_cam)},
        "percentages": {
            "energy": {"mac": _pct(e_mac, e_total), "cam": _pct(e_cam, e_total),
                       "write": _pct(e_write, e_total)},
            "latency": {"mac": _pct(l_mac, l_mac + l_cam), "cam": _pct(l_cam, l_mac + l_cam)},
        },
    }


def report_rows(report: dict) -> list[dict]:
    """Flatten a report into stacked-bar rows (task, metric, phase, value, percent)."""
    rows = []
    for metric, unit_key in (("energy", "energy_j"), ("latency", "latency_s")):
        for phase, pct in report["percentages"][metric].items():
            rows.append({"task": report["task"], "metric": metric, "phase": phase,
                         "value": report[unit_key][phase], "percent": pct})
    return rows
