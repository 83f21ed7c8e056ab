import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcim.array import Fidelity, Mode, TdCimArray, energy_of
from tdcim.chain import ChainConfig, Topology
from tdcim.device import FeFetParams

CFG8 = ChainConfig(n_stages=8)


def dot(a, b):
    return sum(int(x) * int(y) for x, y in zip(a, b))


def ham(a, b):
    return sum(int(x) != int(y) for x, y in zip(a, b))


def loaded(rows=4, seed=0, **kw):
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 2, (rows, 8))
    arr = TdCimArray(rows, CFG8, **kw).write(m, rng)
    return arr, m


@pytest.mark.parametrize("fidelity", list(Fidelity))
def test_mac_and_cam_counts(fidelity):
    arr, m = loaded()
    rng = np.random.default_rng(5)
    for x in rng.integers(0, 2, (6, 8)):
        assert arr.mac(x, fidelity).counts.tolist() == [dot(r, x) for r in m]
        rc = arr.cam_search(x, fidelity)
        assert rc.counts.tolist() == [ham(r, x) for r in m]


@given(st.lists(st.lists(st.integers(0, 1), min_size=8, max_size=8), min_size=1, max_size=6),
       st.lists(st.integers(0, 1), min_size=8, max_size=8))
def test_best_match_lowest_row_on_tie(matrix, query):
    arr = TdCimArray(len(matrix), CFG8).write(np.array(matrix), np.random.default_rng(0))
    d = [ham(r, query) for r in matrix]
    assert arr.cam_search(query).best_match == d.index(min(d))


def test_energy_formula():
    arr, m = loaded(rows=3, e_intrinsic_per_stage=2e-16)
    x = np.ones(8, np.uint8)
    rc = arr.mac(x, Fidelity.LOGICAL)
    n_act = int(m.sum())
    assert rc.energy == pytest.approx(3 * 8 * 2e-16 + n_act * 9e-15 * 0.81, rel=1e-12)
    default = energy_of(np.zeros((2, 8)), CFG8)
    assert default == pytest.approx(2 * 8 * CFG8.c_intrinsic * 0.81, rel=1e-12)


def test_latency_is_slowest_row_plus_overhead():
    arr, _ = loaded(sense_overhead=1e-9)
    rc = arr.cam_search(np.zeros(8, np.uint8))
    assert rc.latency == pytest.approx(max(d.t_total for d in rc.delays) + 1e-9)


def test_write_energy_accumulates():
    arr = TdCimArray(2, CFG8, write_energy_per_cell=2e-15)
    rng = np.random.default_rng(0)
    arr.write(np.zeros((2, 8)), rng)
    arr.write_row(1, np.ones(8), rng)
    assert arr.write_energy == pytest.approx(24 * 2e-15)
    assert arr.stored[1].tolist() == [1] * 8


def test_write_samples_thresholds():
    p = FeFetParams(sigma_vth=0.05)
    arr = TdCimArray(64, ChainConfig(n_stages=64), p).write(np.ones((64, 64)), np.random.default_rng(0))
    assert arr.vth_top.mean() == pytest.approx(p.vth_low, abs=0.01)
    assert arr.vth_bottom.std() == pytest.approx(0.05, rel=0.1)
    c = arr.cell(3, 4)
    assert c.stored_bit == 1 and c.top.vth_effective == arr.vth_top[3, 4]


def test_divider_robust_to_measured_sigma():
    arr, m = loaded(rows=8, device_params=FeFetParams(sigma_vth=0.05))
    x = np.arange(8) % 2
    assert arr.cam_search(x).counts.tolist() == [ham(r, x) for r in m]


def test_receipt_dict():
    arr, _ = loaded()
    d = arr.cam_search(np.zeros(8, np.uint8)).to_dict()
    assert set(d) == {"counts", "t_rise_s", "t_fall_s", "energy_j", "latency_s", "best_match"}
    assert "best_match" not in arr.mac(np.zeros(8, np.uint8)).to_dict()


def test_batch_counts_equal_single_ops():
    arr, _ = loaded()
    xs = np.random.default_rng(2).integers(0, 2, (5, 8))
    batch = arr.counts(xs, Mode.CAM)
    assert batch.shape == (5, 4)
    for x, row in zip(xs, batch):
        assert row.tolist() == arr.cam_search(x).counts.tolist()


@pytest.mark.parametrize("bad", [
    lambda: TdCimArray(0, CFG8),
    lambda: TdCimArray(2, ChainConfig(n_stages=8, topology=Topology.BUFFER)),
    lambda: TdCimArray(2, CFG8).write(np.zeros((2, 7)), np.random.default_rng(0)),
    lambda: TdCimArray(2, CFG8).mac(np.zeros(7)),
])
def test_shape_errors(bad):
    with pytest.raises(ValueError):
        bad()


def test_row_out_of_range():
    with pytest.raises(IndexError):
        TdCimArray(2, CFG8).write_row(2, np.zeros(8), np.random.default_rng(0))


def test_write_readback_and_isolation():
    p = FeFetParams(sigma_vth=0.05)
    rng = np.random.default_rng(0)
    arr = TdCimArray(2, CFG8, p).write(np.zeros((2, 8)), rng)
    row1 = arr.vth_top[1].copy(), arr.vth_bottom[1].copy()
    word = [1, 0, 1, 1, 0, 0, 1, 0]
    arr.write_row(0, word, rng)
    assert arr.stored[0].tolist() == word
    assert np.array_equal(arr.vth_top[1], row1[0]) and np.array_equal(arr.vth_bottom[1], row1[1])
    arr.write_row(0, [1 - b for b in word], rng)
    assert arr.stored[0].tolist() == [1 - b for b in word]


def test_small_examples():
    cfg4 = ChainConfig(n_stages=4)
    arr = TdCimArray(1, cfg4).write([[1, 0, 1, 1]], np.random.default_rng(0))
    assert arr.mac([1, 1, 0, 1]).counts.tolist() == [2]
    rc = arr.mac([0, 0, 0, 0])
    assert rc.counts.tolist() == [0] and rc.delays[0].t_total == pytest.approx(2 * 4 * cfg4.t_intrinsic)
    # 5-bit words padded with a matching sixth column (inverter rows need an even width)
    cfg6 = ChainConfig(n_stages=6)
    cam = TdCimArray(1, cfg6).write([[1, 0, 1, 1, 0, 0]], np.random.default_rng(0))
    exact = cam.cam_search([1, 0, 1, 1, 0, 0])
    assert exact.counts.tolist() == [0] and exact.delays[0].t_total == pytest.approx(12 * cfg6.t_intrinsic)
    assert cam.cam_search([1, 0, 0, 1, 0, 0]).counts.tolist() == [1]


def test_best_match_exhaustive_5_bit():
    rng = np.random.default_rng(3)
    rows = rng.integers(0, 2, (4, 5))
    arr = TdCimArray(4, ChainConfig(n_stages=6)).write(np.hstack([rows, np.zeros((4, 1), int)]), rng)
    for q in range(32):
        query = [(q >> i) & 1 for i in range(5)]
        d = [ham(r, query) for r in rows]
        assert arr.cam_search(query + [0]).best_match == d.index(min(d))


@given(st.integers(0, 64), st.floats(1e-15, 1e-13), st.floats(0.5, 1.2))
def test_energy_monotone(n_act, c_load, vdd):
    cfg = ChainConfig(n_stages=64, c_load=c_load, vdd=vdd)
    act = np.zeros((1, 64), bool)
    act[0, :n_act] = True
    e = energy_of(act, cfg)
    more = act.copy()
    more[0, :min(n_act + 1, 64)] = True
    assert energy_of(more, cfg) >= e
    assert energy_of(act, ChainConfig(n_stages=64, c_load=2 * c_load, vdd=vdd, c_intrinsic=cfg.c_intrinsic)) >= e
    assert energy_of(act, ChainConfig(n_stages=64, c_load=c_load, vdd=vdd * 1.1, c_intrinsic=cfg.c_intrinsic)) > e
    double = energy_of(act, ChainConfig(n_stages=64, c_load=2 * c_load, vdd=vdd, c_intrinsic=cfg.c_intrinsic))
    zero = energy_of(np.zeros_like(act), cfg)
    assert double - zero == pytest.approx(2 * (e - zero), rel=1e-9, abs=1e-30)
