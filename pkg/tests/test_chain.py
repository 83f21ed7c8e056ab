import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcim.chain import (ChainConfig, ProtocolError, Topology, analytical_delay, analytical_delays,
                         default_pulse_width, parity_counts, sense_count, transient_delays,
                         transient_simulate)

CFG = ChainConfig()
# ln2 * 10 kOhm * 9 fF
T_C = 6.238324625039508e-11


def oracle_inverter(bits, cfg):
    """Stage s (1-based) loads the rising output edge when s is even, the falling edge when odd."""
    rise = fall = cfg.n_stages * cfg.t_intrinsic
    for s, b in enumerate(bits, start=1):
        if b and s % 2 == 0:
            rise += cfg.t_c
        elif b:
            fall += cfg.t_c
    return rise, fall, rise + fall


def test_default_t_c():
    assert CFG.t_c == pytest.approx(T_C, rel=1e-15)
    assert CFG.c_load == 9e-15
    assert math.log(2) * CFG.r_drive * CFG.c_intrinsic == pytest.approx(CFG.t_intrinsic, rel=1e-15)


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(n_stages=7)
    with pytest.raises(ValueError):
        ChainConfig(n_stages=0, topology=Topology.BUFFER)
    with pytest.raises(ValueError):
        ChainConfig(c_load=0.0)
    assert ChainConfig(n_stages=7, topology="buffer").topology is Topology.BUFFER


@given(st.lists(st.booleans(), min_size=2, max_size=40).filter(lambda b: len(b) % 2 == 0))
def test_inverter_matches_parity_oracle(bits):
    cfg = ChainConfig(n_stages=len(bits))
    r = analytical_delay(cfg, bits)
    assert (r.t_rise, r.t_fall, r.t_total) == pytest.approx(oracle_inverter(bits, cfg), rel=1e-12)


@given(st.lists(st.booleans(), min_size=1, max_size=40))
def test_buffer_is_popcount(bits):
    cfg = ChainConfig(n_stages=len(bits), topology=Topology.BUFFER)
    r = analytical_delay(cfg, bits)
    assert r.t_rise == r.t_total == pytest.approx(len(bits) * cfg.t_intrinsic + sum(bits) * cfg.t_c)


def test_parity_counts():
    n_even, n_odd = parity_counts([1, 0, 1, 1, 0, 1])
    assert (n_even, n_odd) == (2, 2)


def test_activation_length_checked():
    with pytest.raises(ValueError):
        analytical_delays(CFG, np.zeros(31, bool))


@given(st.integers(0, 16), st.floats(-0.49, 0.49))
def test_sense_count_round_trip(k, jitter):
    cfg = ChainConfig(n_stages=16)
    m = cfg.phase_baseline + (k + jitter) * cfg.t_c
    assert sense_count(m, cfg) == k


def test_sense_count_clamps():
    cfg = ChainConfig(n_stages=4)
    assert sense_count(0.0, cfg) == 0
    assert sense_count(1.0, cfg) == 4
    with pytest.raises(ValueError):
        sense_count(-1e-12, cfg)


@pytest.mark.parametrize("topology,n", [("buffer", 1), ("buffer", 9), ("inverter", 2), ("inverter", 12)])
def test_transient_matches_analytical_exhaustively_small(topology, n):
    cfg = ChainConfig(n_stages=n, topology=topology)
    acts = np.array(list(itertools.product([0, 1], repeat=n)), dtype=bool)
    tr, tf, tt, _ = transient_delays(cfg, acts)
    ar, af, at = analytical_delays(cfg, acts)
    np.testing.assert_allclose(tr, ar, rtol=1e-9, atol=1e-15)
    np.testing.assert_allclose(tt, at, rtol=1e-9, atol=1e-15)
    if topology == "inverter":
        np.testing.assert_allclose(tf, af, rtol=1e-9, atol=1e-15)


def test_transient_is_insensitive_to_step():
    cfg = ChainConfig(n_stages=8)
    act = np.array([1, 0, 1, 1, 0, 0, 1, 0], bool)
    coarse = transient_delays(cfg, act[None], dt=cfg.t_intrinsic / 20)[2]
    fine = transient_delays(cfg, act[None], dt=cfg.t_intrinsic / 80)[2]
    assert coarse[0] == pytest.approx(fine[0], rel=1e-9)


def test_transient_waveform():
    cfg = ChainConfig(n_stages=4)
    res = transient_simulate(cfg, [1, 1, 0, 0])
    assert res.voltages.shape == (res.times.size, 4)
    assert np.all(np.diff(res.times) > 0)
    assert res.voltages.min() >= -1e-12 and res.voltages.max() <= cfg.vdd + 1e-12
    assert res.delay.t_total == pytest.approx(analytical_delay(cfg, [1, 1, 0, 0]).t_total, rel=1e-9)
    assert res.pulse_width >= default_pulse_width(cfg) * (1 - 1e-12)


def test_short_pulse_rejected():
    cfg = ChainConfig(n_stages=4)
    with pytest.raises(ProtocolError):
        transient_delays(cfg, np.ones((1, 4), bool), pulse_width=cfg.phase_baseline / 2)


def test_coarse_step_rejected():
    with pytest.raises(ValueError):
        transient_delays(CFG, np.zeros((1, 32), bool), dt=CFG.t_intrinsic)


def test_worked_examples():
    cfg = ChainConfig(n_stages=32)
    assert analytical_delay(cfg, np.zeros(32)).t_total == pytest.approx(64 * cfg.t_intrinsic)
    buf = ChainConfig(n_stages=32, topology=Topology.BUFFER)
    assert analytical_delay(buf, np.ones(32)).t_total == pytest.approx(32 * (buf.t_intrinsic + buf.t_c))
    act = np.zeros(32, bool)
    act[[1, 3, 5, 7, 9]] = True  # stages 2..10 even
    act[[0, 2, 4]] = True  # stages 1, 3, 5
    r = analytical_delay(cfg, act)
    assert r.t_rise == pytest.approx(32 * cfg.t_intrinsic + 5 * cfg.t_c)
    assert r.t_fall == pytest.approx(32 * cfg.t_intrinsic + 3 * cfg.t_c)
    assert r.t_total == pytest.approx(64 * cfg.t_intrinsic + 8 * cfg.t_c)
    assert ChainConfig(c_load=18e-15).t_c == pytest.approx(2 * cfg.t_c)
    assert sense_count(cfg.phase_baseline + 7.4 * cfg.t_c, cfg) == 7


def test_single_buffer_stage_lag():
    cfg = ChainConfig(n_stages=1, topology=Topology.BUFFER)
    t = transient_delays(cfg, np.array([[0], [1]], bool))[0]
    assert t[1] - t[0] == pytest.approx(cfg.t_c, rel=0.05)


def test_unloaded_inverter_edges_symmetric():
    tr, tf, _, _ = transient_delays(CFG, np.zeros((1, 32), bool))
    assert tr[0] == pytest.approx(tf[0], rel=0.01)


def test_exhaustive_round_trip_16_stages():
    cfg = ChainConfig(n_stages=16)
    acts = ((np.arange(2 ** 16)[:, None] >> np.arange(16)) & 1).astype(bool)
    t_rise, t_fall, t_total = analytical_delays(cfg, acts)
    n_even, n_odd = acts[:, 1::2].sum(1), acts[:, 0::2].sum(1)
    assert np.array_equal(sense_count(t_rise, cfg), n_even)
    assert np.array_equal(sense_count(t_fall, cfg), n_odd)
    assert np.array_equal(t_total, t_rise + t_fall)


@given(st.lists(st.booleans(), min_size=16, max_size=16), st.integers(0, 7))
def test_phase_separation(bits, i):
    cfg = ChainConfig(n_stages=16)
    a = np.array(bits)
    flipped_odd = a.copy()
    flipped_odd[2 * i] ^= True  # an odd stage
    flipped_even = a.copy()
    flipped_even[2 * i + 1] ^= True
    base = analytical_delay(cfg, a)
    assert analytical_delay(cfg, flipped_odd).t_rise == base.t_rise
    assert analytical_delay(cfg, flipped_even).t_fall == base.t_fall
    shuffled = a.copy()
    shuffled[0::2] = np.random.default_rng(i).permutation(a[0::2])
    assert analytical_delay(cfg, shuffled) == base
