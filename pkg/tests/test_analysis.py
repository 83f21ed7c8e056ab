import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcim.analysis import (DsePoint, DseSpec, MonteCarloSpec, alpha_power_factor, diagonal_deviation,
                            dse_energy_delay, efficiency_tops_per_watt, fit_slope, is_unimodal_interior,
                            mc_cell_vint, mc_chain_delay, random_positions, trial_rng)
from tdcim.chain import ChainConfig

# c_load giving T_C = 200 ps with the default 10 kOhm driver
C_200PS = 200e-12 / (math.log(2) * 1e4)


def test_trial_rng_is_keyed():
    a = trial_rng(0, 3).standard_normal(4)
    assert np.array_equal(a, trial_rng(0, 3).standard_normal(4))
    assert not np.array_equal(a, trial_rng(0, 4).standard_normal(4))


def test_mc_cell_zero_sigma_has_zero_spread():
    t = mc_cell_vint(MonteCarloSpec(n_trials=20, sigma_vth=0.0))
    assert np.ptp(t.samples, axis=0).max() == 0.0
    # summary pools stored 0 and 1, which agree to rounding
    assert all(r["std"] < 1e-15 for r in t.summary())


def test_mc_cell_spread_grows_with_sigma():
    stds = [mc_cell_vint(MonteCarloSpec(n_trials=400, sigma_vth=s)).std_at(1.0) for s in (0.05, 0.12, 0.2)]
    assert stds[0] < stds[1] < stds[2]


def test_mc_cell_summary_shape():
    spec = MonteCarloSpec(n_trials=5)
    rows = mc_cell_vint(spec).summary()
    assert len(rows) == 2 * len(spec.v_read_sweep)
    assert {r["case"] for r in rows} == {"match", "mismatch"}


def test_mc_cell_no_errors_at_measured_sigma():
    t = mc_cell_vint(MonteCarloSpec(n_trials=2000, sigma_vth=0.05), v_read_sweep=[1.0])
    assert t.decision_errors(1.0, 0.9) == 0


def test_mc_cell_is_deterministic():
    spec = MonteCarloSpec(n_trials=10, seed=7)
    assert np.array_equal(mc_cell_vint(spec).samples, mc_cell_vint(spec).samples)


@given(st.integers(1, 40), st.data())
def test_random_positions_exact_count(length, data):
    k = data.draw(st.integers(0, length))
    mask = random_positions(np.random.default_rng(0), length, k)
    assert mask.shape == (length,) and mask.sum() == k


def test_mc_chain_noise_free():
    spec = MonteCarloSpec(n_trials=3, sigma_vth=0.0, chain_lengths=(8, 16))
    wide = mc_chain_delay(spec, ChainConfig(c_load=C_200PS))
    assert [r.pass_rate for r in wide] == [1.0, 1.0]
    assert all(r.sense_error_rate == 0.0 for r in wide)
    # default 62 ps per load cannot clear a 100 ps margin
    narrow = mc_chain_delay(spec)
    assert [r.pass_rate for r in narrow] == [0.0, 0.0]
    r = wide[1]
    assert r.delays.shape == (3, 17)
    np.testing.assert_allclose(np.diff(r.delays[0]), C_200PS * math.log(2) * 1e4, rtol=1e-9)


def test_mc_chain_rejects_odd_length():
    with pytest.raises(ValueError):
        mc_chain_delay(MonteCarloSpec(n_trials=1, chain_lengths=(7,)))


def test_mc_spec_validation():
    with pytest.raises(ValueError):
        MonteCarloSpec(n_trials=0)
    with pytest.raises(ValueError):
        MonteCarloSpec(sense_margin=0)
    with pytest.raises(ValueError):
        DseSpec(stage_counts=())


def test_alpha_power():
    assert alpha_power_factor(0.9, 0.9) == 1.0
    expected = (1.1 / 0.75 ** 1.3) / (0.9 / 0.55 ** 1.3)
    assert alpha_power_factor(1.1, 0.9) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        alpha_power_factor(0.3, 0.9)


def test_dse_grid_and_diagonals():
    spec = DseSpec()
    pts = dse_energy_delay(spec)
    assert len(pts) == 8 * 7 * 6
    assert diagonal_deviation(pts) < 1e-9
    p = next(p for p in pts if p.n_stages == 4 and p.vdd == 0.9 and p.c_load == 20e-15)
    assert p.activation_energy == pytest.approx(4 * 20e-15 * 0.81, rel=1e-12)


def test_diagonal_deviation_detects_spread():
    pts = [DsePoint(1e-15, 2, 1.0, 0, 1.0, 0), DsePoint(2e-15, 1, 1.0, 0, 0.9, 0)]
    assert diagonal_deviation(pts) == pytest.approx(0.1)


def test_efficiency():
    assert efficiency_tops_per_watt(64, 1e-9, 7.47e-15) == pytest.approx(8567.6, rel=1e-4)
    # 1 op per pJ is 1e12 op/J, i.e. exactly 1 TOPS/W
    assert efficiency_tops_per_watt(1, 1e-9, 1e-12) == pytest.approx(1.0)
    assert efficiency_tops_per_watt(64, 1e-9, 2 * 7.47e-15) == pytest.approx(8567.6 / 2, rel=1e-4)
    with pytest.raises(ZeroDivisionError):
        efficiency_tops_per_watt(1, 1e-9, 0.0)
    with pytest.raises(ValueError):
        efficiency_tops_per_watt(0, 1e-9, 1e-15)


def test_fit_slope_and_unimodal():
    x = np.arange(10)
    assert fit_slope(x, 3 * x + 2) == pytest.approx(3)
    assert is_unimodal_interior([0, 1, 3, 2, 1])
    assert not is_unimodal_interior([0, 1, 2, 3])
    assert not is_unimodal_interior([0, 2, 1, 2, 0])


def test_spread_non_decreasing_over_sigma_grid():
    stds = [mc_cell_vint(MonteCarloSpec(n_trials=500, sigma_vth=s), v_read_sweep=[1.0]).std_at(1.0)
            for s in (0.0, 0.05, 0.12, 0.2)]
    assert stds == sorted(stds) and stds[0] < 1e-12  # identical samples, mean rounding only


def test_chain_robust_at_012():
    spec = MonteCarloSpec(n_trials=60, sigma_vth=0.12, chain_lengths=(32,))
    assert mc_chain_delay(spec, ChainConfig(c_load=C_200PS))[0].pass_rate == 1.0


def test_product_invariance_example():
    spec = DseSpec(c_load_values=(10e-15, 20e-15), stage_counts=(32, 64), vdd_values=(0.9,))
    pts = {(p.c_load, p.n_stages): p for p in dse_energy_delay(spec)}
    assert pts[(10e-15, 64)].activation_energy == pytest.approx(pts[(20e-15, 32)].activation_energy, rel=1e-12)


@given(st.floats(0.4, 2.0), st.floats(0.01, 0.5))
def test_alpha_power_decreasing(vdd, dv):
    assert alpha_power_factor(vdd + dv, 0.9) < alpha_power_factor(vdd, 0.9)
