import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetassoc.channel import (LinkTable, RadioParams, build_link_table, open_loop_power,
                              pathloss_db)
from hetassoc.topology import DeploymentConfig, Topology, generate_topology

NOISE_104 = 10 ** (-10.4)  # -104 dBm in mW


def single_cell(users, pbs=()):
    users = np.array(users, float).reshape(-1, 2)
    pbs = np.array(pbs, float).reshape(-1, 2)
    return Topology(np.zeros((1, 2)), pbs, users, np.zeros(len(pbs), int),
                    np.zeros(len(users), int))


def test_radio_defaults():
    p = RadioParams()
    assert p.processing_gain == 128
    assert p.target_snr_db == 10
    assert p.max_tx_power_dbm == 23
    assert p.circuit_power_mw == 100
    assert p.noise_density_dbm_hz == -174
    assert p.shadowing_std_db == 8
    assert p.macro_pl == (128.1, 37.6) and p.pico_pl == (140.7, 36.7)
    assert p.noise_mw == pytest.approx(NOISE_104, rel=1e-12)


@pytest.mark.parametrize("bad", [dict(processing_gain=0.5), dict(bandwidth_hz=0),
                                 dict(shadowing_std_db=-1)])
def test_radio_param_validation(bad):
    with pytest.raises(ValueError):
        RadioParams(**bad)


def test_pathloss_reference_values():
    assert pathloss_db("macro", 1.0) == 128.1
    assert pathloss_db("pico", 1.0) == 140.7
    assert pathloss_db("macro", 0.1) == pytest.approx(90.5, abs=1e-12)
    with pytest.raises(ValueError):
        pathloss_db("macro", 0.0)
    with pytest.raises(ValueError):
        pathloss_db("femto", 1.0)


def test_open_loop_power_below_cap():
    # 10 dB target - 104 dBm noise + 90.5 dB loss = -3.5 dBm
    assert open_loop_power(90.5, NOISE_104) == pytest.approx(10 ** -0.35, rel=1e-12)
    assert open_loop_power(90.5, NOISE_104) == pytest.approx(0.4467, abs=1e-4)


def test_open_loop_power_cap():
    assert open_loop_power(130.0, NOISE_104) == pytest.approx(10 ** 2.3, rel=1e-9)
    assert open_loop_power(130.0, NOISE_104) == pytest.approx(199.526, abs=1e-3)


@given(st.lists(st.floats(40, 200), min_size=2, max_size=20))
def test_open_loop_power_monotone_and_capped(losses):
    losses = np.sort(np.array(losses))
    p = open_loop_power(losses, NOISE_104)
    assert np.all(np.diff(p) >= 0)
    assert np.all(p <= 10 ** 2.3 * (1 + 1e-12))
    assert np.all(p > 0)


def test_single_user_sees_only_noise():
    params = replace(RadioParams(), shadowing_std_db=0.0)
    links = build_link_table(single_cell([(300.0, 0.0)]), params)
    l = 128.1 + 37.6 * math.log10(0.3)
    g = 10 ** (-l / 10)
    p = min(10.0 * params.noise_mw / g, 10 ** 2.3)
    assert links.sinr[0, 0] == pytest.approx(128 * p * g / params.noise_mw, rel=1e-12)


def test_equidistant_users_symmetric():
    params = replace(RadioParams(), shadowing_std_db=0.0)
    links = build_link_table(single_cell([(300.0, 0.0), (0.0, 300.0)]), params)
    l = 128.1 + 37.6 * math.log10(0.3)
    g = 10 ** (-l / 10)
    p = min(10.0 * params.noise_mw / g, 10 ** 2.3)
    expected = 128 * p * g / (p * g + params.noise_mw)
    np.testing.assert_allclose(links.tx_power_mw[0], [p, p], rtol=1e-12)
    np.testing.assert_allclose(links.gain[0], [g, g], rtol=1e-12)
    np.testing.assert_allclose(links.sinr[0], [expected, expected], rtol=1e-12)
    # uncapped open-loop power lands exactly on the SNR target: 1280/11
    assert expected == pytest.approx(1280 / 11, rel=1e-12)


def test_log2_identity_examples():
    t = LinkTable.from_arrays([[1.0, 2.0]], [[1.0, 1.0]])
    np.testing.assert_allclose(t.sinr, [[1.0, 3.0]])


@pytest.fixture(scope="module")
def drop():
    cfg = DeploymentConfig(pbs_per_macrocell=6, users_per_macrocell=25, seed=99)
    return generate_topology(cfg)


def test_link_table_invariants(drop):
    params = RadioParams()
    links = build_link_table(drop, params, seed=5)
    assert (links.N, links.K) == (7, 25)
    assert np.all(links.tx_power_mw > 0)
    assert np.all(links.tx_power_mw <= params.max_tx_power_mw)
    assert np.all(links.gain > 0) and np.all(links.sinr > 0) and np.all(links.rate > 0)
    np.testing.assert_array_equal(links.rate, np.log2(1.0 + links.sinr))
    np.testing.assert_array_equal(links.gain, 10 ** (-links.pathloss_db / 10))
    assert links.bs_tier[0] == "macro" and set(links.bs_tier[1:]) == {"pico"}
    with pytest.raises(ValueError):
        links.rate[0, 0] = 1.0


def test_sinr_matches_literal_double_sum(drop):
    links = build_link_table(drop, RadioParams(), seed=5)
    pg = links.tx_power_mw * links.gain
    for n in range(links.N):
        for k in range(links.K):
            interference = sum(pg[n, j] for j in range(links.K) if j != k)
            expect = 128 * pg[n, k] / (interference + links.noise_mw[n])
            assert links.sinr[n, k] == pytest.approx(expect, rel=1e-10)


def test_deterministic_and_seed_sensitive(drop):
    a = build_link_table(drop, RadioParams(), seed=1)
    b = build_link_table(drop, RadioParams(), seed=1)
    c = build_link_table(drop, RadioParams(), seed=2)
    assert a.to_text() == b.to_text()
    assert not np.array_equal(a.pathloss_db, c.pathloss_db)


def test_no_shadowing_ignores_seed(drop):
    params = replace(RadioParams(), shadowing_std_db=0.0)
    a = build_link_table(drop, params, seed=1)
    b = build_link_table(drop, params, seed=2)
    for name in ("pathloss_db", "gain", "tx_power_mw", "sinr", "rate"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_doubling_processing_gain_doubles_sinr(drop):
    a = build_link_table(drop, RadioParams(), seed=3)
    b = build_link_table(drop, replace(RadioParams(), processing_gain=256.0), seed=3)
    np.testing.assert_allclose(b.sinr, 2 * a.sinr, rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), users=st.integers(2, 20))
def test_removing_a_user_never_lowers_sinr(seed, users):
    topo = generate_topology(DeploymentConfig(pbs_per_macrocell=3, users_per_macrocell=users,
                                              seed=seed))
    full = build_link_table(topo, RadioParams(), seed=seed)
    fewer = Topology(topo.mbs_positions, topo.pbs_positions, topo.user_positions[:-1],
                     topo.pbs_cell, topo.user_cell[:-1])
    reduced = build_link_table(fewer, RadioParams(), seed=seed)
    np.testing.assert_array_equal(reduced.gain, full.gain[:, :-1])
    assert np.all(reduced.sinr >= full.sinr[:, :-1] * (1 - 1e-12))


def test_power_control_switch(drop):
    on = build_link_table(drop, RadioParams(), seed=4)
    off = build_link_table(drop, replace(RadioParams(), power_control_uses_shadowing=False),
                           seed=4)
    np.testing.assert_array_equal(on.gain, off.gain)
    assert not np.array_equal(on.tx_power_mw, off.tx_power_mw)
    # with shadowing folded in, every uncapped link lands exactly on the SNR target
    pg = on.tx_power_mw * on.gain
    uncapped = on.tx_power_mw < RadioParams().max_tx_power_mw
    np.testing.assert_allclose(pg[uncapped], 10 * on.noise_mw[0], rtol=1e-9)


def test_text_roundtrip(drop):
    links = build_link_table(drop, RadioParams(), seed=8)
    text = links.to_text()
    assert text.startswith("# N\t7\n# K\t25\n# params\t")
    back = LinkTable.from_text(text)
    for name in ("pathloss_db", "gain", "tx_power_mw", "sinr", "rate", "noise_mw"):
        np.testing.assert_array_equal(getattr(back, name), getattr(links, name))


def test_needs_bs_and_users():
    with pytest.raises(ValueError):
        build_link_table(single_cell([]), RadioParams())
