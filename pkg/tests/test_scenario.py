from random import Random

import pytest

from dcfsim.backoff import PolicyParams
from dcfsim.config import load_config
from dcfsim.phy import PathLossParams, RadioConfig, decodable, rx_power, sinr
from dcfsim.scenario import (GRID_CHANNEL_ROWS, distance, gen_grid, gen_overlap,
                             gen_toy, validate)

RADIO = RadioConfig(20.0, 0.0, 0.0, -95.0, -82.0, 10.0, 20.0, 6.0)
PL = PathLossParams(5.0, 4.4, 9.5, 30.0)
PARAMS = PolicyParams()


def joint_sinr(dep, receiver_idx):
    """SINR at one BSS's STA while both APs transmit."""
    own = dep.bsss[receiver_idx]
    other = dep.bsss[1 - receiver_idx]
    signal = rx_power(RADIO, distance(own.ap_position_m, own.sta_position_m), PL)
    interf = rx_power(RADIO, distance(other.ap_position_m, own.sta_position_m), PL)
    return sinr(signal, [interf], RADIO.noise_dbm)


def test_toy_a_simultaneous_transmissions_decode():
    dep = gen_toy("a", RADIO, PL)
    for i in (0, 1):
        assert decodable(joint_sinr(dep, i), RADIO.capture_threshold_db)
        assert joint_sinr(dep, i) >= RADIO.capture_threshold_db + 3.0


def test_toy_b_simultaneous_transmissions_fail_but_solo_works():
    dep = gen_toy("b", RADIO, PL)
    for i in (0, 1):
        assert not decodable(joint_sinr(dep, i), RADIO.capture_threshold_db)
        assert joint_sinr(dep, i) <= RADIO.capture_threshold_db - 3.0
        own = dep.bsss[i]
        solo = rx_power(RADIO, distance(own.ap_position_m, own.sta_position_m), PL) - RADIO.noise_dbm
        assert solo >= RADIO.capture_threshold_db + 3.0


def test_toy_aps_sense_each_other_in_both_variants():
    for variant in ("a", "b"):
        dep = gen_toy(variant, RADIO, PL)
        ap1, ap2 = (b.ap_position_m for b in dep.bsss)
        assert rx_power(RADIO, distance(ap1, ap2), PL) >= RADIO.cca_dbm


def test_toy_unsolvable_phy_raises():
    deaf = RadioConfig(20.0, 0.0, 0.0, -95.0, -30.0, 10.0, 20.0, 6.0)  # absurd CCA
    with pytest.raises(ValueError):
        gen_toy("a", deaf, PL)


def test_overlap_full_mutual_sensing_for_every_seed():
    for seed in range(20):
        dep = gen_overlap(9, Random(seed), seed=seed)
        aps = [b.ap_position_m for b in dep.bsss]
        for i in range(9):
            for j in range(9):
                if i != j:
                    assert rx_power(RADIO, distance(aps[i], aps[j]), PL) >= RADIO.cca_dbm


def test_overlap_sta_ring_and_area_bounds():
    for seed in range(20):
        dep = gen_overlap(5, Random(seed), seed=seed)
        for b in dep.bsss:
            d = distance(b.ap_position_m, b.sta_position_m)
            assert 3.0 <= d <= 4.0
            for x, limit in zip(b.sta_position_m, dep.area_m):
                assert 0.0 <= x <= limit


def test_overlap_rejects_out_of_range_counts():
    with pytest.raises(ValueError):
        gen_overlap(10, Random(0))
    with pytest.raises(ValueError):
        gen_overlap(0, Random(0))


def test_overlap_same_seed_reproduces_deployment():
    a = gen_overlap(4, Random(11), seed=11)
    b = gen_overlap(4, Random(11), seed=11)
    assert a == b


def test_grid_ap_positions_are_cell_centers():
    dep = gen_grid(Random(0))
    centers = {b.ap_position_m for b in dep.bsss}
    assert centers == {(x, y) for x in (2.5, 7.5, 12.5) for y in (2.5, 7.5, 12.5)}


def test_grid_channel_stripes_avoid_adjacent_reuse():
    assert GRID_CHANNEL_ROWS == ((0, 1, 2), (1, 2, 0), (2, 0, 1))
    dep = gen_grid(Random(1))
    chan = {}
    for b in dep.bsss:
        col = int(b.ap_position_m[0] // 5)
        row = int(b.ap_position_m[1] // 5)
        chan[(row, col)] = b.channel_index
    for row in range(3):
        for col in range(3):
            if row + 1 < 3:
                assert chan[(row, col)] != chan[(row + 1, col)]
            if col + 1 < 3:
                assert chan[(row, col)] != chan[(row, col + 1)]


def test_grid_sta_stays_in_its_cell():
    for seed in range(20):
        dep = gen_grid(Random(seed), seed=seed)
        for b in dep.bsss:
            ax, ay = b.ap_position_m
            sx, sy = b.sta_position_m
            assert ax - 2.5 <= sx <= ax + 2.5
            assert ay - 2.5 <= sy <= ay + 2.5


def test_grid_same_channel_groups_are_three_stripes():
    dep = gen_grid(Random(2))
    by_channel = {}
    for b in dep.bsss:
        by_channel.setdefault(b.channel_index, []).append(b.bss_id)
    assert sorted(len(v) for v in by_channel.values()) == [3, 3, 3]


def test_validate_default_config_is_clean():
    cfg, _, errors = load_config()
    assert not errors
    assert validate(cfg.experiment, cfg) == []


def test_validate_rejects_out_of_range_bss_count():
    cfg, _, errors = load_config({"experiment": {"n_bss": 10}})
    assert not errors
    messages = validate(cfg.experiment, cfg)
    assert any("n_bss out of [1,9]" in m for m in messages)


def test_validate_names_the_difs_relation():
    cfg, _, errors = load_config({"mac": {"difs_us": 40.0}})
    assert not errors
    messages = validate(cfg.experiment, cfg)
    assert any("difs" in m.lower() for m in messages)


def test_validate_collects_every_violation():
    cfg, _, errors = load_config({
        "experiment": {"n_bss": 12},
        "mac": {"difs_us": 50.0},
        "policy": {"cw0": 0},
    })
    assert not errors
    messages = validate(cfg.experiment, cfg)
    assert len(messages) >= 3
