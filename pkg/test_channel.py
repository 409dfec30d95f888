#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Link budget and link table tests
"""

import csv
import math

import numpy as np
import pytest

from src.channel import (build_link_table, noise_dbm, pathloss_db, serving_range, snr_db,
                         spectral_efficiency)
from src.config import ChannelParams
from src.exceptions import ScenarioError
from src.scenario import DEPOT_ID, Hotspot, Point2D


def test_noise_floor(channel):
    assert noise_dbm(channel) == pytest.approx(-77.0)


def test_snr_follows_log_distance(channel):
    assert snr_db(channel, 1.0) == pytest.approx(52.1)
    assert snr_db(channel, 10.0) - snr_db(channel, 100.0) == pytest.approx(20.0)


def test_pathloss_needs_positive_distance(channel):
    with pytest.raises(ScenarioError):
        pathloss_db(channel, 0.0)


def test_spectral_efficiency(channel):
    assert spectral_efficiency(channel, 3.0) == 1.0
    assert spectral_efficiency(channel, 60.0) == channel.max_spectral_efficiency
    assert spectral_efficiency(channel, 1e6) == channel.max_spectral_efficiency
    assert spectral_efficiency(channel, snr_db(channel, 95.0)) == pytest.approx(3.32, abs=0.01)
    assert spectral_efficiency(channel, snr_db(channel, 140.0)) == pytest.approx(2.36, abs=0.01)


def test_serving_range(channel):
    assert serving_range(channel, 3.0) == pytest.approx(107.8, abs=0.1)
    assert serving_range(channel, 0.0) == math.inf
    assert serving_range(channel, 5.0) == 0.0
    for gamma in (1.0, 2.0, 3.0, 4.0):
        d = serving_range(channel, gamma)
        assert spectral_efficiency(channel, snr_db(channel, d)) == pytest.approx(gamma)


def test_street_links(grid_links):
    links = grid_links
    assert links.n_nodes == 16
    assert links.s_eff[14, DEPOT_ID] == 4.8       # 45 m
    assert links.s_eff[1, 2] == 4.8               # 45 m
    assert links.s_eff[1, 5] == 4.8               # 45 m
    assert links.s_eff[6, 7] == 4.8               # 50 m
    assert links.s_eff[13, DEPOT_ID] == pytest.approx(2.36, abs=0.01)  # 140 m
    assert links.distance[13, DEPOT_ID] == pytest.approx(140.0)
    assert links.s_eff[1, 4] == pytest.approx(links.s_eff[13, DEPOT_ID])
    assert links.usable(15, DEPOT_ID)
    assert links.normalized_capacity(15, DEPOT_ID) == pytest.approx(4.8)


def test_blocked_links_have_no_capacity(grid_links):
    assert not grid_links.los[1, 6]
    assert grid_links.s_eff[1, 6] == 0.0
    assert grid_links.capacity[1, 6] == 0.0
    assert not grid_links.usable(1, 6)


def test_link_table_is_symmetric_and_read_only(grid_links):
    assert np.array_equal(grid_links.capacity, grid_links.capacity.T)
    assert np.array_equal(grid_links.los, grid_links.los.T)
    assert not grid_links.los.diagonal().any()
    with pytest.raises(ValueError):
        grid_links.capacity[0, 1] = 1.0


def test_hotspot_on_its_lamppost(grid, channel):
    scenario = grid.with_hotspots([Hotspot(0, grid.sites[15].position, 1.0, 15)])
    links = build_link_table(scenario, channel)
    assert links.n_nodes == 17
    assert links.s_eff[16, 15] == 4.8
    assert links.los[16, 15]
    assert not links.los[16, 1]
    assert Point2D(100.0, 145.0) == scenario.node_position(16)


def test_shadowing_is_seeded(grid):
    params = ChannelParams(shadowing_sigma_db=4.0)
    first = build_link_table(grid, params, np.random.default_rng(5))
    second = build_link_table(grid, params, np.random.default_rng(5))
    plain = build_link_table(grid, ChannelParams())
    assert np.array_equal(first.s_eff, second.s_eff)
    assert not np.array_equal(first.s_eff, plain.s_eff)
    assert np.array_equal(first.los, plain.los)


def test_csv_export(tmp_path, grid_links):
    path = tmp_path / "links.csv"
    grid_links.to_csv(str(path))
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["i", "j", "los", "distance_m", "snr_db", "s_eff", "capacity_bps"]
    assert len(rows) == 1 + 16 * 15 // 2
