#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Shared pytest fixtures - default grid, link tables and hand-placed hotspot layouts
"""

import pytest
from PyQt5.QtCore import QCoreApplication

from src.channel import build_link_table
from src.config import ChannelParams, EnergyParams, ScenarioParams
from src.scenario import Hotspot, Point2D, generate_manhattan


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the long Monte Carlo checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo check")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def qapp():
    return QCoreApplication.instance() or QCoreApplication([])


@pytest.fixture(scope="session")
def channel():
    return ChannelParams()


@pytest.fixture(scope="session")
def energy():
    return EnergyParams()


@pytest.fixture(scope="session")
def grid():
    """Default 3x3 block grid: depot 0 at (145, 145), lampposts 1..15 row by row from y=5"""
    return generate_manhattan()


@pytest.fixture(scope="session")
def grid_links(grid, channel):
    return build_link_table(grid, channel)


@pytest.fixture
def corner_instance(grid, channel):
    """One hotspot next to lamppost 15, which neighbors the depot"""
    scenario = grid.with_hotspots([Hotspot(0, Point2D(105.0, 145.0), 0.5, 15)])
    return scenario, build_link_table(scenario, channel)


@pytest.fixture
def typical_instance(grid, channel):
    """Three hotspots near the top-left, center-left and bottom-right lampposts"""
    scenario = grid.with_hotspots([
        Hotspot(0, Point2D(5.0, 140.0), 3.0, 13),
        Hotspot(1, Point2D(55.0, 50.0), 3.0, 6),
        Hotspot(2, Point2D(145.0, 10.0), 3.0, 4),
    ])
    return scenario, build_link_table(scenario, channel)


@pytest.fixture
def shared_instance(grid, channel):
    """Two hotspots both served by lamppost 15"""
    scenario = grid.with_hotspots([
        Hotspot(0, Point2D(105.0, 145.0), 2.4, 15),
        Hotspot(1, Point2D(100.0, 140.0), 2.4, 15),
    ])
    return scenario, build_link_table(scenario, channel)


def small_grid(blocks_x: int, blocks_y: int):
    return generate_manhattan(ScenarioParams(blocks_x=blocks_x, blocks_y=blocks_y))
