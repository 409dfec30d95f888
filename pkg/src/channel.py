#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
mmWave Link Model
Macroscopic LoS pathloss, SNR, capped Shannon spectral efficiency and the
per-pair link table consumed by the optimizers
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import ChannelParams
from .exceptions import ScenarioError
from .scenario import Scenario, segments_clear

# Co-located endpoints (a hotspot drawn exactly on its lamppost) use this distance
MIN_LINK_DISTANCE = 1.0

CSV_COLUMNS = ["i", "j", "los", "distance_m", "snr_db", "s_eff", "capacity_bps"]


def pathloss_db(params: ChannelParams, d: float) -> float:
    """PL(d) = intercept + slope * log10(d)"""
    if not d > 0:
        raise ScenarioError("pathloss needs a positive distance", str(d))
    return params.pathloss_intercept + params.pathloss_exponent_x10 * math.log10(d)


def noise_dbm(params: ChannelParams) -> float:
    """Thermal noise over the channel bandwidth plus the receiver noise figure"""
    return params.noise_density_dbm_hz + 10.0 * math.log10(params.bandwidth) + params.noise_figure


def snr_db(params: ChannelParams, d: float) -> float:
    """Link budget SNR at distance d"""
    return params.tx_power_dbm + params.combined_antenna_gain - pathloss_db(params, d) - noise_dbm(params)


def spectral_efficiency(params: ChannelParams, snr: float) -> float:
    """min(log2(1 + 10^((SNR - alpha)/10)), S_max)"""
    exponent = 0.1 * (snr - params.loss_factor)
    if exponent > 300:
        return params.max_spectral_efficiency
    return min(math.log2(1.0 + 10.0 ** exponent), params.max_spectral_efficiency)


def serving_range(params: ChannelParams, gamma: float) -> float:
    """Largest distance at which a LoS link still reaches spectral efficiency gamma"""
    if gamma <= 0:
        return math.inf
    if gamma > params.max_spectral_efficiency:
        return 0.0
    required_snr = params.loss_factor + 10.0 * math.log10(2.0 ** gamma - 1.0)
    budget = params.tx_power_dbm + params.combined_antenna_gain - noise_dbm(params) - required_snr
    margin = budget - params.pathloss_intercept
    if params.pathloss_exponent_x10 == 0:
        return math.inf if margin >= 0 else 0.0
    return 10.0 ** (margin / params.pathloss_exponent_x10)


@dataclass(frozen=True)
class LinkTable:
    """Symmetric per-pair link properties over sites followed by hotspots"""
    los: np.ndarray
    distance: np.ndarray
    snr: np.ndarray
    s_eff: np.ndarray
    capacity: np.ndarray
    bandwidth: float
    n_sites: int

    @property
    def n_nodes(self) -> int:
        return self.los.shape[0]

    def usable(self, i: int, j: int) -> bool:
        """LoS with positive capacity"""
        return bool(self.los[i, j]) and self.capacity[i, j] > 0

    def normalized_capacity(self, i: int, j: int) -> float:
        """Capacity in bps/Hz, the unit demands are expressed in"""
        return float(self.capacity[i, j]) / self.bandwidth

    def to_csv(self, path: str):
        """Export one row per unordered pair for inspection"""
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for i in range(self.n_nodes):
                for j in range(i + 1, self.n_nodes):
                    writer.writerow([i, j, int(bool(self.los[i, j])), f"{self.distance[i, j]:.6f}",
                                     f"{self.snr[i, j]:.6f}", f"{self.s_eff[i, j]:.6f}",
                                     f"{self.capacity[i, j]:.1f}"])


def build_link_table(scenario: Scenario, params: ChannelParams,
                     rng: Optional[np.random.Generator] = None) -> LinkTable:
    """Compute LoS flags, distances, SNR, spectral efficiency and capacity for every pair"""
    n = scenario.n_nodes
    points = np.array([scenario.node_position(k).as_tuple() for k in range(n)], dtype=float)

    iu, ju = np.triu_indices(n, k=1)
    clear = segments_clear(points[iu], points[ju], scenario.building_array())
    dist_pairs = np.hypot(points[iu, 0] - points[ju, 0], points[iu, 1] - points[ju, 1])

    pl = params.pathloss_intercept + params.pathloss_exponent_x10 * np.log10(
        np.maximum(dist_pairs, MIN_LINK_DISTANCE))
    snr_pairs = params.tx_power_dbm + params.combined_antenna_gain - pl - noise_dbm(params)
    if params.shadowing_sigma_db > 0:
        if rng is None:
            rng = np.random.default_rng(scenario.rng_seed)
        snr_pairs = snr_pairs - rng.normal(0.0, params.shadowing_sigma_db, size=snr_pairs.shape)

    exponent = np.minimum(0.1 * (snr_pairs - params.loss_factor), 300.0)
    s_pairs = np.minimum(np.log2(1.0 + 10.0 ** exponent), params.max_spectral_efficiency)
    s_pairs = np.where(clear, s_pairs, 0.0)

    los = np.zeros((n, n), dtype=bool)
    distance = np.zeros((n, n))
    snr = np.full((n, n), -np.inf)
    s_eff = np.zeros((n, n))
    for arr, values in ((los, clear), (distance, dist_pairs), (snr, snr_pairs), (s_eff, s_pairs)):
        arr[iu, ju] = values
        arr[ju, iu] = values
    capacity = params.bandwidth * s_eff

    for arr in (los, distance, snr, s_eff, capacity):
        arr.setflags(write=False)
    return LinkTable(los=los, distance=distance, snr=snr, s_eff=s_eff, capacity=capacity,
                     bandwidth=params.bandwidth, n_sites=scenario.n_sites)
