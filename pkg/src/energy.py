#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
RASC Energy Model
Rotary-wing propulsion, grasping and communication energy of one aerial small cell
"""

import math
from dataclasses import dataclass

from .config import EnergyParams


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy of one activated RASC, in Joule"""
    e_fly: float
    e_grasp: float
    e_comm: float

    @property
    def e_total(self) -> float:
        return self.e_fly + self.e_grasp + self.e_comm

    def as_dict(self):
        return {"e_fly": self.e_fly, "e_grasp": self.e_grasp,
                "e_comm": self.e_comm, "e_total": self.e_total}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def parasite_power(params: EnergyParams, v: float) -> float:
    """Fuselage drag term, grows with v^3"""
    return 0.5 * params.fuselage_drag_ratio * params.air_density * params.rotor_solidity \
        * params.rotor_disc_area * v ** 3


def propulsion_power(params: EnergyParams, v: float) -> float:
    """Rotary-wing power in W at forward speed v; v = 0 is hover"""
    v = max(v, 0.0)
    v0 = params.mean_rotor_induced_velocity
    blade = params.blade_profile_power * (1.0 + 3.0 * v ** 2 / params.tip_speed ** 2)
    induced = params.induced_power * math.sqrt(
        max(math.sqrt(1.0 + v ** 4 / (4.0 * v0 ** 4)) - v ** 2 / (2.0 * v0 ** 2), 0.0))
    return blade + induced + parasite_power(params, v)


def travel_energy(params: EnergyParams, d: float) -> float:
    """Propulsion energy to cover d meters at the cruise velocity"""
    if d <= 0:
        return 0.0
    return propulsion_power(params, params.velocity) * d / params.velocity


def grasp_energy(params: EnergyParams) -> float:
    """Gripper energy over the service duration"""
    return params.grasp_power * params.service_duration


def comm_energy(params: EnergyParams) -> float:
    """Radio energy per forwarded flow over the service duration"""
    return (params.min_active_power + params.tx_factor * params.tx_power_watts) * params.service_duration


def energy_breakdown(params: EnergyParams, d_from_depot: float, n_flows: int) -> EnergyBreakdown:
    """Energy of a RASC flown d meters from the depot and forwarding n flows"""
    return EnergyBreakdown(e_fly=travel_energy(params, d_from_depot),
                           e_grasp=grasp_energy(params),
                           e_comm=n_flows * comm_energy(params))
