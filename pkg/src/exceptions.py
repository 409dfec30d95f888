#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Planner Exceptions
Error types shared by the planning modules, each carrying the CLI exit code
"""


class PlannerError(Exception):
    """Base class for every error the planner reports to the user"""

    exit_code = 4

    def __init__(self, message: str, detail: str = ""):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def __str__(self):
        if self.detail:
            return f"{self.message} ({self.detail})"
        return self.message


class ConfigError(PlannerError):
    """Bad configuration file, flag or parameter set"""

    exit_code = 2


class ScenarioError(PlannerError):
    """Invalid scenario geometry or hotspot placement failure"""

    exit_code = 2


class ModelError(PlannerError):
    """An integer program could not be assembled"""

    exit_code = 4


class SolverError(PlannerError):
    """The LP kernel or branch-and-bound failed internally"""

    exit_code = 4


class InfeasibleError(PlannerError):
    """A single instance has no feasible plan"""

    exit_code = 3


class EnumerationLimitError(PlannerError):
    """The brute-force oracle refused an instance that is too large"""

    exit_code = 4


class ValidationError(PlannerError):
    """A solution file violates its model"""

    exit_code = 5
