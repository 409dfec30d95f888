#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Bounded-Variable Simplex
Dense two-phase primal simplex over a full tableau, with variables held at
either bound while nonbasic and Bland's rule after a run of degenerate pivots,
plus a dual simplex that re-optimizes a stored basis after bound changes
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .exceptions import SolverError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

PIVOT_TOLERANCE = 1e-9
DEGENERATE_RUN = 50
REFRESH_INTERVAL = 100
DUAL_ITERATIONS_PER_ROW = 10

BasisSnapshot = Tuple[np.ndarray, np.ndarray]


@dataclass
class LpResult:
    """Outcome of one LP solve; x holds the structural columns only"""
    status: str
    x: np.ndarray
    objective: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class BoundedSimplex:
    """Minimize c.x subject to rows (a_r.x sense_r b_r) and lower <= x <= upper"""

    def __init__(self, c: np.ndarray, a: np.ndarray, b: np.ndarray, senses: Sequence[str],
                 lower: np.ndarray, upper: np.ndarray, tolerance: float = 1e-9,
                 max_iterations: int = 100000):
        c = np.asarray(c, dtype=float)
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        m, n = a.shape if a.size else (len(b), len(c))
        if a.size == 0:
            a = np.zeros((m, n))
        if len(c) != n or len(lower) != n or len(upper) != n or len(b) != m or len(senses) != m:
            raise SolverError("LP dimensions do not agree", f"{m} rows, {n} columns")
        if not np.all(np.isfinite(lower)):
            raise SolverError("every column needs a finite lower bound")

        # Row equilibration keeps the energy rows on the same scale as the 0/1 rows
        scale = np.max(np.abs(a), axis=1) if n else np.zeros(m)
        scale[scale == 0] = 1.0
        a = a / scale[:, None]
        b = b / scale

        slack_cols = []
        for r, sense in enumerate(senses):
            if sense == "<=":
                slack_cols.append((r, 1.0))
            elif sense == ">=":
                slack_cols.append((r, -1.0))
            elif sense != "=":
                raise SolverError(f"unknown row sense '{sense}'")
        n_slack = len(slack_cols)

        self.m = m
        self.n = n
        self.n_total = n + n_slack + m
        self.art_start = n + n_slack
        self.tolerance = tolerance
        self.feasibility_tolerance = max(tolerance * 100.0, 1e-7)
        self.max_iterations = max_iterations
        self.iterations = 0

        full = np.zeros((m, self.n_total))
        full[:, :n] = a
        for s, (r, coef) in enumerate(slack_cols):
            full[r, n + s] = coef

        self.cost = np.zeros(self.n_total)
        self.cost[:n] = c
        self.lower = np.zeros(self.n_total)
        self.upper = np.full(self.n_total, np.inf)
        self.lower[:n] = lower
        self.upper[:n] = upper
        self.a_full = full
        self.b = b
        self._start()

    def _start(self):
        """Artificial basis: nonbasic columns at their lower bound, artificials absorb the residual"""
        self.upper[self.art_start:] = np.inf
        self.x = self.lower.copy()
        residual = self.b - self.a_full[:, :self.art_start] @ self.x[:self.art_start]
        sign = np.where(residual >= 0, 1.0, -1.0)
        # Flipping an artificial column only rescales it, stored bases stay valid
        self.a_full[:, self.art_start:] = np.diag(sign)
        self.sign = sign

        self.tableau = self.a_full * sign[:, None]
        self.basis = np.arange(self.art_start, self.n_total)
        self.is_basic = np.zeros(self.n_total, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(self.n_total, dtype=bool)
        self.xb = np.abs(residual)

    def _refresh(self):
        """Recompute basic values from B^-1 to shed accumulated round-off"""
        b_inv = self.tableau[:, self.art_start:] * self.sign[None, :]
        nonbasic = ~self.is_basic
        rhs = self.b - self.a_full[:, nonbasic] @ self.x[nonbasic]
        self.xb = b_inv @ rhs

    def _iterate(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        degenerate = 0
        bland = False
        tol = self.tolerance
        movable = (self.upper - self.lower) > tol
        while True:
            if self.iterations >= self.max_iterations:
                return ITERATION_LIMIT
            if self.iterations and self.iterations % REFRESH_INTERVAL == 0:
                self._refresh()

            d = cost - cost[self.basis] @ self.tableau
            eligible = np.where(self.at_upper, d > tol, d < -tol) & allowed & movable & ~self.is_basic
            candidates = np.flatnonzero(eligible)
            if candidates.size == 0:
                return OPTIMAL
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])

            direction = -1.0 if self.at_upper[j] else 1.0
            rate = -direction * self.tableau[:, j]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = rate < -PIVOT_TOLERANCE
            inc = rate > PIVOT_TOLERANCE
            ratios[dec] = (self.xb[dec] - lb[dec]) / -rate[dec]
            with np.errstate(invalid="ignore"):
                ratios[inc] = (ub[inc] - self.xb[inc]) / rate[inc]
            ratios = np.maximum(ratios, 0.0)
            flip = self.upper[j] - self.lower[j]

            row_step = float(ratios.min()) if self.m else np.inf
            step = min(row_step, flip)
            if not np.isfinite(step):
                return UNBOUNDED
            self.iterations += 1

            if step <= tol:
                degenerate += 1
                if degenerate > DEGENERATE_RUN and not bland:
                    logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True
            else:
                degenerate = 0
                bland = False

            self.xb += rate * step
            if flip <= row_step:
                self.at_upper[j] = not self.at_upper[j]
                self.x[j] = self.upper[j] if self.at_upper[j] else self.lower[j]
                continue

            ties = np.flatnonzero(ratios <= row_step + tol)
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(rate[ties]))])

            leaving = int(self.basis[r])
            self.at_upper[leaving] = rate[r] > 0
            self.x[leaving] = self.upper[leaving] if self.at_upper[leaving] else self.lower[leaving]
            entering_value = self.x[j] + direction * step

            pivot = self.tableau[r, j]
            self.tableau[r] /= pivot
            column = self.tableau[:, j].copy()
            column[r] = 0.0
            self.tableau -= np.outer(column, self.tableau[r])

            self.basis[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.xb[r] = entering_value

    def solve(self) -> LpResult:
        """Phase 1 drives the artificials to zero, phase 2 optimizes c"""
        allowed = np.ones(self.n_total, dtype=bool)
        phase1_cost = np.zeros(self.n_total)
        phase1_cost[self.art_start:] = 1.0

        status = self._iterate(phase1_cost, allowed)
        if status == ITERATION_LIMIT:
            return self._result(ITERATION_LIMIT)
        self._refresh()
        infeasibility = float(np.sum(self.xb[self.basis >= self.art_start]))
        if infeasibility > self.feasibility_tolerance:
            return self._result(INFEASIBLE)

        # Artificials are pinned at zero; basic ones leave through degenerate pivots
        self.upper[self.art_start:] = 0.0
        allowed[self.art_start:] = False
        status = self._iterate(self.cost, allowed)
        self._refresh()
        return self._result(status)

    def snapshot(self) -> BasisSnapshot:
        """Basis and bound states of the last solve, for a later resolve"""
        return self.basis.copy(), self.at_upper.copy()

    def resolve(self, lower: np.ndarray, upper: np.ndarray, start: BasisSnapshot) -> LpResult:
        """Re-optimize under new structural bounds from a stored optimal basis

        The stored basis stays dual feasible when only bounds move, so the dual
        simplex restores primal feasibility; any numerical trouble falls back
        to a cold two-phase solve.
        """
        self.iterations = 0
        self.lower[:self.n] = np.asarray(lower, dtype=float)
        self.upper[:self.n] = np.asarray(upper, dtype=float)
        self.upper[self.art_start:] = 0.0
        allowed = np.ones(self.n_total, dtype=bool)
        allowed[self.art_start:] = False

        if not self._factor(*start) or not self._restore_dual_feasibility(allowed):
            return self._cold_start()
        status = self._dual_iterate(allowed)
        if status == OPTIMAL:
            status = self._iterate(self.cost, allowed)
        if status == ITERATION_LIMIT:
            return self._cold_start()
        self._refresh()
        return self._result(status)

    def _factor(self, basis: np.ndarray, at_upper: np.ndarray) -> bool:
        """Rebuild the tableau for a given basis; False when it is singular"""
        basis = np.asarray(basis, dtype=int)
        if basis.shape != (self.m,):
            return False
        try:
            tableau = np.linalg.solve(self.a_full[:, basis], self.a_full)
        except np.linalg.LinAlgError:
            return False
        if not np.allclose(tableau[:, basis], np.eye(self.m), atol=1e-6):
            return False

        self.tableau = tableau
        self.basis = basis.copy()
        self.is_basic = np.zeros(self.n_total, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.asarray(at_upper, dtype=bool) & np.isfinite(self.upper) & ~self.is_basic
        self.at_upper &= (self.upper - self.lower) > self.tolerance
        self.x = np.where(self.at_upper, self.upper, self.lower)
        self._refresh()
        return True

    def _restore_dual_feasibility(self, allowed: np.ndarray) -> bool:
        """Move boxed columns with wrong-signed reduced cost to their other bound"""
        d = self.cost - self.cost[self.basis] @ self.tableau
        movable = allowed & ~self.is_basic & ((self.upper - self.lower) > self.tolerance)
        tol = self.feasibility_tolerance
        wrong = movable & np.where(self.at_upper, d > tol, d < -tol)
        if not wrong.any():
            return True
        if not np.all(np.isfinite(self.upper[wrong])):
            return False
        self.at_upper[wrong] = ~self.at_upper[wrong]
        self.x[wrong] = np.where(self.at_upper[wrong], self.upper[wrong], self.lower[wrong])
        self._refresh()
        return True

    def _dual_iterate(self, allowed: np.ndarray) -> str:
        """Bounded dual simplex: most infeasible row leaves, ratio |d_j| / |alpha_rj| picks the entering column"""
        tol = self.tolerance
        movable = (self.upper - self.lower) > tol
        budget = min(self.max_iterations, max(DUAL_ITERATIONS_PER_ROW * self.m, 1000))
        while True:
            if self.m == 0:
                return OPTIMAL
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            below = lb - self.xb
            above = self.xb - ub
            gap = np.maximum(below, above)
            r = int(np.argmax(gap))
            if gap[r] <= self.feasibility_tolerance:
                return OPTIMAL
            if self.iterations >= budget:
                return ITERATION_LIMIT

            raise_row = below[r] > above[r]
            row = self.tableau[r]
            d = self.cost - self.cost[self.basis] @ self.tableau
            candidate = allowed & movable & ~self.is_basic
            if raise_row:
                eligible = np.where(self.at_upper, row > PIVOT_TOLERANCE, row < -PIVOT_TOLERANCE)
            else:
                eligible = np.where(self.at_upper, row < -PIVOT_TOLERANCE, row > PIVOT_TOLERANCE)
            columns = np.flatnonzero(candidate & eligible)
            if columns.size == 0:
                return INFEASIBLE
            ratios = np.abs(d[columns]) / np.abs(row[columns])
            ties = columns[ratios <= ratios.min() + tol]
            j = int(ties[np.argmax(np.abs(row[ties]))])
            self.iterations += 1

            # The leaving column settles on the bound it violated
            leaving = int(self.basis[r])
            self.at_upper[leaving] = not raise_row
            self.x[leaving] = ub[r] if not raise_row else lb[r]

            self.tableau[r] /= self.tableau[r, j]
            column = self.tableau[:, j].copy()
            column[r] = 0.0
            self.tableau -= np.outer(column, self.tableau[r])

            self.basis[r] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            self.at_upper[j] = False
            self._refresh()

    def _cold_start(self) -> LpResult:
        spent = self.iterations
        logger.debug("warm start abandoned after %d dual pivots, solving from scratch", spent)
        self.iterations = 0
        self._start()
        result = self.solve()
        result.iterations += spent
        return result

    def _result(self, status: str) -> LpResult:
        values = self.x.copy()
        values[self.basis] = self.xb
        x = values[:self.n]
        objective = float(self.cost[:self.n] @ x) if status == OPTIMAL else float("nan")
        return LpResult(status=status, x=x, objective=objective, iterations=self.iterations)


def solve_lp(c, a, b, senses, lower, upper, tolerance: float = 1e-9,
             max_iterations: int = 100000) -> LpResult:
    """Convenience wrapper around BoundedSimplex"""
    return BoundedSimplex(c, a, b, senses, lower, upper, tolerance, max_iterations).solve()
