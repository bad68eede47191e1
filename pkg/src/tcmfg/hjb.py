"""Backward value equation -du/dt = F(Lu) + f with terminal data u(T) = g.

Explicit monotone Euler stepping on the stencil operator: each macro step is
subdivided until dt * sup F'(Lu) * (stencil mass) stays below one, which makes
every step order-preserving and gives the discrete comparison principle the
checkers in this module rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import CheckReport, GridFunction, GridSpec
from .hamiltonian import Hamiltonian
from .levy import DiscreteLevyOp, holder_seminorm


class InstabilityError(RuntimeError):
    """The computed trajectory left its a priori sup bound."""


@dataclass
class ValueTrajectory:
    """Value slices u[0..M] with the operator image Lu cached per slice."""

    u: list
    lu: list
    grid: GridSpec

    @property
    def dt(self) -> float:
        return self.grid.dt

    def sup_norms(self) -> np.ndarray:
        return np.array([g.sup_norm() for g in self.u])


@dataclass
class ControlField:
    """Feedback rates b = F'(Lu) per slice with recorded range."""

    b: list
    b_min: float
    b_max: float


def _slices(f, grid: GridSpec):
    """Normalize time-indexed data to M+1 value arrays."""
    if f is None:
        z = np.zeros(grid.shape)
        return [z] * (grid.M + 1)
    if isinstance(f, GridFunction):
        return [f.values] * (grid.M + 1)
    out = list(f)
    if len(out) != grid.M + 1:
        raise ValueError(f"need {grid.M + 1} time slices, got {len(out)}")
    return [s.values if isinstance(s, GridFunction) else np.asarray(s, dtype=float)
            for s in out]


def solve_hjb(g: GridFunction, f, H: Hamiltonian, op: DiscreteLevyOp,
              grid: GridSpec | None = None, cfl_target: float = 0.9) -> ValueTrajectory:
    """March u backward from g with uⁿ = uⁿ⁺¹ + dt (F(Luⁿ⁺¹) + fⁿ⁺¹).

    f may be None, a single GridFunction (constant in time), or one slice per
    time node; within a macro step the source is frozen at its right-endpoint
    slice. Substep counts only grow along the march, so the schedule is
    deterministic. Raises InstabilityError when a slice leaves the bound
    sup|g| + (T - t)(sup|f| + |F(0)|).
    """
    if grid is None:
        grid = g.grid
    if op.grid is not grid and op.grid != grid:
        raise ValueError("operator and data live on different grids")
    if not H.differentiable:
        raise ValueError(
            f"Hamiltonian {H.variant!r} is not differentiable; the monotone "
            "step needs F'")
    fvals = _slices(f, grid)
    dt, times = grid.dt, grid.times()
    mass = op.total_mass
    f_sup = max(float(np.max(np.abs(s))) for s in fvals)
    g_sup = g.sup_norm()
    f0 = abs(float(H.F(0.0)))

    u = [None] * (grid.M + 1)
    lu = [None] * (grid.M + 1)
    u[grid.M] = g.values.copy()
    lu[grid.M] = op.apply(u[grid.M])

    s = 1
    for n in range(grid.M - 1, -1, -1):
        fn1 = fvals[n + 1]
        b_entry = float(np.max(H.F_prime(lu[n + 1])))
        if b_entry > 0:
            s = max(s, math.ceil(dt * b_entry * mass / cfl_target))
        for _ in range(64):
            dt_sub = dt / s
            v, lv = u[n + 1], lu[n + 1]
            violated = False
            for _ in range(s):
                b_max = float(np.max(H.F_prime(lv)))
                if dt_sub * b_max * mass > 1.0:
                    violated = True
                    break
                v = v + dt_sub * (H.F(lv) + fn1)
                lv = op.apply(v)
            if not violated:
                break
            s *= 2
        else:
            raise InstabilityError(
                "substep count would not stabilize the monotone bound "
                "dt * sup F'(Lu) * mass <= 1")
        u[n], lu[n] = v, lv

        bound = g_sup + (grid.T - times[n]) * (f_sup + f0)
        got = float(np.max(np.abs(v)))
        if got > bound + 1e-9 * (1.0 + bound):
            raise InstabilityError(
                f"sup|u(t={times[n]:.6g})| = {got:.6g} exceeds the comparison "
                f"bound sup|g| + (T-t)(sup|f| + |F(0)|) = {bound:.6g}")

    return ValueTrajectory(u=[GridFunction(a, grid) for a in u],
                           lu=[GridFunction(a, grid) for a in lu], grid=grid)


def control_field(traj: ValueTrajectory, H: Hamiltonian) -> ControlField:
    """Pointwise feedback b = F'(Lu) on every slice."""
    if H.F_prime is None:
        raise ValueError(f"Hamiltonian {H.variant!r} has no derivative")
    bs = [H.F_prime(g.values) for g in traj.lu]
    lo = min(float(np.min(b)) for b in bs)
    hi = max(float(np.max(b)) for b in bs)
    if lo < 0:
        raise ValueError(f"negative control rate {lo}; F' must be nonnegative")
    return ControlField(b=[GridFunction(b, traj.grid) for b in bs],
                        b_min=lo, b_max=hi)


def comparison_check(traj1: ValueTrajectory, traj2: ValueTrajectory,
                     data1, data2, tol: float | None = None) -> CheckReport:
    """Slicewise ||u1 - u2|| against (T-t) ||f1 - f2|| + ||g1 - g2||.

    data are (f, g) pairs in the formats solve_hjb accepts. The monotone
    scheme satisfies the bound exactly, so the default tolerance only covers
    round-off.
    """
    grid = traj1.grid
    f1, g1 = data1
    f2, g2 = data2
    df = max(float(np.max(np.abs(a - b)))
             for a, b in zip(_slices(f1, grid), _slices(f2, grid)))
    dg = float(np.max(np.abs(g1.values - g2.values)))
    if tol is None:
        tol = 1e-9 * (1.0 + dg + grid.T * df)
    times = grid.times()
    rows = []
    for n, t in enumerate(times):
        gap = float(np.max(np.abs(traj1.u[n].values - traj2.u[n].values)))
        bound = (grid.T - t) * df + dg + tol
        rows.append((f"t={t:.6g}", bound, gap, gap - bound))
    return CheckReport(name="comparison", rows=rows)


def holder_report(traj: ValueTrajectory, alpha: float, m_bound: float,
                  triplet=None) -> CheckReport:
    """Windowed seminorms of u (exponent alpha) and Lu (alpha - 2 sigma).

    Per slice, [u(t)]_alpha is compared against m_bound (T - t + 1). When a
    triplet with a small-jump scaling constant is given, [Lu(t)] at the
    reduced exponent is compared against
    4 (K/(alpha - 2 sigma) + nu(B1^c)) m_bound (T - t + 1).
    """
    grid = traj.grid
    times = grid.times()
    rows = []
    for n, t in enumerate(times):
        bound = m_bound * (grid.T - t + 1.0)
        got = holder_seminorm(traj.u[n], alpha)
        rows.append((f"u@t={t:.6g}", bound, got, got - bound))
    if triplet is not None and triplet.jump is not None:
        hc = triplet.jump.holder_constant()
        if hc is None:
            raise ValueError("jump measure declares no small-jump scaling")
        K, sigma = hc
        beta = alpha - 2.0 * sigma
        if beta <= 0:
            raise ValueError(f"need alpha > 2 sigma, got alpha={alpha}, "
                             f"2 sigma={2 * sigma}")
        c_op = 4.0 * (K / beta + triplet.jump.tail_mass(1.0))
        for n, t in enumerate(times):
            bound = c_op * m_bound * (grid.T - t + 1.0)
            got = holder_seminorm(traj.lu[n], beta)
            rows.append((f"Lu@t={t:.6g}", bound, got, got - bound))
    return CheckReport(name="holder", rows=rows)
