"""The coupled game: smoothing couplings, the d0 metric, damped fixed point.

Couplings are negative squared-smoothing convolutions, monotone by
construction: f(m) = -A (rho~ * rho * m) gives
int (f(m1) - f(m2)) d(m1 - m2) = -A ||rho * (m1 - m2)||^2 <= 0 exactly
(Parseval). The fixed point over measure trajectories is damped Picard with
residuals measured in the sup-over-time d0 metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .fp import MeasureTrajectory, solve_fp
from .grid import CheckReport, GridFunction, GridSpec, ProbabilityVector
from .hamiltonian import Hamiltonian
from .hjb import ControlField, ValueTrajectory, control_field, solve_hjb
from .levy import build_epsilon_approx


@dataclass
class Coupling:
    """Monotone smoothing coupling m -> -amplitude * (rho~ * rho * m).

    `kernel` is a probability kernel on the grid (cells sum to one after the
    cell-volume weighting); `terminal` marks couplings applied to m(T).
    """

    kernel: GridFunction
    amplitude: float = 1.0
    terminal: bool = False
    sign: int = -1
    _sq_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        g = self.kernel.grid
        total = float(np.sum(self.kernel.values)) * g.cell_volume
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-8):
            raise ValueError(f"kernel mass {total} is not 1")
        rho_hat = np.fft.fftn(self.kernel.values)
        # smoothing square rho~ * rho has symbol |rho_hat|^2 (one cell volume
        # for the inner convolution integral)
        self._sq_hat = (np.abs(rho_hat) ** 2) * g.cell_volume

    @staticmethod
    def gaussian(grid: GridSpec, width: float, amplitude: float = 1.0,
                 terminal: bool = False) -> "Coupling":
        xs = grid.coords()
        r2 = sum(x ** 2 for x in xs)
        vals = np.exp(-r2 / (2.0 * width ** 2))
        vals /= vals.sum() * grid.cell_volume
        return Coupling(GridFunction(vals, grid), amplitude=amplitude,
                        terminal=terminal)

    def __call__(self, m: ProbabilityVector) -> GridFunction:
        hat = np.fft.fftn(m.weights) * self._sq_hat
        out = self.sign * self.amplitude * np.real(np.fft.ifftn(hat))
        return GridFunction(out, self.kernel.grid)

    def monotonicity_gap(self, m1: ProbabilityVector, m2: ProbabilityVector):
        """(sum (f(m1)-f(m2)) d(m1-m2), -amplitude ||rho*(m1-m2)||_{L2}^2).

        The two are equal by Parseval; both are <= 0.
        """
        g = self.kernel.grid
        dm = m1.weights - m2.weights
        lhs = float(np.sum((self(m1).values - self(m2).values) * dm))
        conv = np.real(np.fft.ifftn(np.fft.fftn(self.kernel.values)
                                    * np.fft.fftn(dm)))
        rhs = -self.amplitude * float(np.sum(conv ** 2)) * g.cell_volume
        return lhs, rhs


def coupling_eval(coupling: Coupling | None, m: ProbabilityVector,
                  grid: GridSpec) -> GridFunction:
    if coupling is None:
        return GridFunction.constant(0.0, grid)
    return coupling(m)


_LP_CACHE: dict = {}


def _adjacency(grid: GridSpec):
    """Sparse +-(psi_next - psi_cell) <= h rows over torus-adjacent pairs."""
    key = (grid.d, grid.N)
    if key in _LP_CACHE:
        return _LP_CACHE[key]
    n = grid.N ** grid.d
    idx = np.arange(n).reshape(grid.shape)
    pairs = []
    for axis in range(grid.d):
        nxt = np.roll(idx, -1, axis=axis)
        pairs.append(np.stack([idx.reshape(-1), nxt.reshape(-1)], axis=1))
    pairs = np.concatenate(pairs, axis=0)
    rows = np.repeat(np.arange(len(pairs)), 2)
    cols = pairs.reshape(-1)
    vals = np.tile([1.0, -1.0], len(pairs))
    half = sparse.csr_matrix((vals, (rows, cols)), shape=(len(pairs), n))
    a_ub = sparse.vstack([half, -half], format="csr")
    _LP_CACHE[key] = a_ub
    return a_ub


def d0_distance(mu: ProbabilityVector, nu: ProbabilityVector) -> float:
    """sup (mu - nu)[psi] over |psi| <= 1 with unit Lipschitz slope.

    Solved as a linear program: box bounds plus adjacent-cell difference
    constraints |psi_j - psi_i| <= h along each axis (torus adjacency), which
    chain to the grid path metric. Upper-bounded by min(TV, 2).
    """
    grid = mu.grid
    if grid != nu.grid:
        raise ValueError("measures live on different grids")
    dm = mu.weights.reshape(-1) - nu.weights.reshape(-1)
    if float(np.sum(np.abs(dm))) < 1e-15:
        return 0.0
    a_ub = _adjacency(grid)
    b_ub = np.full(a_ub.shape[0], grid.h)
    res = linprog(-dm, A_ub=a_ub, b_ub=b_ub, bounds=(-1.0, 1.0),
                  method="highs")
    if not res.success:
        raise RuntimeError(
            f"d0 linear program failed: {res.message} (status {res.status}, "
            f"iterations {getattr(res, 'nit', '?')})")
    return float(-res.fun)


def d0_greedy_1d(mu: ProbabilityVector, nu: ProbabilityVector) -> float:
    """1D lower bound: ramp the test function against the CDF difference.

    Exact when the CDF difference changes sign at most once between the box
    clamps; used as an independent cross-check of the LP on such fixtures.
    """
    grid = mu.grid
    if grid.d != 1:
        raise ValueError("greedy cross-check is one-dimensional")
    dm = mu.weights - nu.weights
    s = np.cumsum(dm)
    steps = -grid.h * np.sign(s[:-1])
    psi = np.concatenate([[0.0], np.cumsum(steps)])
    lo, hi = psi.min(), psi.max()
    if hi - lo > 2.0:
        # rebuild with running clamps once the box binds
        psi = np.zeros(grid.N)
        for i in range(grid.N - 1):
            psi[i + 1] = min(1.0, max(-1.0, psi[i] - grid.h * np.sign(s[i])))
        lo, hi = psi.min(), psi.max()
    psi = psi - (hi + lo) / 2.0
    return float(np.sum(psi * dm))


def critical_exponent(sigma: float) -> float:
    """Largest power-gain exponent q admitting the uniqueness regime."""
    return (1.0 + sigma) / (2.0 * sigma * (2.0 - sigma))


@dataclass(frozen=True)
class UniquenessCheck:
    """Arithmetic of the smallness condition for two-solution agreement."""

    sigma: float
    alpha: float
    gamma: float
    value: float
    satisfied: bool
    q_critical: float

    def describe(self) -> str:
        rel = "<" if self.satisfied else ">="
        return (f"2s/(a-2s)(1+1/(1-2s)) = {self.value:.6g} {rel} gamma = "
                f"{self.gamma:.6g}; q_c = {self.q_critical:.6g}")


def uniqueness_condition(sigma: float, alpha: float, gamma: float) -> UniquenessCheck:
    """Evaluate 2s/(alpha - 2s) (1 + 1/(1 - 2s)) < gamma at 2s = 2*sigma."""
    two_s = 2.0 * sigma
    if not (0 < two_s < 1):
        raise ValueError("need 0 < 2 sigma < 1")
    if alpha <= two_s:
        raise ValueError("need alpha > 2 sigma")
    value = two_s / (alpha - two_s) * (1.0 + 1.0 / (1.0 - two_s))
    return UniquenessCheck(sigma=sigma, alpha=alpha, gamma=gamma, value=value,
                           satisfied=value < gamma,
                           q_critical=critical_exponent(sigma))


@dataclass
class MFGSolution:
    """Converged (or flagged) fixed-point bundle with its solver state."""

    u: ValueTrajectory
    m: MeasureTrajectory
    b: ControlField
    iterations: int
    residual_history: list
    converged: bool
    hamiltonian: Hamiltonian
    coupling_f: Coupling | None
    coupling_g: Coupling | None
    op: object


def solve_mfg(scenario) -> MFGSolution:
    """Damped Picard over measure trajectories.

    Needs scenario attributes: grid, triplet, epsilon, hamiltonian,
    coupling_f, coupling_g, m0, damping, tol, max_iter. Each sweep couples
    (f, g) to the current trajectory, solves the value equation, extracts the
    feedback rates, pushes the measure forward, and blends the result with
    weight `damping` (halved on residual increase, floored at damping/64).
    Without couplings the pair is uncoupled and one sweep is exact. A run
    hitting max_iter returns converged=False with the full residual history.

    The optional attribute `init_guess` seeds the iteration: a
    ProbabilityVector (held constant in time) or a MeasureTrajectory. The
    game's initial measure stays scenario.m0 regardless; distinct guesses
    converging to the same trajectory is the uniqueness probe.
    """
    grid = scenario.grid
    H = scenario.hamiltonian
    op = build_epsilon_approx(scenario.triplet, scenario.epsilon, grid)
    m0 = scenario.m0
    cf, cg = scenario.coupling_f, scenario.coupling_g

    guess = getattr(scenario, "init_guess", None)
    if guess is None:
        m_slices = [m0] * (grid.M + 1)
    elif isinstance(guess, ProbabilityVector):
        m_slices = [m0] + [guess] * grid.M
    else:
        m_slices = list(guess.m)
        if len(m_slices) != grid.M + 1:
            raise ValueError("init_guess trajectory has the wrong length")
    history = []
    lam = scenario.damping
    lam_floor = scenario.damping / 64.0
    prev = math.inf
    uncoupled = cf is None and cg is None

    it = 0
    converged = False
    u_traj = b_field = None
    while it < scenario.max_iter:
        it += 1
        f_sl = None if cf is None else [cf(m) for m in m_slices]
        g_fn = coupling_eval(cg, m_slices[-1], grid)
        u_traj = solve_hjb(g_fn, f_sl, H, op, grid=grid)
        b_field = control_field(u_traj, H)
        m_new = solve_fp(m0, b_field, op, grid=grid)
        if uncoupled:
            m_slices = m_new.m
            history.append(0.0)
            converged = True
            break
        blended = [m_slices[0]]
        for n in range(1, grid.M + 1):
            w = (1.0 - lam) * m_slices[n].weights + lam * m_new.m[n].weights
            blended.append(ProbabilityVector(
                w, grid, _ops=max(m_slices[n]._ops, m_new.m[n]._ops) + 1))
        resid = max(d0_distance(blended[n], m_slices[n])
                    for n in range(1, grid.M + 1))
        history.append(resid)
        m_slices = blended
        if resid <= scenario.tol:
            converged = True
            break
        if resid > prev:
            lam = max(lam / 2.0, lam_floor)
        prev = resid

    return MFGSolution(u=u_traj, m=MeasureTrajectory(m=m_slices, grid=grid),
                       b=b_field, iterations=it, residual_history=history,
                       converged=converged, hamiltonian=H, coupling_f=cf,
                       coupling_g=cg, op=op)


def duality_residual(sol1: MFGSolution, sol2: MFGSolution,
                     identity_tol: float = math.inf,
                     sign_tol: float = 1e-12) -> CheckReport:
    """Cross-solution duality audit.

    Reports the two sides of the accumulated pairing identity
    d/dt <m1 - m2, u1 - u2> = m1[du/dt + F'(Lu1) v] - m2[du/dt + F'(Lu2) v],
    v = Lu1 - Lu2, their gap (O(dt) for consistent runs), the coupling
    monotonicity signs, and the worst convexity-gap defect of F.
    """
    grid = sol1.u.grid
    H = sol1.hamiltonian
    dt = grid.dt
    du = [a.values - b.values for a, b in zip(sol1.u.u, sol2.u.u)]
    dm = [a.weights - b.weights for a, b in zip(sol1.m.m, sol2.m.m)]
    v1 = [g.values for g in sol1.u.lu]
    v2 = [g.values for g in sol2.u.lu]

    lhs = float(np.sum(dm[-1] * du[-1]) - np.sum(dm[0] * du[0]))
    rhs = 0.0
    for n in range(grid.M):
        dudt = (du[n + 1] - du[n]) / dt
        v = v1[n] - v2[n]
        rhs += dt * float(
            np.sum(sol1.m.m[n].weights * (dudt + H.F_prime(v1[n]) * v))
            - np.sum(sol2.m.m[n].weights * (dudt + H.F_prime(v2[n]) * v)))
    gap = abs(lhs - rhs)

    rows = [("identity lhs", math.inf, lhs, -math.inf),
            ("identity rhs", math.inf, rhs, -math.inf),
            ("identity gap", identity_tol, gap, gap - identity_tol)]

    if sol1.coupling_g is not None:
        g1 = sol1.coupling_g(sol1.m.m[-1]).values
        g2 = sol2.coupling_g(sol2.m.m[-1]).values
        mono_t = float(np.sum(dm[-1] * (g1 - g2)))
        rows.append(("terminal monotonicity", sign_tol, mono_t,
                     mono_t - sign_tol))
    if sol1.coupling_f is not None:
        mono_r = 0.0
        for n in range(grid.M + 1):
            f1 = sol1.coupling_f(sol1.m.m[n]).values
            f2 = sol2.coupling_f(sol2.m.m[n]).values
            wt = dt if 0 < n < grid.M else dt / 2.0
            mono_r += wt * float(np.sum(dm[n] * (f1 - f2)))
        rows.append(("running monotonicity", sign_tol, mono_r,
                     mono_r - sign_tol))

    worst = 0.0
    for n in range(grid.M + 1):
        a, b = v1[n], v2[n]
        gap1 = H.F(a) - H.F(b) - H.F_prime(b) * (a - b)
        gap2 = H.F(b) - H.F(a) - H.F_prime(a) * (b - a)
        worst = max(worst, -float(np.min(gap1)), -float(np.min(gap2)))
    rows.append(("convexity defect", sign_tol, worst, worst - sign_tol))
    return CheckReport(name="duality", rows=rows)
