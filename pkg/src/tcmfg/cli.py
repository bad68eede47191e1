"""Scenario runner: parse a flat key=value config, validate, solve, verify.

Usage: tcmfg run scenario.cfg [--out DIR] [--mode mfg|hjb|fp|dual]
                              [--force] [--seed N] [--format csv|human]

Exit codes: 0 all checks pass, 1 check failure, 2 parse/validation error,
3 solver divergence. Outputs are deterministic for a given config and seed;
wall-clock timings go to a separate file so the CSV surface stays
byte-identical across runs and thread settings.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import fp as fp_mod
from . import hjb as hjb_mod
from . import mfg as mfg_mod
from .grid import GridFunction, GridSpec, ProbabilityVector, write_binary
from .hamiltonian import Hamiltonian, closed_form
from .levy import (AnisotropicStableSpec, AtomsSpec, CGMYSpec, LevyTriplet,
                   StableSpec, TruncatedSpec, build_epsilon_approx,
                   holder_seminorm)


class ConfigError(ValueError):
    """Malformed scenario file; message carries the line number."""


CHECK_NAMES = ("mass", "comparison", "holder", "duality", "holmgren",
               "uniqueness")

CHECK_INFO = {
    "solver": "fixed-point residual reached the configured tolerance",
    "mass": "every measure slice keeps unit total mass and nonnegativity",
    "comparison": "value gap stays under the data-difference envelope",
    "holder": "value and operator slices stay inside the regularity envelope",
    "duality": "cross-solution pairing identity and monotonicity signs",
    "holmgren": "dual-transport uniqueness probe on the measure flow",
    "uniqueness": "independent fixed-point initializations agree in d0",
    "max-principle": "dual slices stay inside the terminal range",
}


def parse_config(path: str) -> dict:
    """Flat dotted-key format: `section.key = value`, # comments allowed."""
    cfg = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value', got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{ln}: empty key or value")
            if key in cfg:
                raise ConfigError(f"{path}:{ln}: duplicate key {key!r}")
            cfg[key] = value
    return cfg


def _get(cfg, key, cast, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        if cast is bool:
            return cfg[key].lower() in ("1", "true", "yes", "on")
        return cast(cfg[key])
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"key {key!r}: cannot read {cfg[key]!r} ({exc})") from exc


def _floats(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])


def _build_triplet(cfg, d: int) -> LevyTriplet:
    kind = _get(cfg, "levy.type", str, required=True).lower()
    if kind == "stable":
        jump = StableSpec(sigma=_get(cfg, "levy.sigma", float, required=True),
                          intensity=_get(cfg, "levy.intensity", float, 1.0), d=d)
    elif kind == "cgmy":
        jump = CGMYSpec(C=_get(cfg, "levy.c", float, required=True),
                        G=_get(cfg, "levy.g", float, required=True),
                        M=_get(cfg, "levy.m", float, required=True),
                        Y=_get(cfg, "levy.y", float, required=True), d=d)
    elif kind == "atoms":
        # pos:mass;pos:mass with d comma-separated coordinates per pos
        atoms = []
        for part in _get(cfg, "levy.atoms", str, required=True).split(";"):
            pos, _, mass = part.partition(":")
            atoms.append((_floats(pos), float(mass)))
        jump = AtomsSpec(atoms=tuple(atoms), d=d)
    elif kind == "anisotropic":
        comps = []
        for part in _get(cfg, "levy.components", str, required=True).split(";"):
            axis, sig, inten = part.split(":")
            comps.append((int(axis), float(sig), float(inten)))
        jump = AnisotropicStableSpec(components=tuple(comps))
    elif kind == "truncated-stable":
        jump = TruncatedSpec(
            inner=StableSpec(sigma=_get(cfg, "levy.sigma", float, required=True),
                             intensity=_get(cfg, "levy.intensity", float, 1.0), d=d),
            radius=_get(cfg, "levy.radius", float, required=True))
    elif kind == "none":
        jump = None
    else:
        raise ConfigError(f"levy.type {kind!r} not recognized")

    drift = _get(cfg, "levy.drift", _floats, np.zeros(d))
    if drift.shape != (d,):
        raise ConfigError(f"levy.drift needs {d} components")
    diff = _get(cfg, "levy.diffusion", _floats, np.zeros(1))
    if diff.size == 1:
        a = float(diff[0]) * np.eye(d)
    elif diff.size == d:
        a = np.diag(diff)
    else:
        raise ConfigError("levy.diffusion is a scalar or one entry per axis")
    return LevyTriplet(c=drift, a=a, jump=jump)


def _build_hamiltonian(cfg) -> Hamiltonian:
    variant = _get(cfg, "hamiltonian.variant", str, required=True)
    names = {"indicator-point": ("kappa",), "indicator-interval": ("kappa",),
             "regularized-interval": ("kappa", "eps"), "power": ("q",),
             "entropy": (), "shifted": ("kappa",)}
    v = variant.replace("_", "-").strip().lower()
    if v not in names:
        raise ConfigError(f"hamiltonian.variant {variant!r} not recognized")
    params = {}
    for p in names[v]:
        params[p] = _get(cfg, f"hamiltonian.{p}", float, required=True)
    if v == "shifted":
        base = _get(cfg, "hamiltonian.base", str, required=True)
        base = base.replace("_", "-").strip().lower()
        if base not in names or base == "shifted":
            raise ConfigError(f"hamiltonian.base {base!r} not usable as a base")
        bparams = {p: _get(cfg, f"hamiltonian.base.{p}", float, required=True)
                   for p in names[base]}
        params["base"] = closed_form(base, **bparams)
    return closed_form(v, **params)


def _build_coupling(cfg, grid: GridSpec, section: str, terminal: bool):
    kind = _get(cfg, f"{section}.kernel", str)
    if kind is None:
        return None
    if kind.lower() != "gaussian":
        raise ConfigError(f"{section}.kernel {kind!r} not recognized")
    return mfg_mod.Coupling.gaussian(
        grid, width=_get(cfg, f"{section}.width", float, required=True),
        amplitude=_get(cfg, f"{section}.amplitude", float, 1.0),
        terminal=terminal)


def _gauss_density(grid: GridSpec, center, width: float) -> np.ndarray:
    xs = grid.coords()
    c = np.atleast_1d(np.asarray(center, dtype=float))
    r2 = sum((x - c[i]) ** 2 for i, x in enumerate(xs))
    return np.exp(-r2 / (2.0 * width ** 2))


def _build_m0(cfg, grid: GridSpec) -> ProbabilityVector:
    kind = _get(cfg, "m0.kind", str, "uniform").lower()
    if kind == "uniform":
        return ProbabilityVector.uniform(grid)
    if kind == "gaussian":
        center = _get(cfg, "m0.center", _floats, np.zeros(grid.d))
        width = _get(cfg, "m0.width", float, required=True)
        return ProbabilityVector.from_density(_gauss_density(grid, center, width), grid)
    if kind == "dirac":
        idx = _get(cfg, "m0.index", _floats, required=True).astype(int)
        return ProbabilityVector.dirac(tuple(idx) if grid.d > 1 else int(idx[0]), grid)
    if kind == "mixture":
        centers = _get(cfg, "m0.centers", str, required=True).split(";")
        widths = _floats(_get(cfg, "m0.widths", str, required=True))
        weights = _floats(_get(cfg, "m0.weights", str, required=True))
        dens = sum(w * _gauss_density(grid, _floats(c), s) /
                   _gauss_density(grid, _floats(c), s).sum()
                   for c, s, w in zip(centers, widths, weights))
        return ProbabilityVector.from_density(dens, grid)
    raise ConfigError(f"m0.kind {kind!r} not recognized")


@dataclass
class Scenario:
    """Validated bundle of one run: discretization, data, solver knobs."""

    grid: GridSpec
    triplet: LevyTriplet
    epsilon: float
    hamiltonian: Hamiltonian
    coupling_f: object
    coupling_g: object
    m0: ProbabilityVector
    damping: float
    tol: float
    max_iter: int
    checks: tuple
    seed: int
    fp_rate: float = 1.0
    dual_phi: str = "one"
    holder_alpha: float = 1.0
    init_guess: object = None

    @staticmethod
    def from_config(cfg: dict, seed_override=None) -> "Scenario":
        grid = GridSpec(d=_get(cfg, "grid.d", int, 1),
                        R=_get(cfg, "grid.r", float, required=True),
                        N=_get(cfg, "grid.n", int, required=True),
                        T=_get(cfg, "grid.t", float, required=True),
                        M=_get(cfg, "grid.m", int, required=True))
        checks = tuple(
            t.strip() for t in _get(cfg, "checks", str, "mass").split(",") if t.strip())
        for c in checks:
            if c not in CHECK_NAMES:
                raise ConfigError(f"unknown check {c!r}; pick from {CHECK_NAMES}")
        seed = _get(cfg, "seed", int, 0) if seed_override is None else seed_override
        return Scenario(
            grid=grid,
            triplet=_build_triplet(cfg, grid.d),
            epsilon=_get(cfg, "operator.epsilon", float, required=True),
            hamiltonian=_build_hamiltonian(cfg),
            coupling_f=_build_coupling(cfg, grid, "coupling_f", terminal=False),
            coupling_g=_build_coupling(cfg, grid, "coupling_g", terminal=True),
            m0=_build_m0(cfg, grid),
            damping=_get(cfg, "solver.damping", float, 0.5),
            tol=_get(cfg, "solver.tol", float, 1e-5),
            max_iter=_get(cfg, "solver.max_iter", int, 200),
            checks=checks,
            seed=seed,
            fp_rate=_get(cfg, "fp.rate", float, 1.0),
            dual_phi=_get(cfg, "dual.phi", str, "one"),
            holder_alpha=_get(cfg, "check.alpha", float, 1.0))

    def validate(self) -> list:
        """Fail-fast precondition sweep; returns (level, message) entries."""
        issues = []
        if not self.hamiltonian.differentiable:
            issues.append(("error", "derivative-regularity: the backward solve "
                           f"needs F'; variant {self.hamiltonian.variant!r} has "
                           "a corner"))
        if not (0 < self.epsilon < 1):
            issues.append(("error", "jump-cutoff-range: operator.epsilon must "
                           f"lie in (0, 1), got {self.epsilon}"))
        elif self.epsilon < self.grid.h:
            issues.append(("error", "cutoff-resolvable: operator.epsilon "
                           f"{self.epsilon} is below the grid spacing {self.grid.h}"))
        if self.grid.R <= 1:
            issues.append(("error", "domain-covers-unit-ball: grid.r must "
                           f"exceed 1, got {self.grid.R}"))
        if not (0 < self.damping <= 1):
            issues.append(("error", f"damping-range: need 0 < damping <= 1, "
                           f"got {self.damping}"))
        if self.hamiltonian.kappa > 0:
            issues.append(("note", "nondegenerate-control: F' >= "
                           f"{self.hamiltonian.kappa} > 0 by construction"))
        jump = self.triplet.jump
        hc = jump.holder_constant() if jump is not None else None
        if hc is not None:
            K, sigma = hc
            if self.holder_alpha > 2 * sigma and 2 * sigma < 1:
                uc = mfg_mod.uniqueness_condition(sigma, self.holder_alpha,
                                                  self.hamiltonian.gamma)
                level = "note" if uc.satisfied else "warn"
                tag = "inside" if uc.satisfied else "outside"
                issues.append((level, f"uniqueness-regime: {tag}; {uc.describe()}"))
        return issues


@dataclass
class Report:
    """Deterministic run record: check rows plus output manifest."""

    scenario_hash: str
    seed: int
    mode: str
    rows: list = field(default_factory=list)
    files: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    converged: bool = True
    notes: list = field(default_factory=list)

    def add(self, check: str, label: str, bound: float, measured: float):
        bound, measured = float(bound), float(measured)
        self.rows.append((check, label, bound, measured, measured - bound,
                          measured <= bound))

    @property
    def all_pass(self) -> bool:
        return all(r[5] for r in self.rows)


def _phi_family(grid: GridSpec):
    xs = grid.coords()
    r2 = sum(x ** 2 for x in xs)
    x0 = xs[0]
    tent = np.clip(1.0 - np.abs(x0), 0.0, None)
    return [GridFunction.constant(1.0, grid),
            GridFunction(np.cos(np.pi * x0 / grid.R), grid),
            GridFunction(np.sin(np.pi * x0 / grid.R), grid),
            GridFunction(np.exp(-r2 / 0.5), grid),
            GridFunction(tent, grid)]


def _check_mass(report: Report, traj):
    times = traj.grid.times()
    for n, pv in enumerate(traj.m):
        report.add("mass", f"t={times[n]:.6g} drift", 1e-10,
                   abs(pv.total_mass() - 1.0))
        report.add("mass", f"t={times[n]:.6g} negativity", 1e-14,
                   -float(np.min(pv.weights)))


def _check_comparison(report: Report, scenario: Scenario, op, g_fn, f_slices):
    delta = 0.1
    base = hjb_mod.solve_hjb(g_fn, f_slices, scenario.hamiltonian, op,
                             grid=scenario.grid)
    shifted = [GridFunction(s.values + delta, scenario.grid)
               for s in (f_slices or [GridFunction.constant(0.0, scenario.grid)]
                         * (scenario.grid.M + 1))]
    pert = hjb_mod.solve_hjb(g_fn, shifted, scenario.hamiltonian, op,
                             grid=scenario.grid)
    rep = hjb_mod.comparison_check(base, pert, (f_slices, g_fn), (shifted, g_fn))
    for label, bound, measured, _ in rep.rows:
        report.add("comparison", label, bound, measured)


def _data_bound(g_fn, f_slices, alpha):
    m = g_fn.sup_norm() + holder_seminorm(g_fn, alpha)
    for s in f_slices or []:
        m = max(m, s.sup_norm() + holder_seminorm(s, alpha))
    return max(m, 1e-12)


def _check_holder(report: Report, scenario: Scenario, u_traj, g_fn, f_slices):
    alpha = scenario.holder_alpha
    m_bound = _data_bound(g_fn, f_slices, alpha)
    jump = scenario.triplet.jump
    hc = jump.holder_constant() if jump is not None else None
    # the operator-seminorm rows need a small-jump scaling with 2 sigma < alpha
    usable = hc is not None and alpha > 2 * hc[1]
    rep = hjb_mod.holder_report(u_traj, alpha, m_bound,
                                triplet=scenario.triplet if usable else None)
    slack = 0.05 * m_bound
    for label, bound, measured, _ in rep.rows:
        report.add("holder", label, bound + slack, measured)
    if not usable:
        report.notes.append("holder: operator rows skipped (no usable "
                            "small-jump scaling below alpha)")


def _check_holmgren(report: Report, scenario: Scenario, sol):
    grid = scenario.grid
    mass = sol.op.total_mass
    need = max(1, math.ceil(grid.dt * sol.b.b_max * mass / 0.9))
    t_half = grid.times()[grid.M // 2]
    run1 = fp_mod.solve_fp(scenario.m0, sol.b, sol.op, grid=grid, substeps=need)
    run2 = fp_mod.solve_fp(scenario.m0, sol.b, sol.op, grid=grid, substeps=2 * need)
    rep = fp_mod.holmgren_residual(run1, run2, sol.b, sol.op,
                                   _phi_family(grid), t_half, tol=10 * grid.dt)
    for label, bound, measured, _ in rep.rows:
        report.add("holmgren", label, bound, measured)


def _second_solution(scenario: Scenario):
    center = 0.35 * scenario.grid.R
    dens = _gauss_density(scenario.grid, [center] * scenario.grid.d, 0.4)
    alt = Scenario(**{**scenario.__dict__,
                      "init_guess": ProbabilityVector.from_density(dens, scenario.grid)})
    return mfg_mod.solve_mfg(alt)


def run_scenario(path: str, out_dir: str = "tcmfg-out", mode: str = "mfg",
                 force: bool = False, seed=None, fmt: str = "csv"):
    """Execute one scenario file; returns (Report, exit_code)."""
    t_start = time.perf_counter()
    try:
        cfg = parse_config(path)
        scenario = Scenario.from_config(cfg, seed_override=seed)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None, 2

    issues = scenario.validate()
    for level, msg in issues:
        print(f"{level}: {msg}", file=sys.stderr if level == "error" else sys.stdout)
    if any(level == "error" for level, _ in issues) and not force:
        return None, 2

    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read() + str(scenario.seed).encode()).hexdigest()
    report = Report(scenario_hash=digest, seed=scenario.seed, mode=mode)
    report.notes.extend(msg for _, msg in issues)
    os.makedirs(out_dir, exist_ok=True)
    grid = scenario.grid
    outputs = {}

    try:
        if mode == "mfg":
            sol = mfg_mod.solve_mfg(scenario)
            report.converged = sol.converged
            report.add("solver", "final residual", scenario.tol,
                       sol.residual_history[-1] if sol.residual_history else 0.0)
            outputs["u0.bin"] = sol.u.u[0].values
            outputs["uT.bin"] = sol.u.u[-1].values
            outputs["m0.bin"] = sol.m.m[0].weights
            outputs["mT.bin"] = sol.m.m[-1].weights
            res_path = os.path.join(out_dir, "residuals.csv")
            with open(res_path, "w") as fh:
                fh.write("iteration,residual\n")
                for i, r in enumerate(sol.residual_history, start=1):
                    fh.write(f"{i},{r!r}\n")
            report.files.append("residuals.csv")

            f_slices = (None if scenario.coupling_f is None
                        else [scenario.coupling_f(m) for m in sol.m.m])
            g_fn = mfg_mod.coupling_eval(scenario.coupling_g, sol.m.m[-1], grid)
            t0 = time.perf_counter()
            if "mass" in scenario.checks:
                _check_mass(report, sol.m)
            if "comparison" in scenario.checks:
                _check_comparison(report, scenario, sol.op, g_fn, f_slices)
            if "holder" in scenario.checks:
                _check_holder(report, scenario, sol.u, g_fn, f_slices)
            if "holmgren" in scenario.checks:
                _check_holmgren(report, scenario, sol)
            if "duality" in scenario.checks or "uniqueness" in scenario.checks:
                sol2 = _second_solution(scenario)
                if "uniqueness" in scenario.checks:
                    gap = max(mfg_mod.d0_distance(a, b)
                              for a, b in zip(sol.m.m, sol2.m.m))
                    report.add("uniqueness", "sup_t d0", 5 * scenario.tol, gap)
                if "duality" in scenario.checks:
                    rep = mfg_mod.duality_residual(sol, sol2,
                                                   identity_tol=10 * grid.dt)
                    for label, bound, measured, _ in rep.rows:
                        if math.isinf(bound):
                            continue
                        report.add("duality", label, bound, measured)
            report.timings["checks"] = time.perf_counter() - t0

        elif mode == "hjb":
            op = build_epsilon_approx(scenario.triplet, scenario.epsilon, grid)
            g_fn = mfg_mod.coupling_eval(scenario.coupling_g, scenario.m0, grid)
            f_one = (None if scenario.coupling_f is None
                     else scenario.coupling_f(scenario.m0))
            f_slices = None if f_one is None else [f_one] * (grid.M + 1)
            traj = hjb_mod.solve_hjb(g_fn, f_one, scenario.hamiltonian, op, grid=grid)
            outputs["u0.bin"] = traj.u[0].values
            outputs["uT.bin"] = traj.u[-1].values
            if "comparison" in scenario.checks:
                _check_comparison(report, scenario, op, g_fn, f_slices)
            if "holder" in scenario.checks:
                _check_holder(report, scenario, traj, g_fn, f_slices)

        elif mode == "fp":
            op = build_epsilon_approx(scenario.triplet, scenario.epsilon, grid)
            traj = fp_mod.solve_fp(scenario.m0, scenario.fp_rate, op, grid=grid)
            outputs["m0.bin"] = traj.m[0].weights
            outputs["mT.bin"] = traj.m[-1].weights
            if "mass" in scenario.checks:
                _check_mass(report, traj)
            if "holmgren" in scenario.checks:
                need = max(1, math.ceil(grid.dt * scenario.fp_rate
                                        * op.total_mass / 0.9))
                run2 = fp_mod.solve_fp(scenario.m0, scenario.fp_rate, op,
                                       grid=grid, substeps=2 * need)
                rep = fp_mod.holmgren_residual(
                    traj, run2, scenario.fp_rate, op, _phi_family(grid),
                    grid.times()[grid.M // 2], tol=10 * grid.dt)
                for label, bound, measured, _ in rep.rows:
                    report.add("holmgren", label, bound, measured)

        elif mode == "dual":
            op = build_epsilon_approx(scenario.triplet, scenario.epsilon, grid)
            if scenario.dual_phi == "cos":
                phi = GridFunction(np.cos(np.pi * grid.coords()[0] / grid.R), grid)
            else:
                phi = GridFunction.constant(1.0, grid)
            traj = fp_mod.solve_dual(phi, scenario.fp_rate, op, t0=grid.T, grid=grid)
            outputs["w0.bin"] = traj.w[0].values
            hi = phi.sup_norm()
            for n, w in enumerate(traj.w):
                report.add("max-principle", f"slice {n}", hi + 1e-12, w.sup_norm())

        else:
            print(f"error: unknown mode {mode!r}", file=sys.stderr)
            return None, 2
    except (hjb_mod.InstabilityError, fp_mod.CFLViolationError,
            fp_mod.ConservationError, RuntimeError, ValueError) as exc:
        print(f"solver error in mode {mode}: {exc}", file=sys.stderr)
        return report, 3

    for name, values in outputs.items():
        write_binary(os.path.join(out_dir, name), values, grid)
        report.files.append(name)
    report.timings["total"] = time.perf_counter() - t_start
    emit_report(report, fmt, out_dir)

    if not report.converged:
        return report, 3
    return report, 0 if report.all_pass else 1


def emit_report(report: Report, fmt: str, out_dir: str) -> None:
    """Write report.csv (+ manifest, timings); human format echoes to stdout."""
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w") as fh:
        fh.write("check,slice,bound,measured,violation,pass\n")
        for check, label, bound, measured, violation, ok in report.rows:
            fh.write(f"{check},{label!r},{bound!r},{measured!r},{violation!r},{ok}\n")
    report.files.append("report.csv")

    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as fh:
        fh.write(f"scenario {report.scenario_hash}\n")
        fh.write(f"seed {report.seed}\n")
        fh.write(f"mode {report.mode}\n")
        fh.write(f"threads {os.environ.get('TCMFG_THREADS', 'default')}\n")
        for name in sorted(report.files):
            with open(os.path.join(out_dir, name), "rb") as blob:
                digest = hashlib.sha256(blob.read()).hexdigest()
            fh.write(f"{digest}  {name}\n")

    with open(os.path.join(out_dir, "timings.txt"), "w") as fh:
        for key, val in sorted(report.timings.items()):
            fh.write(f"{key} {val:.3f}s\n")

    if fmt == "human":
        print(f"scenario {report.scenario_hash[:12]} mode={report.mode} "
              f"seed={report.seed}")
        seen = []
        for check, label, bound, measured, violation, ok in report.rows:
            if check not in seen:
                seen.append(check)
                print(f"[{check}] {CHECK_INFO.get(check, '')}")
            state = "pass" if ok else "FAIL"
            print(f"  {label:28s} measured {measured:.6g}  bound {bound:.6g}  {state}")
        worst = max((r[4] for r in report.rows), default=0.0)
        print(f"result: {'all pass' if report.all_pass else 'FAILURES'} "
              f"(worst violation {worst:.3g})")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tcmfg",
        description="mean field game solver for controlled jump diffusions")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario file")
    run.add_argument("config", help="path to the scenario config")
    run.add_argument("--out", default="tcmfg-out", help="output directory")
    run.add_argument("--mode", default="mfg", choices=("mfg", "hjb", "fp", "dual"))
    run.add_argument("--force", action="store_true",
                     help="run even when validation reports errors")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--format", default="csv", choices=("csv", "human"),
                     dest="fmt")
    args = parser.parse_args(argv)
    if args.command == "run":
        _, code = run_scenario(args.config, out_dir=args.out, mode=args.mode,
                               force=args.force, seed=args.seed, fmt=args.fmt)
        return code
    return 2


if __name__ == "__main__":
    sys.exit(main())
