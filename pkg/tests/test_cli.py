import numpy as np
import pytest

from tcmfg import cli
from tcmfg.cli import ConfigError, Scenario, parse_config, run_scenario
from tcmfg.grid import read_binary

BASE = """\
# small coupled game, quick to solve
grid.d = 1
grid.r = 2.0
grid.n = 64
grid.t = 0.25
grid.m = 8
operator.epsilon = 0.15
levy.type = stable
levy.sigma = 0.1
hamiltonian.variant = power
hamiltonian.q = 2.0
coupling_f.kernel = gaussian
coupling_f.width = 0.25
coupling_f.amplitude = 0.6
coupling_g.kernel = gaussian
coupling_g.width = 0.25
coupling_g.amplitude = 0.3
m0.kind = gaussian
m0.width = 0.4
solver.tol = 1e-5
checks = mass
seed = 1
"""


def write_cfg(tmp_path, text=BASE, name="scenario.cfg", **edits):
    lines = []
    for line in text.splitlines():
        key = line.split("=")[0].strip()
        if key in edits:
            lines.append(f"{key} = {edits.pop(key)}")
        else:
            lines.append(line)
    for key, value in edits.items():
        lines.append(f"{key} = {value}")
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestParseConfig:
    def test_roundtrip_with_comments(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("a.b = 1\n\n# full line\nc.d = two  # trailing\n")
        cfg = parse_config(str(path))
        assert cfg == {"a.b": "1", "c.d": "two"}

    def test_missing_equals_names_the_line(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("a.b = 1\ngrid.n 64\n")
        with pytest.raises(ConfigError, match=r":2: expected 'key = value'"):
            parse_config(str(path))

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("a.b = 1\na.b = 2\n")
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config(str(path))

    def test_empty_value_rejected(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("a.b =\n")
        with pytest.raises(ConfigError, match="empty key or value"):
            parse_config(str(path))


class TestScenarioFromConfig:
    def test_full_build(self, tmp_path):
        sc = Scenario.from_config(parse_config(write_cfg(tmp_path)))
        assert sc.grid.N == 64 and sc.grid.d == 1
        assert sc.epsilon == 0.15
        assert sc.hamiltonian.variant == "power"
        assert sc.coupling_f is not None and sc.coupling_g.terminal
        assert sc.checks == ("mass",)
        assert sc.seed == 1
        assert sc.m0.total_mass() == pytest.approx(1.0, abs=1e-12)

    def test_missing_required_key_named(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("grid.r = 2.0\ngrid.n = 64\ngrid.t = 1.0\ngrid.m = 8\n")
        with pytest.raises(ConfigError, match="missing required key 'levy.type'"):
            Scenario.from_config(parse_config(path.as_posix()))

    def test_bad_cast_reports_key(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, **{"grid.n": "sixty-four"}))
        with pytest.raises(ConfigError, match="grid.n"):
            Scenario.from_config(cfg)

    def test_unknown_check_rejected(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, checks="mass,bogus"))
        with pytest.raises(ConfigError, match="unknown check"):
            Scenario.from_config(cfg)

    def test_seed_override_wins(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path))
        assert Scenario.from_config(cfg).seed == 1
        assert Scenario.from_config(cfg, seed_override=42).seed == 42

    def test_mixture_initial_measure(self, tmp_path):
        cfg = parse_config(write_cfg(
            tmp_path, **{"m0.kind": "mixture", "m0.centers": "-0.5; 0.6",
                         "m0.widths": "0.3, 0.2", "m0.weights": "0.7, 0.3"}))
        sc = Scenario.from_config(cfg)
        assert sc.m0.total_mass() == pytest.approx(1.0, abs=1e-12)
        assert float(np.min(sc.m0.weights)) >= 0.0

    def test_shifted_hamiltonian_base_namespace(self, tmp_path):
        cfg = parse_config(write_cfg(
            tmp_path, **{"hamiltonian.variant": "shifted",
                         "hamiltonian.kappa": "0.3",
                         "hamiltonian.base": "power",
                         "hamiltonian.base.q": "2.0"}))
        sc = Scenario.from_config(cfg)
        assert sc.hamiltonian.variant == "shifted"
        assert sc.hamiltonian.kappa == pytest.approx(0.3)


class TestValidate:
    def build(self, tmp_path, **edits):
        return Scenario.from_config(parse_config(write_cfg(tmp_path, **edits)))

    def slugs(self, issues, level=None):
        return [msg.split(":")[0] for lvl, msg in issues
                if level is None or lvl == level]

    def test_clean_scenario_has_no_errors(self, tmp_path):
        issues = self.build(tmp_path).validate()
        assert self.slugs(issues, "error") == []

    def test_epsilon_out_of_range(self, tmp_path):
        issues = self.build(tmp_path, **{"operator.epsilon": "1.5"}).validate()
        assert "jump-cutoff-range" in self.slugs(issues, "error")

    def test_epsilon_below_grid_spacing(self, tmp_path):
        issues = self.build(tmp_path, **{"operator.epsilon": "0.01"}).validate()
        assert "cutoff-resolvable" in self.slugs(issues, "error")

    def test_domain_must_cover_unit_ball(self, tmp_path):
        issues = self.build(tmp_path, **{"grid.r": "1.0"}).validate()
        assert "domain-covers-unit-ball" in self.slugs(issues, "error")

    def test_corner_hamiltonian_flagged(self, tmp_path):
        issues = self.build(
            tmp_path, **{"hamiltonian.variant": "indicator-interval",
                         "hamiltonian.kappa": "1.0"}).validate()
        assert "derivative-regularity" in self.slugs(issues, "error")

    def test_uniqueness_regime_noted(self, tmp_path):
        issues = self.build(tmp_path).validate()
        notes = [msg for lvl, msg in issues if lvl == "note"]
        assert any(m.startswith("uniqueness-regime: inside") for m in notes)


class TestRunExitCodes:
    def test_clean_run_exits_zero(self, tmp_path):
        out = tmp_path / "out"
        code = cli.main(["run", write_cfg(tmp_path), "--out", str(out)])
        assert code == 0
        report = (out / "report.csv").read_text().splitlines()
        assert report[0] == "check,slice,bound,measured,violation,pass"
        assert all(line.endswith(",True") for line in report[1:])
        for name in ("u0.bin", "uT.bin", "m0.bin", "mT.bin",
                     "residuals.csv", "manifest.txt", "timings.txt"):
            assert (out / name).exists()
        arr, grid = read_binary(str(out / "mT.bin"))
        assert grid.N == 64
        assert abs(float(np.sum(arr)) - 1.0) <= 1e-10

    def test_missing_config_exits_two(self, tmp_path, capsys):
        assert cli.main(["run", str(tmp_path / "nope.cfg")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_parse_error_exits_two(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("grid.n 64\n")
        assert cli.main(["run", str(path)]) == 2
        assert ":1:" in capsys.readouterr().err

    def test_validation_error_exits_two(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, **{"operator.epsilon": "0.01"})
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "cutoff-resolvable" in capsys.readouterr().err

    def test_force_turns_validation_error_into_solver_error(self, tmp_path,
                                                            capsys):
        cfg = write_cfg(tmp_path, **{"operator.epsilon": "0.01"})
        code = cli.main(["run", cfg, "--out", str(tmp_path / "o"), "--force"])
        assert code == 3
        assert "solver error" in capsys.readouterr().err

    def test_unconverged_run_exits_three(self, tmp_path):
        cfg = write_cfg(tmp_path, **{"solver.max_iter": "1",
                                     "solver.tol": "1e-14"})
        out = tmp_path / "o"
        assert cli.main(["run", cfg, "--out", str(out)]) == 3
        # the report is still written for post-mortem inspection
        assert (out / "report.csv").exists()

    def test_failed_check_exits_one(self, tmp_path, monkeypatch):
        def rigged(report, traj):
            report.add("mass", "rigged", -1.0, 0.0)
        monkeypatch.setattr(cli, "_check_mass", rigged)
        cfg = write_cfg(tmp_path)
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 1

    def test_unknown_mode_rejected(self, tmp_path, capsys):
        report, code = run_scenario(write_cfg(tmp_path), mode="bogus",
                                    out_dir=str(tmp_path / "o"))
        assert report is None and code == 2
        assert "unknown mode" in capsys.readouterr().err


class TestModes:
    def test_hjb_mode_writes_value_slices(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_cfg(tmp_path, checks="comparison,holder")
        assert cli.main(["run", cfg, "--mode", "hjb", "--out", str(out)]) == 0
        assert (out / "u0.bin").exists() and (out / "uT.bin").exists()
        text = (out / "report.csv").read_text()
        assert "comparison" in text and "holder" in text

    def test_fp_mode_transports_the_measure(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_cfg(tmp_path, checks="mass,holmgren",
                        **{"fp.rate": "0.8"})
        assert cli.main(["run", cfg, "--mode", "fp", "--out", str(out)]) == 0
        assert (out / "m0.bin").exists() and (out / "mT.bin").exists()
        assert "holmgren" in (out / "report.csv").read_text()

    def test_dual_mode_obeys_max_principle(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_cfg(tmp_path, **{"dual.phi": "cos"})
        assert cli.main(["run", cfg, "--mode", "dual", "--out", str(out)]) == 0
        text = (out / "report.csv").read_text()
        assert "max-principle" in text
        assert (out / "w0.bin").exists()

    def test_mfg_cross_checks(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_cfg(tmp_path, checks="mass,duality,uniqueness")
        assert cli.main(["run", cfg, "--out", str(out)]) == 0
        text = (out / "report.csv").read_text()
        assert "uniqueness,'sup_t d0'" in text
        assert "duality,'identity gap'" in text
        assert "duality,'convexity defect'" in text


class TestDeterminism:
    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.main(["run", cfg, "--out", str(out1)]) == 0
        assert cli.main(["run", cfg, "--out", str(out2)]) == 0
        for name in ("report.csv", "residuals.csv", "u0.bin", "uT.bin",
                     "m0.bin", "mT.bin"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_thread_count_leaves_outputs_unchanged(self, tmp_path,
                                                   monkeypatch):
        cfg = write_cfg(tmp_path)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.main(["run", cfg, "--out", str(out1)]) == 0
        monkeypatch.setenv("TCMFG_THREADS", "3")
        assert cli.main(["run", cfg, "--out", str(out2)]) == 0
        for name in ("report.csv", "residuals.csv", "mT.bin"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_enters_the_scenario_hash(self, tmp_path):
        cfg = write_cfg(tmp_path)
        r1, c1 = run_scenario(cfg, out_dir=str(tmp_path / "o1"), seed=5)
        r2, c2 = run_scenario(cfg, out_dir=str(tmp_path / "o2"), seed=6)
        assert c1 == 0 and c2 == 0
        assert r1.scenario_hash != r2.scenario_hash

    def test_human_format_summarizes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path)
        code = cli.main(["run", cfg, "--out", str(tmp_path / "o"),
                         "--format", "human"])
        assert code == 0
        out = capsys.readouterr().out
        assert "[mass]" in out
        assert "result: all pass" in out
