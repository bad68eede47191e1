import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcmfg import (CheckReport, GridFunction, GridSpec, LevyTriplet,
                   ProbabilityVector, StableSpec, adjoint,
                   build_epsilon_approx, read_binary, spectral_reference,
                   write_binary, write_csv)


def small_grid(d=1, N=64, R=2.0, T=0.5, M=8):
    return GridSpec(d=d, R=R, N=N, T=T, M=M)


class TestGridSpec:
    def test_basic_quantities(self):
        g = small_grid()
        assert g.h == pytest.approx(2 * g.R / g.N)
        assert g.dt == pytest.approx(g.T / g.M)
        assert g.shape == (64,)
        assert g.cell_volume == pytest.approx(g.h)
        assert len(g.times()) == g.M + 1
        assert g.times()[0] == 0.0 and g.times()[-1] == g.T

    def test_axis_covers_torus(self):
        g = small_grid()
        ax = g.axis()
        assert ax[0] == -g.R
        assert ax[-1] == pytest.approx(g.R - g.h)

    def test_2d_shapes(self):
        g = small_grid(d=2, N=16)
        assert g.shape == (16, 16)
        X0, X1 = g.coords()
        assert X0.shape == (16, 16)
        assert g.cell_volume == pytest.approx(g.h ** 2)

    def test_power_of_two_required(self):
        with pytest.raises(ValueError):
            GridSpec(d=1, R=2.0, N=100, T=1.0, M=4)

    def test_coarse_spacing_rejected(self):
        # h = 2R/N must resolve the unit ball
        with pytest.raises(ValueError):
            GridSpec(d=1, R=64.0, N=64, T=1.0, M=4)


class TestGridFunction:
    def test_sup_norm_and_constant(self):
        g = small_grid()
        f = GridFunction.constant(3.5, g)
        assert f.sup_norm() == 3.5
        f2 = GridFunction(np.sin(g.axis()), g)
        assert f2.sup_norm() <= 1.0


class TestProbabilityVector:
    def test_uniform_mass(self):
        g = small_grid()
        m = ProbabilityVector.uniform(g)
        assert m.total_mass() == pytest.approx(1.0, abs=1e-14)

    def test_from_density_normalizes(self):
        g = small_grid()
        m = ProbabilityVector.from_density(np.exp(-g.axis() ** 2), g)
        assert m.total_mass() == pytest.approx(1.0, abs=1e-14)
        assert np.all(m.weights >= 0)

    def test_dirac(self):
        g = small_grid()
        m = ProbabilityVector.dirac(5, g)
        assert m.weights[5] == 1.0
        assert m.total_mass() == 1.0

    def test_negative_density_rejected(self):
        g = small_grid()
        with pytest.raises(ValueError):
            ProbabilityVector.from_density(np.full(g.shape, -1.0), g)

    def test_expectation_of_constant(self):
        g = small_grid()
        m = ProbabilityVector.from_density(np.exp(-g.axis() ** 2), g)
        assert m.expectation(np.full(g.shape, 2.0)) == pytest.approx(2.0)


class TestAdjoint:
    def _op(self, g, sigma=0.25, eps=0.2):
        trip = LevyTriplet(c=np.zeros(g.d), a=np.zeros((g.d, g.d)),
                           jump=StableSpec(sigma=sigma, d=g.d))
        return build_epsilon_approx(trip, eps, g)

    def test_pairing_identity(self):
        g = small_grid()
        op = self._op(g)
        star = adjoint(op)
        rng = np.random.default_rng(0)
        for _ in range(5):
            phi = rng.standard_normal(g.shape)
            m = rng.random(g.shape)
            lhs = np.sum(op.apply(phi) * m)
            rhs = np.sum(phi * star.apply(m))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_involution(self):
        g = small_grid()
        op = self._op(g)
        back = adjoint(adjoint(op))
        assert np.array_equal(np.sort(back.offsets), np.sort(op.offsets))
        rng = np.random.default_rng(1)
        v = rng.standard_normal(g.shape)
        assert np.allclose(back.apply(v), op.apply(v), atol=1e-14)

    def test_adjoint_conserves_mass(self):
        g = small_grid()
        star = adjoint(self._op(g))
        rng = np.random.default_rng(2)
        m = rng.random(g.shape)
        assert np.sum(star.apply(m)) == pytest.approx(0.0, abs=1e-12)


class TestSpectralReference:
    def test_single_mode_decay(self):
        # pure diffusion: mode k decays by exp(-t a^2 k^2)
        g = small_grid(N=128)
        a = 0.3
        trip = LevyTriplet(c=np.zeros(1), a=np.array([[a]]), jump=None)
        k = 2 * np.pi / (2 * g.R)  # first torus mode
        phi = GridFunction(np.cos(k * g.axis()), g)
        out = spectral_reference(trip, phi, 0.7)
        expect = np.exp(-0.7 * a * a * k * k) * phi.values
        assert np.max(np.abs(out.values - expect)) < 1e-12

    def test_adjoint_flow_conserves_mass(self):
        g = small_grid(N=128)
        trip = LevyTriplet(c=np.array([0.4]), a=np.array([[0.2]]),
                           jump=StableSpec(sigma=0.25))
        m0 = ProbabilityVector.from_density(np.exp(-g.axis() ** 2), g)
        out = spectral_reference(trip, GridFunction(m0.weights, g), 0.5,
                                 adjoint_op=True)
        assert np.sum(out.values) == pytest.approx(1.0, abs=1e-12)

    def test_negative_time_rejected(self):
        g = small_grid()
        trip = LevyTriplet(c=np.zeros(1), a=np.zeros((1, 1)), jump=None)
        with pytest.raises(ValueError):
            spectral_reference(trip, GridFunction.constant(1.0, g), -0.1)


class TestIO:
    def test_binary_roundtrip(self, tmp_path):
        g = small_grid()
        vals = np.sin(g.axis())
        p = tmp_path / "u.bin"
        write_binary(p, vals, g)
        back, g2 = read_binary(p)
        assert np.array_equal(back, vals)
        assert (g2.d, g2.N, g2.R, g2.T, g2.M) == (g.d, g.N, g.R, g.T, g.M)

    def test_binary_bad_magic(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"NOTFMT" + b"\0" * 40)
        with pytest.raises(ValueError):
            read_binary(p)

    def test_csv_layout(self, tmp_path):
        g = small_grid(N=4, R=0.5)
        p = tmp_path / "u.csv"
        write_csv(p, np.arange(4.0), g)
        lines = p.read_text().splitlines()
        assert lines[0] == "index,x,value"
        assert len(lines) == 5
        assert lines[1].startswith("0,-0.5,")

    def test_csv_2d_layout(self, tmp_path):
        g = GridSpec(d=2, R=0.5, N=4, T=1.0, M=2)
        p = tmp_path / "u.csv"
        write_csv(p, np.arange(16.0).reshape(4, 4), g)
        lines = p.read_text().splitlines()
        assert lines[0] == "index,x0,x1,value"
        assert len(lines) == 17


class TestCheckReport:
    def test_pass_fail_and_csv(self, tmp_path):
        rep = CheckReport(name="demo", rows=[("a", 1.0, 0.5, -0.5),
                                             ("b", 1.0, 2.0, 1.0)])
        assert not rep.passed
        assert rep.max_violation == 1.0
        p = tmp_path / "rep.csv"
        rep.write_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0] == "check,slice,bound,measured,violation,pass"
        assert lines[2].endswith("False")

    def test_empty_report_passes(self):
        assert CheckReport(name="none", rows=[]).passed


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=63),
       st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_binary_roundtrip_property(tmp_path_factory, idx, val):
    g = GridSpec(d=1, R=2.0, N=64, T=1.0, M=4)
    vals = np.zeros(64)
    vals[idx] = val
    p = tmp_path_factory.mktemp("bin") / "x.bin"
    write_binary(p, vals, g)
    back, _ = read_binary(p)
    assert np.array_equal(back, vals)
