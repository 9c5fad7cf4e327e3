from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opetri import fixtures as F
from opetri.dynamics import VectorField, mass_action, ode_to_dde, petri_to_open_dynamics
from opetri.errors import OpetriError, SolverError
from opetri.solve import SolveConfig, Trajectory, hermite, solve_dde, solve_ode


def decay(rate: float = 1.0) -> VectorField:
    return VectorField(1, lambda t, u, h=None: -rate * u, ["u"])


def lagged(tau: float = 1.0) -> VectorField:
    """u'(t) = -u(t - tau)."""
    return VectorField(1, lambda t, u, h: -h(t - tau), ["u"], delays=[tau])


def rk4_error(dt: float) -> float:
    traj = solve_ode(decay(), [1.0], SolveConfig(t1=1.0, dt=dt, method="rk4"))
    return abs(traj.final[0] - math.exp(-1))


class TestOde:
    def test_zero_field_stays_put(self):
        f = VectorField(2, lambda t, u, h=None: np.zeros(2), ["a", "b"])
        for method in ("rk4", "rk45"):
            traj = solve_ode(f, [1.5, -2.0], SolveConfig(t1=3.0, dt=0.1, method=method))
            assert np.all(traj.states == [1.5, -2.0])
            assert traj.times[-1] == 3.0

    def test_decay_rk45(self):
        traj = solve_ode(decay(), [1.0], SolveConfig(t1=1.0, rel_tol=1e-10, abs_tol=1e-12))
        assert traj.final[0] == pytest.approx(math.exp(-1), rel=1e-9)
        assert traj.times[-1] == 1.0

    def test_rk4_fourth_order(self):
        errs = [rk4_error(0.1 / 2**k) for k in range(4)]
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        assert all(12 <= r <= 20 for r in ratios), ratios

    def test_rk4_ragged_last_step(self):
        traj = solve_ode(decay(), [1.0], SolveConfig(t1=1.0, dt=0.3, method="rk4"))
        assert list(traj.times[:-1]) == pytest.approx([0, 0.3, 0.6, 0.9])
        assert traj.times[-1] == 1.0

    @pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10])
    def test_rk45_respects_tolerance(self, tol):
        traj = solve_ode(decay(), [1.0], SolveConfig(t1=5.0, rel_tol=tol, abs_tol=tol * 1e-3))
        err = abs(traj.final[0] - math.exp(-5)) / math.exp(-5)
        assert err <= 100 * tol

    def test_sir_population_conserved(self):
        f = mass_action(F.sir(0.3, 0.1))
        traj = solve_ode(f, [0.99, 0.01, 0.0], SolveConfig(t1=100.0, dt=0.1, rel_tol=1e-10, abs_tol=1e-12))
        assert np.max(np.abs(traj.states.sum(axis=1) - 1.0)) <= 1e-9
        assert np.all(traj.states >= -1e-12)

    def test_deterministic(self):
        f = mass_action(F.sviivr())
        cfg = SolveConfig(t1=50.0, dt=0.5)
        u0 = [0.9, 0.05, 0.0, 0.0, 0.05]
        a, b = solve_ode(f, u0, cfg), solve_ode(f, u0, cfg)
        assert a.to_csv() == b.to_csv()

    def test_save_every_keeps_endpoint(self):
        traj = solve_ode(decay(), [1.0], SolveConfig(t1=1.0, dt=0.1, method="rk4", save_every=3))
        assert list(traj.times) == pytest.approx([0, 0.3, 0.6, 0.9, 1.0])

    def test_max_steps(self):
        with pytest.raises(SolverError):
            solve_ode(decay(), [1.0], SolveConfig(t1=1.0, dt=0.01, method="rk4", max_steps=10))
        with pytest.raises(SolverError):
            solve_ode(decay(), [1.0], SolveConfig(t1=100.0, dt=0.01, max_steps=3))

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_blow_up_is_reported_with_time(self):
        f = VectorField(1, lambda t, u, h=None: u * u, ["u"])
        with pytest.raises(SolverError) as e:
            solve_ode(f, [1.0], SolveConfig(t1=2.0, dt=0.01, method="rk4"))
        assert e.value.t is not None and e.value.t < 2.0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            solve_ode(decay(), [1.0, 2.0], SolveConfig())
        with pytest.raises(OpetriError, match="solve_dde"):
            solve_ode(lagged(), [1.0], SolveConfig())
        for kw in ({"t1": 0.0}, {"dt": 0.0}, {"method": "euler"}, {"rel_tol": 0.0}, {"save_every": 0}):
            with pytest.raises(ValueError):
                SolveConfig(**kw)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.1, 5.0))
    def test_linear_decay_property(self, rate, t1):
        traj = solve_ode(decay(rate), [2.0], SolveConfig(t1=t1, rel_tol=1e-10, abs_tol=1e-13))
        assert traj.final[0] == pytest.approx(2.0 * math.exp(-rate * t1), rel=1e-8)


class TestDde:
    HIST = staticmethod(lambda s: [1.0])

    def test_first_interval(self):
        traj = solve_dde(lagged(), [1.0], self.HIST, SolveConfig(t1=1.0, dt=0.01))
        assert abs(traj.final[0]) <= 1e-8

    def test_third_interval(self):
        # piecewise polynomial by hand: 1 - t, then -2t + t^2/2 + 3/2, then u(3) = -1/6
        traj = solve_dde(lagged(), [1.0], self.HIST, SolveConfig(t1=3.0, dt=0.01))
        assert traj.at(2.0)[0] == pytest.approx(-0.5, abs=1e-8)
        assert traj.final[0] == pytest.approx(-1 / 6, abs=1e-8)

    def test_zero_delay_is_the_ode(self):
        traj = solve_dde(lagged(0.0), [1.0], self.HIST, SolveConfig(t1=1.0, dt=0.01))
        assert traj.final[0] == pytest.approx(math.exp(-1), abs=1e-8)

    def test_coerced_sir_matches_ode(self):
        d = petri_to_open_dynamics(F.sir_open())
        cfg = SolveConfig(t1=50.0, dt=0.05, method="rk4")
        u0 = [0.99, 0.01, 0.0]
        ode = solve_ode(d.field, u0, cfg)
        dde = solve_dde(ode_to_dde(d).field, u0, lambda s: u0, cfg)
        assert np.max(np.abs(ode.states - dde.states)) <= 1e-8

    def test_step_shrinks_to_divide_delays(self):
        # 0.3 does not divide 1, so the step drops to 0.25
        traj = solve_dde(lagged(), [1.0], self.HIST, SolveConfig(t1=1.0, dt=0.3))
        assert list(traj.times) == pytest.approx([0, 0.25, 0.5, 0.75, 1.0])
        assert abs(traj.final[0]) <= 1e-12

    def test_incommensurate_delays(self):
        f = VectorField(1, lambda t, u, h: -h(t - 1.0), ["u"], delays=[1.0, math.sqrt(2)])
        with pytest.raises(SolverError, match="divides"):
            solve_dde(f, [1.0], self.HIST, SolveConfig(t1=1.0, dt=0.1))

    def test_plain_ode_rejected(self):
        with pytest.raises(OpetriError, match="ode_to_dde"):
            solve_dde(decay(), [1.0], self.HIST, SolveConfig())

    def test_off_grid_lookup_uses_hermite(self):
        # a delay of 1.5 with a step of 0.5 lands between nodes for midpoint stages
        traj = solve_dde(lagged(1.5), [1.0], self.HIST, SolveConfig(t1=3.0, dt=0.5))
        fine = solve_dde(lagged(1.5), [1.0], self.HIST, SolveConfig(t1=3.0, dt=0.01))
        assert traj.final[0] == pytest.approx(fine.final[0], abs=1e-3)


def test_hermite_reproduces_cubics():
    p = np.polynomial.Polynomial([0.3, -1.0, 2.0, 0.7])
    dp = p.deriv()
    for s in np.linspace(1.0, 2.5, 7):
        assert hermite(1.0, 2.5, p(1.0), p(2.5), dp(1.0), dp(2.5), s) == pytest.approx(p(s), rel=1e-12)


class TestTrajectory:
    def test_csv_roundtrip_is_exact(self):
        traj = solve_ode(mass_action(F.sir()), [0.99, 0.01, 0.0], SolveConfig(t1=10.0, dt=0.7))
        back = Trajectory.from_csv(traj.to_csv())
        assert np.array_equal(back.times, traj.times)
        assert np.array_equal(back.states, traj.states)
        assert back.var_names == ("S", "I", "R")
        assert traj.to_csv().splitlines()[0] == "t,S,I,R"

    def test_column_and_interpolation(self):
        traj = Trajectory([0.0, 1.0], [[0.0, 10.0], [2.0, 20.0]], ["a", "b"])
        assert list(traj.column("b")) == [10.0, 20.0]
        assert list(traj.at(0.25)) == [0.5, 12.5]

    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 0.0], [[1.0], [1.0]], ["u"])
