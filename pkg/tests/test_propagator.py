import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringheom import (
    BathSpec,
    HeomState,
    PhaseSpaceGrid,
    RingSpec,
    StepControl,
    StepUnderflow,
    NoConvergence,
    adapt_step,
    enumerate_indices,
    estimate_error,
    propagate,
    relax_to_equilibrium,
    rkf_step,
    load_checkpoint,
    save_checkpoint,
)
from ringheom.generator import Generator, build_tables
from ringheom.observables import expect_costheta

from oracles import free_rotor_costheta, wigner_from_density


CONTROL = StepControl(tol=1e-10)


def scalar_state(value=1.0):
    return np.full((1, 1, 1), value)


class TestRkfStep:
    def test_zero_rhs_identity(self, rng):
        y = rng.normal(size=(2, 3, 4))
        y4, y5 = rkf_step(y, 0.1, lambda s: np.zeros_like(s))
        assert np.array_equal(y4, y)
        assert np.array_equal(y5, y)

    def test_exponential_decay_fifth_order(self):
        y = scalar_state()
        y4, y5 = rkf_step(y, 0.1, lambda s: -s)
        assert abs(y5[0, 0, 0] - np.exp(-0.1)) < 1e-9
        assert abs(y4[0, 0, 0] - np.exp(-0.1)) < 1e-6

    def test_embedded_gap_shrinks_32x(self):
        # |y4 - y5| is O(dt^5): halving dt shrinks the gap ~32x
        gaps = []
        for dt in (0.2, 0.1, 0.05):
            y4, y5 = rkf_step(scalar_state(), dt, lambda s: -s)
            gaps.append(abs(y4[0, 0, 0] - y5[0, 0, 0]))
        for g1, g2 in zip(gaps, gaps[1:]):
            assert g1 / g2 == pytest.approx(32.0, rel=0.2)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            rkf_step(scalar_state(), 0.0, lambda s: -s)


class TestEstimateError:
    def test_identical_states(self, rng):
        y = rng.normal(size=(3, 5, 8))
        assert estimate_error(y, y.copy()) == 0.0

    def test_reads_only_root_theta_zero(self, rng):
        y4 = rng.normal(size=(3, 5, 8))
        y5 = y4.copy()
        y5[0, 2, 0] += 1e-8
        assert estimate_error(y4, y5) == pytest.approx(1e-8, rel=1e-9)
        # differences elsewhere are invisible to the estimator
        y5 = y4.copy()
        y5[0, 2, 3] += 1.0   # theta != 0
        y5[1, 2, 0] += 1.0   # not the root field
        assert estimate_error(y4, y5) == 0.0

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            estimate_error(rng.normal(size=(1, 2, 3)), rng.normal(size=(1, 2, 4)))


class TestAdaptStep:
    def test_at_tolerance(self):
        accept, dt_new = adapt_step(0.01, CONTROL.tol, CONTROL)
        assert accept
        assert dt_new == pytest.approx(0.99**0.2 * 0.01, rel=1e-15)

    def test_reject_32x(self):
        eps = 32.0 * 0.99 * CONTROL.tol
        accept, dt_new = adapt_step(0.01, eps, CONTROL)
        assert not accept
        assert dt_new == pytest.approx(0.005, rel=1e-13)

    def test_zero_error_growth_capped(self):
        accept, dt_new = adapt_step(0.01, 0.0, CONTROL)
        assert accept
        assert dt_new == pytest.approx(0.05)

    def test_growth_never_exceeds_cap_or_dt_max(self):
        accept, dt_new = adapt_step(0.01, 1e-30, CONTROL)
        assert accept and dt_new == pytest.approx(0.05)
        accept, dt_new = adapt_step(0.09, 1e-30, CONTROL)
        assert dt_new == pytest.approx(CONTROL.dt_max)

    def test_underflow_raises(self):
        ctrl = StepControl(tol=1e-10, dt_min=1e-6)
        with pytest.raises(StepUnderflow):
            adapt_step(2e-6, 1e6 * ctrl.tol, ctrl)

    @given(eps=st.floats(1e-14, 1e-6), factor=st.floats(0.1, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_accept_monotone_in_eps(self, eps, factor):
        # smaller error never flips accept from True to False
        a1, _ = adapt_step(0.01, eps, CONTROL)
        a2, _ = adapt_step(0.01, eps * factor, CONTROL)
        if a1:
            assert a2

    @given(dt=st.floats(1e-3, 0.5))
    @settings(max_examples=20, deadline=None)
    def test_halving_dt_never_flips_accept_scalar(self, dt):
        ctrl = StepControl(tol=1e-10, dt_max=1.0)
        y = scalar_state()
        decisions = []
        for step in (dt, dt / 2.0):
            y4, y5 = rkf_step(y, step, lambda s: -s)
            accept, _ = adapt_step(step, estimate_error(y4, y5), ctrl)
            decisions.append(accept)
        if decisions[0]:
            assert decisions[1]


class TestPropagate:
    def test_zero_interval_no_steps(self, rng):
        state = HeomState(t=2.0, dt=0.01, ados=rng.normal(size=(1, 3, 8)))
        calls = []
        propagate(state, 2.0, CONTROL, lambda s: 1 / 0, observers=(calls.append,))
        assert state.t == 2.0 and not calls

    def test_rejects_backward_target(self, rng):
        state = HeomState(t=2.0, dt=0.01, ados=rng.normal(size=(1, 3, 8)))
        with pytest.raises(ValueError):
            propagate(state, 1.0, CONTROL, lambda s: s)

    def test_scalar_decay_accuracy_and_final_time(self):
        state = HeomState(t=0.0, dt=1e-3, ados=scalar_state())
        propagate(state, 5.0, CONTROL, lambda s: -s)
        assert state.t == 5.0
        assert abs(state.ados[0, 0, 0] - np.exp(-5.0)) < 1e-8

    def test_observer_called_on_accepted_steps(self):
        state = HeomState(t=0.0, dt=1e-3, ados=scalar_state())
        times = []
        log = []
        propagate(
            state, 1.0, CONTROL, lambda s: -s,
            observers=(lambda s: times.append(s.t),),
            step_log=lambda t, dt, eps, acc: log.append((t, dt, eps, acc)),
        )
        assert times[-1] == 1.0
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
        accepted = [row for row in log if row[3]]
        assert len(accepted) == len(times)

    def test_free_rotor_coherence_oracle(self):
        grid = PhaseSpaceGrid(Np=6, M=16)
        ring = RingSpec(fluxbar=0.0)
        bath = BathSpec(0.0, 0.0, 1.0, 1.0, 0, 0, 1.0)
        idx = enumerate_indices(0, 0, 0)
        gen = Generator(idx, build_tables(ring, bath, grid))
        rho = {(m, mp): 1.0 / 3.0 for m in (-1, 0, 1) for mp in (-1, 0, 1)}
        state = HeomState(t=0.0, dt=1e-4, ados=wigner_from_density(rho, grid)[None])
        omega0 = grid.hbar / (2.0 * ring.inertia)
        for t_end in (1.0, 2.5, 5.0):
            propagate(state, t_end, CONTROL, gen)
            expected = free_rotor_costheta(t_end, rho, 0.0, omega0)
            assert expect_costheta(state, grid) == pytest.approx(expected, abs=1e-6)


class TestRelax:
    def _problem(self):
        grid = PhaseSpaceGrid(Np=8, M=8)
        ring = RingSpec()
        bath = BathSpec(1.0, 1.0, 1.0, 1.0, 1, 1, 0.25)
        idx = enumerate_indices(1, 1, 2)
        gen = Generator(idx, build_tables(ring, bath, grid))
        w = np.where(grid.n % 2 == 0, np.exp(-0.25 * grid.p**2 / (2 * ring.inertia)), 0.0)
        w /= np.pi * grid.hbar * w.sum()
        ados = grid.zeros(len(idx))
        ados[0] = w[:, None]
        return grid, gen, HeomState(t=0.0, dt=1e-4, ados=ados)

    def test_stationary_returns_after_one_window(self, rng):
        grid = PhaseSpaceGrid(Np=2, M=8)
        state = HeomState(t=0.0, dt=1e-3, ados=rng.normal(size=(1, grid.rows, grid.M)))
        windows = []
        relax_to_equilibrium(
            state, CONTROL, lambda s, out=None: np.zeros_like(s), grid,
            window=0.5, eps_ss=1e-9, max_time=10.0,
            on_window=lambda t, rf, ro: windows.append(t),
        )
        assert windows == [0.5]

    def test_isotropic_high_temperature_uniform(self):
        # rotation-invariant coupling: the distribution stays uniform
        grid, gen, state = self._problem()
        relax_to_equilibrium(
            state, StepControl(tol=1e-9), gen, grid,
            window=1.0, eps_ss=1e-7, max_time=100.0,
        )
        from ringheom.observables import pdf

        dist = pdf(state, grid)
        assert np.max(np.abs(dist - 1 / (2 * np.pi))) < 1e-3 / (2 * np.pi)

    def test_no_convergence_reports_residual(self):
        grid = PhaseSpaceGrid(Np=2, M=8)
        state = HeomState(t=0.0, dt=1e-3, ados=np.ones((1, grid.rows, grid.M)))
        # constant positive rhs never settles
        with pytest.raises(NoConvergence) as err:
            relax_to_equilibrium(
                state, CONTROL, lambda s, out=None: np.ones_like(s), grid,
                window=0.5, eps_ss=1e-9, max_time=2.0,
            )
        assert err.value.residual_field > 0.9


class TestCheckpoint:
    def test_roundtrip(self, rng, tmp_path):
        grid = PhaseSpaceGrid(Np=3, M=8)
        state = HeomState(t=1.5, dt=0.02, ados=rng.normal(size=(4, grid.rows, grid.M)))
        path = tmp_path / "state.chk"
        save_checkpoint(path, state, grid)
        back = load_checkpoint(path, grid)
        assert back.t == state.t and back.dt == state.dt
        assert np.array_equal(back.ados, state.ados)

    def test_grid_mismatch_rejected(self, rng, tmp_path):
        grid = PhaseSpaceGrid(Np=3, M=8)
        state = HeomState(t=0.0, dt=0.01, ados=rng.normal(size=(1, grid.rows, grid.M)))
        path = tmp_path / "state.chk"
        save_checkpoint(path, state, grid)
        with pytest.raises(ValueError):
            load_checkpoint(path, PhaseSpaceGrid(Np=4, M=8))
