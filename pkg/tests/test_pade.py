import numpy as np
import pytest

from ringheom import BathSpec, PoleCollision
from ringheom.pade import (
    coth_surrogate,
    coth_surrogate_error,
    hierarchy_coefficients,
    pade_frequencies,
)

from oracles import matsubara_bracket, matsubara_correlation, pade_correlation


def _bath(eta=1.0, gamma=1.0, k=2, beta=1.0):
    return BathSpec(eta_x=eta, eta_y=eta, gamma_x=gamma, gamma_y=gamma, k_x=k, k_y=k, beta=beta)


class TestPadeFrequencies:
    def test_no_poles(self):
        xi, etabar = pade_frequencies(0)
        assert xi.size == 0 and etabar.size == 0

    def test_k1_closed_form(self):
        # 2x2 tridiagonal with off-diagonal 1/sqrt(15): poles at 2*sqrt(15)
        xi, etabar = pade_frequencies(1)
        assert xi[0] == pytest.approx(2.0 * np.sqrt(15.0), rel=1e-14)
        assert etabar[0] == pytest.approx(2.5, rel=1e-14)

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 6])
    def test_poles_ascending_above_matsubara(self, k):
        xi, etabar = pade_frequencies(k)
        assert np.all(np.diff(xi) > 0)
        # poles sit at or above the Matsubara ladder 2*pi*j
        assert np.all(xi >= 2.0 * np.pi * np.arange(1, k + 1) - 1e-9)
        assert np.all(etabar > 0)

    def test_k2_surrogate_close_to_coth(self):
        ps = hierarchy_coefficients(_bath(k=2), "x", 1.0)
        # frozen from the direct-coth oracle: max error 7.5e-3 on (0, 5],
        # 2.6e-6 on (0, 1.5] (the range the high-temperature runs sample)
        assert coth_surrogate_error(ps, 5.0) < 8e-3
        assert coth_surrogate_error(ps, 1.5) < 3e-6

    def test_k4_drude_pole_amplitude_vs_matsubara_oracle(self):
        # the e^{-gamma t} amplitude of the correlation function, checked
        # against a 1e4-term Matsubara sum (tail-corrected; the plain
        # partial sum still carries a 5e-6 truncation error of its own)
        beta = gamma = 1.0
        ps = hierarchy_coefficients(_bath(k=4, beta=beta), "x", 1.0)
        bracket = ps.a0 * beta / gamma
        oracle = matsubara_bracket(10_000, beta, gamma)
        assert bracket == pytest.approx(oracle, rel=1e-8)
        # and against the closed form (beta*gamma/2)*cot(beta*gamma/2)
        exact = (beta * gamma / 2.0) / np.tan(beta * gamma / 2.0)
        assert bracket == pytest.approx(exact, rel=1e-12)


class TestHierarchyCoefficients:
    def test_k0_unit_parameters(self):
        ps = hierarchy_coefficients(_bath(eta=1.0, gamma=1.0, k=0, beta=1.0), "x", 1.0)
        assert ps.a0 == pytest.approx(1.0)
        assert ps.b0 == pytest.approx(0.5)
        assert ps.aj.size == 0
        assert ps.nu.tolist() == [1.0]

    def test_decoupled_bath(self):
        ps = hierarchy_coefficients(_bath(eta=0.0, k=3), "y", 1.0)
        assert ps.a0 == 0.0 and ps.b0 == 0.0
        assert np.all(ps.aj == 0.0)

    def test_nu_layout(self):
        bath = BathSpec(0.1, 0.2, 0.7, 1.3, 2, 3, 2.0)
        ps = hierarchy_coefficients(bath, "y", 1.0)
        assert ps.nu[0] == 1.3
        assert len(ps.nu) == 4
        assert np.all(np.diff(ps.nu[1:]) > 0)
        assert np.all(ps.nu > 0)

    def test_correlation_matches_matsubara_oracle(self):
        # K = 2 already reproduces the converged mode sum at t >= 0.5
        ps = hierarchy_coefficients(_bath(eta=0.7, k=2), "x", 1.0)
        for t in (0.5, 1.0, 2.0):
            oracle = matsubara_correlation(t, 10_000, 0.7, 1.0, 1.0)
            assert pade_correlation(t, ps, 1.0) == pytest.approx(oracle, rel=2e-4)

    def test_pole_collision_raises(self):
        # K = 1, beta tuned so nu_1 = gamma: xi_1/(beta) = gamma
        xi, _ = pade_frequencies(1)
        gamma = 5.0
        beta = float(xi[0]) / gamma
        bath = BathSpec(1.0, 1.0, gamma, gamma, 1, 1, beta)
        with pytest.raises(PoleCollision):
            hierarchy_coefficients(bath, "x", 1.0)

    def test_classical_limit_bracket(self):
        # a0 * beta/(eta r0 gamma) -> 1 as beta -> 0
        for k in (0, 2, 4):
            bath = _bath(eta=0.3, gamma=2.0, k=k, beta=1e-7)
            ps = hierarchy_coefficients(bath, "x", 1.5)
            assert ps.a0 * 1e-7 / (0.3 * 1.5 * 2.0) == pytest.approx(1.0, abs=1e-10)

    def test_scaling_in_r0_and_eta(self):
        base = hierarchy_coefficients(_bath(eta=1.0, k=2), "x", 1.0)
        scaled = hierarchy_coefficients(_bath(eta=2.0, k=2), "x", 3.0)
        assert scaled.a0 == pytest.approx(6.0 * base.a0)
        assert scaled.b0 == pytest.approx(6.0 * base.b0)
        assert scaled.aj == pytest.approx(6.0 * base.aj)


class TestCothSurrogate:
    def test_k0_small_x(self):
        ps = hierarchy_coefficients(_bath(k=0), "x", 1.0)
        # surrogate 1/x matches the coth pole; residue is coth(x)-1/x ~ x/3
        err = coth_surrogate_error(ps, 1e-4)
        assert err < 1e-4 / 3.0 * 1.01

    def test_k4_frozen_values(self):
        ps = hierarchy_coefficients(_bath(k=4), "x", 1.0)
        # frozen from the direct-coth oracle (crosses 1e-8 near x ~ 3.5)
        assert coth_surrogate_error(ps, 3.5) < 1e-8
        assert coth_surrogate_error(ps, 5.0) < 7e-7

    @pytest.mark.parametrize("xmax", [1.0, 3.0, 5.0, 8.0])
    def test_monotone_in_k(self, xmax):
        errs = [
            coth_surrogate_error(hierarchy_coefficients(_bath(k=k), "x", 1.0), xmax)
            for k in range(5)
        ]
        assert all(e2 <= e1 for e1, e2 in zip(errs, errs[1:]))

    def test_all_entries_real_finite(self):
        for k in (0, 1, 3, 5):
            ps = hierarchy_coefficients(_bath(k=k, beta=2.5), "x", 1.0)
            for arr in (ps.nu, ps.xi, ps.etabar, ps.aj):
                assert np.isrealobj(arr) and np.all(np.isfinite(arr))
            assert np.isfinite(ps.a0) and np.isfinite(ps.b0)

    def test_surrogate_vectorized(self):
        ps = hierarchy_coefficients(_bath(k=3), "x", 1.0)
        x = np.linspace(0.1, 2.0, 17)
        vals = coth_surrogate(ps, x)
        assert vals.shape == x.shape
        assert np.allclose(vals, 1.0 / np.tanh(x), atol=1e-10)


class TestBathSpecValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(eta_x=-0.1),
            dict(gamma_x=0.0),
            dict(beta=-1.0),
            dict(k_x=-1),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        base = dict(eta_x=1.0, eta_y=1.0, gamma_x=1.0, gamma_y=1.0, k_x=2, k_y=2, beta=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            BathSpec(**base)

    def test_axis_accessor(self):
        bath = BathSpec(0.1, 0.2, 0.3, 0.4, 1, 2, 1.0)
        assert bath.axis("x") == (0.1, 0.3, 1)
        assert bath.axis("y") == (0.2, 0.4, 2)
        with pytest.raises(ValueError):
            bath.axis("z")
