"""Spectral analysis and closed-form transmission of the two-level model."""

import math

import numpy as np
import pytest
import scipy.linalg

from ptbloch.errors import DefectivePointError, ValidationError
from ptbloch.two_level import (SpectralData, TwoLevelParams,
                               analytic_transmission, exceptional_points,
                               hamiltonian, instantaneous_populations, spectrum)

SIGMA_Z = np.diag([1.0, -1.0])


class TestHamiltonian:
    def test_v_zero(self):
        h = hamiltonian(0.0, 1.0)
        assert np.array_equal(h, np.array([[0, 1j], [1j, 0]]))

    def test_decoupled_limit(self):
        h = hamiltonian(1.0, 1e-12)
        assert h[0, 0] == -1.0 and h[1, 1] == 1.0
        assert abs(h[0, 1]) <= 1e-12 and abs(h[1, 0]) <= 1e-12

    def test_direct_substitution(self):
        h = hamiltonian(2.0, 1.0)
        assert np.array_equal(h, np.array([[-2.0, 1j], [1j, 2.0]]))

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            hamiltonian(math.nan, 1.0)
        with pytest.raises(ValidationError):
            hamiltonian(0.0, math.inf)
        with pytest.raises(ValidationError):
            hamiltonian(0.0, 0.0)
        with pytest.raises(ValidationError):
            hamiltonian(0.0, -1.0)

    def test_pt_symmetry_identity(self):
        # sigma_z H* sigma_z = H must hold exactly, not within a tolerance
        rng = np.random.default_rng(11)
        for _ in range(200):
            v = float(rng.uniform(-10, 10))
            gamma = float(rng.uniform(1e-3, 5))
            h = hamiltonian(v, gamma)
            assert np.array_equal(SIGMA_Z @ h.conj() @ SIGMA_Z, h)


class TestSpectrum:
    def test_pure_imaginary_at_v_zero(self):
        s = spectrum(0.0, 1.0)
        assert s.eigenvalues[0] == 1j and s.eigenvalues[1] == -1j
        assert not s.at_exceptional_point

    def test_coalescence_at_ep(self):
        s = spectrum(1.0, 1.0)
        assert s.at_exceptional_point
        assert s.eigenvalues[0] == 0 and s.eigenvalues[1] == 0
        assert s.right_eigenvectors is None and s.left_eigenvectors is None
        assert s.overlap == 1.0

    def test_real_eigenvalue_value(self):
        s = spectrum(5.0, 1.0)
        # sqrt(24), frozen from a high-precision evaluation
        assert s.eigenvalues[0] == pytest.approx(4.89897948556635620, abs=1e-14)
        assert s.eigenvalues[1] == pytest.approx(-4.89897948556635620, abs=1e-14)

    def test_spectral_reality_outside(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            gamma = float(rng.uniform(0.05, 3.0))
            v = float(rng.uniform(1.0001, 10) * gamma * rng.choice([-1, 1]))
            lam = spectrum(v, gamma).eigenvalues[0]
            assert abs(lam.imag) < 1e-12 * abs(lam)
            assert lam.real >= 0

    def test_conjugate_pairing_inside(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            gamma = float(rng.uniform(0.05, 3.0))
            v = float(rng.uniform(-0.999, 0.999) * gamma)
            lp, lm = spectrum(v, gamma).eigenvalues
            assert lp == np.conj(lm)
            assert lp.imag > 0 and lp.real == 0

    def test_biorthogonality(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 500:
            gamma = float(rng.uniform(0.05, 3.0))
            v = float(rng.uniform(-8, 8))
            if abs(v * v - gamma * gamma) <= 1e-4:
                continue
            s = spectrum(v, gamma)
            for i, left in enumerate(s.left_eigenvectors):
                for j, right in enumerate(s.right_eigenvectors):
                    expected = 1.0 if i == j else 0.0
                    assert abs(np.vdot(left, right) - expected) < 1e-10
            checked += 1

    def test_eigenvectors_against_brute_force(self):
        # the closed forms must reproduce a generic eigensolver's decomposition
        rng = np.random.default_rng(8)
        for _ in range(100):
            gamma = float(rng.uniform(0.1, 2.0))
            v = float(rng.uniform(-5, 5))
            if abs(v * v - gamma * gamma) <= 1e-3:
                continue
            s = spectrum(v, gamma)
            w, vr = scipy.linalg.eig(hamiltonian(v, gamma))
            order = np.argsort(-w.real - 1e-6 * w.imag)  # lambda_+ first
            assert np.allclose(sorted(w, key=lambda z: -z.real - z.imag),
                               s.eigenvalues, atol=1e-12)
            for idx, mine in zip(order, s.right_eigenvectors):
                ref = vr[:, idx]
                # same ray: unit cross-product magnitude
                cross = ref[0] * mine[1] - ref[1] * mine[0]
                assert abs(cross) < 1e-10

    def test_overlap_values(self):
        assert spectrum(5.0, 1.0).overlap == pytest.approx(0.2, abs=1e-15)
        assert spectrum(0.5, 1.0).overlap == pytest.approx(0.5, abs=1e-15)
        assert spectrum(1.0 + 1e-9, 1.0).overlap == pytest.approx(1.0, abs=1e-8)
        assert spectrum(1000.0, 1.0).overlap == pytest.approx(0.001, abs=1e-15)

    def test_ep_window_uses_tolerance(self):
        assert spectrum(1.0 + 1e-10, 1.0, ep_tolerance=1e-4).at_exceptional_point
        assert not spectrum(1.1, 1.0, ep_tolerance=1e-4).at_exceptional_point


class TestInstantaneousPopulations:
    def test_right_eigenvectors_project_cleanly(self):
        s = spectrum(5.0, 1.0)
        p = instantaneous_populations(s.right_eigenvectors[0], s)
        assert p[0] == pytest.approx(1.0, abs=1e-12)
        p = instantaneous_populations(s.right_eigenvectors[1], s)
        assert p[1] == pytest.approx(1.0, abs=1e-12)

    def test_equal_superposition(self):
        s = spectrum(5.0, 1.0)
        state = (s.right_eigenvectors[0] + s.right_eigenvectors[1]) / math.sqrt(2)
        p = instantaneous_populations(state, s)
        assert p[0] == pytest.approx(0.5, abs=1e-12)
        assert p[0] + p[1] == pytest.approx(1.0, abs=1e-14)

    def test_matches_scipy_left_eigenvectors(self):
        v, gamma = 3.0, 0.7
        s = spectrum(v, gamma)
        w, vl, vr = scipy.linalg.eig(hamiltonian(v, gamma), left=True, right=True)
        state = np.array([0.3 + 0.1j, -0.8 + 0.2j])
        state /= np.linalg.norm(state)
        # brute-force biorthogonal projections
        amps = []
        for i in range(2):
            scale = np.vdot(vl[:, i], vr[:, i])
            amps.append(abs(np.vdot(vl[:, i], state) / scale) ** 2)
        idx = 0 if w[0].real > 0 else 1
        expected = (amps[idx] / sum(amps), amps[1 - idx] / sum(amps))
        p = instantaneous_populations(state, s)
        assert p[0] == pytest.approx(expected[0], abs=1e-12)

    def test_defective_point_rejected(self):
        s = spectrum(1.0, 1.0)
        with pytest.raises(DefectivePointError):
            instantaneous_populations(np.array([1.0, 0.0]), s)

    def test_zero_state_rejected(self):
        s = spectrum(5.0, 1.0)
        with pytest.raises(ValidationError):
            instantaneous_populations(np.array([0.0, 0.0]), s)


class TestExceptionalPoints:
    @pytest.mark.parametrize("gamma", [1.0, 0.2, 2.5])
    def test_pair(self, gamma):
        assert exceptional_points(gamma) == (-gamma, gamma)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            exceptional_points(0.0)


class TestAnalyticTransmission:
    def test_quench_limit(self):
        assert analytic_transmission(1.0, 1e12).p_tr == pytest.approx(1.0, abs=1e-11)

    def test_adiabatic_limit(self):
        r = analytic_transmission(1.0, 1e-6)
        assert r.p_tr == pytest.approx(0.5, abs=1e-12)
        # amplitudes overflow but the log-space fields stay finite
        assert math.isinf(r.asymptotic_mod_psi2_sq)
        assert r.log_mod_psi2_sq == pytest.approx(2 * math.pi * r.beta)
        assert math.isfinite(r.log_mod_psi1_sq)

    def test_reference_value(self):
        # 1/(2 - e^{-2 pi}), frozen from a high-precision evaluation
        r = analytic_transmission(1.0, 0.5)
        assert r.p_tr == pytest.approx(0.500467297008127686, abs=1e-15)
        assert r.beta == 1.0
        assert r.asymptotic_mod_psi1_sq == pytest.approx(534.491655524765, rel=1e-13)
        assert r.asymptotic_mod_psi2_sq == pytest.approx(535.491655524765, rel=1e-13)

    def test_monotone_in_alpha(self):
        alphas = np.logspace(-3, 3, 100)
        values = [analytic_transmission(0.8, float(a)).p_tr for a in alphas]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_range(self):
        for gamma, alpha in [(0.1, 37.0), (2.0, 0.3), (5.0, 1e-3), (1e-6, 2.0)]:
            p = analytic_transmission(gamma, alpha).p_tr
            assert 0.5 < p <= 1.0

    def test_log_space_consistency(self):
        # p_tr must equal m2/(m1+m2) when evaluated from the log fields
        for gamma, alpha in [(1.0, 0.5), (0.3, 2.0), (2.0, 0.05), (1e-5, 1.0)]:
            r = analytic_transmission(gamma, alpha)
            from_logs = 1.0 / (1.0 + math.exp(r.log_mod_psi1_sq - r.log_mod_psi2_sq))
            assert from_logs == pytest.approx(r.p_tr, rel=1e-14)

    def test_tiny_gamma_log_fields(self):
        r = analytic_transmission(1e-12, 1.0)
        assert math.isfinite(r.log_mod_psi1_sq)
        assert r.log_mod_psi1_sq == pytest.approx(math.log(2 * math.pi * r.beta), rel=1e-9)


class TestTwoLevelParams:
    def test_sweep_must_bracket_eps(self):
        with pytest.raises(ValidationError):
            TwoLevelParams(gamma=1.0, alpha=1.0, v_initial=-0.5, v_final=5.0)
        with pytest.raises(ValidationError):
            TwoLevelParams(gamma=1.0, alpha=1.0, v_initial=-5.0, v_final=1.0)

    def test_time_window(self):
        p = TwoLevelParams(gamma=1.0, alpha=0.5, v_initial=-10.0, v_final=20.0)
        assert p.t_initial == -20.0 and p.t_final == 40.0

    def test_positive_rates(self):
        with pytest.raises(ValidationError):
            TwoLevelParams(gamma=-1.0, alpha=1.0, v_initial=-5.0, v_final=5.0)
        with pytest.raises(ValidationError):
            TwoLevelParams(gamma=1.0, alpha=0.0, v_initial=-5.0, v_final=5.0)


def test_spectral_data_is_frozen():
    s = spectrum(5.0, 1.0)
    assert isinstance(s, SpectralData)
    with pytest.raises(Exception):
        s.overlap = 0.0
    with pytest.raises(ValueError):
        s.right_eigenvectors[0][0] = 1.0
