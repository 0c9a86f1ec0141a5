import math
from types import SimpleNamespace

import numpy as np
import pytest

from mrbnn import photonics
from mrbnn.errors import DegenerateResonatorError, DomainError
from mrbnn.photonics import (FpvSample, FpvStatistics, GeometrySurrogate,
                             MrDesign, RingClass, channel_resolution,
                             crosstalk_phi, delta_lambda_of, fwhm_and_q,
                             sample_fpv_map, sensitivity_slope,
                             shifted_resonance, transmission,
                             transmission_from_phase)


def brute_force_noise(lams, q):
    """Independent oracle: direct double-loop crosstalk summation."""
    out = []
    for i, li in enumerate(lams):
        delta = li / (2.0 * q)
        acc = 0.0
        for j, lj in enumerate(lams):
            if i != j:
                acc += delta**2 / ((li - lj)**2 + delta**2)
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# transmission
# ---------------------------------------------------------------------------

class TestTransmission:
    def test_lossless_allpass_is_unity(self):
        phis = np.linspace(0, 2 * np.pi, 37)
        for r in (0.1, 0.5, 0.9, 0.99):
            t = transmission_from_phase(np.cos(phis), r, 1.0)
            assert np.allclose(t, 1.0, atol=1e-12)

    def test_critical_coupling_extinction(self):
        for ra in (0.3, 0.7, 0.95):
            assert transmission_from_phase(1.0, ra, ra) == pytest.approx(
                0.0, abs=1e-12)

    def test_antiresonance_closed_form(self):
        # oracle: at cos(phi) = -1 the expression reduces to
        # ((a + r) / (1 + r a))^2
        r, a = 0.9, 0.95
        expected = ((a + r) / (1 + r * a)) ** 2
        assert transmission_from_phase(-1.0, r, a) == pytest.approx(
            expected, rel=1e-12)
        assert expected == pytest.approx(0.9946164296975465, rel=1e-12)

    def test_bounded_on_grid(self):
        rng = np.random.Generator(np.random.PCG64(42))
        r = rng.uniform(0.01, 0.999, 10_000)
        a = rng.uniform(0.01, 1.0, 10_000)
        cos_phi = np.cos(rng.uniform(0, 2 * np.pi, 10_000))
        t = photonics._kernels.all_pass_transmission(cos_phi, 0.9, 0.95)
        t_grid = [transmission_from_phase(c, ri, ai)
                  for c, ri, ai in zip(cos_phi[:100], r[:100], a[:100])]
        assert np.all((t >= -1e-9) & (t <= 1 + 1e-9))
        assert np.all((np.array(t_grid) >= -1e-9)
                      & (np.array(t_grid) <= 1 + 1e-9))

    def test_resonance_is_minimum(self, multibit):
        lam0 = multibit.resonant_wavelength_nm
        offsets = np.linspace(-0.5, 0.5, 501)
        t = transmission(multibit, lam0 + offsets, lam0)
        assert np.argmin(t) == 250
        assert t[250] == pytest.approx(
            ((multibit.amplitude_a - multibit.self_coupling_r)
             / (1 - multibit.self_coupling_r * multibit.amplitude_a)) ** 2,
            abs=1e-9)

    def test_phase_periodicity(self):
        phis = np.linspace(0, 2 * np.pi, 100)
        t1 = transmission_from_phase(np.cos(phis), 0.8, 0.9)
        t2 = transmission_from_phase(np.cos(phis + 2 * np.pi), 0.8, 0.9)
        assert np.allclose(t1, t2, atol=1e-12)

    def test_shifted_resonance_moves_dip(self, multibit):
        lam0 = multibit.resonant_wavelength_nm
        t_on = transmission(multibit, lam0, lam0)
        t_off = transmission(multibit, lam0, lam0 + 1.0)
        assert t_off > t_on

    def test_nonfinite_rejected(self, multibit):
        with pytest.raises(DomainError):
            transmission(multibit, float("nan"), 1550.0)
        with pytest.raises(DomainError):
            transmission(multibit, 1550.0, float("inf"))
        with pytest.raises(DomainError):
            transmission(multibit, -1.0, 1550.0)


class TestFwhmAndQ:
    def test_q_is_lambda_over_fwhm(self, multibit):
        fwhm, q = fwhm_and_q(multibit)
        assert q == pytest.approx(multibit.resonant_wavelength_nm / fwhm,
                                  rel=1e-12)

    def test_fwhm_inversion_at_q5000(self):
        # lambda = 1550 nm and Q = 5000 imply FWHM = 0.31 nm
        assert 1550.0 / 5000.0 == pytest.approx(0.31, rel=1e-12)

    def test_multibit_q_within_window(self, multibit):
        _, q = fwhm_and_q(multibit)
        assert abs(q - 5000.0) / 5000.0 <= 0.10

    def test_singlebit_q(self, designs):
        _, q = fwhm_and_q(designs[RingClass.SINGLE_BIT])
        assert q == pytest.approx(25000.0, rel=1e-6)

    def test_degenerate_resonator(self):
        fake = SimpleNamespace(self_coupling_r=1.0, amplitude_a=1.0,
                               resonant_wavelength_nm=1550.0,
                               group_index_ng=4.2,
                               circumference_nm=31415.9)
        with pytest.raises(DegenerateResonatorError):
            fwhm_and_q(fake)


# ---------------------------------------------------------------------------
# crosstalk / resolution
# ---------------------------------------------------------------------------

class TestCrosstalk:
    def test_zero_detuning(self):
        assert crosstalk_phi(1550.0, 1550.0, 5000.0) == 1.0

    def test_one_nm_detuning_value(self):
        delta = 1550.0 / (2 * 5000.0)
        expected = delta**2 / (1.0 + delta**2)
        got = crosstalk_phi(1550.0, 1551.0, 5000.0)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(0.0234613, abs=1e-6)

    def test_high_q_limit(self):
        assert crosstalk_phi(1550.0, 1551.0, 1e12) < 1e-12

    def test_symmetric_with_shared_delta(self):
        # evaluated with delta taken from the same reference channel
        assert crosstalk_phi(1550.0, 1552.0, 5000.0) == pytest.approx(
            crosstalk_phi(1550.0, 1548.0, 5000.0), rel=1e-12)

    def test_strictly_decreasing_in_detuning_and_q(self):
        dets = [0.5, 1.0, 2.0, 4.0]
        vals = [crosstalk_phi(1550.0, 1550.0 + d, 5000.0) for d in dets]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        qs = [2000.0, 5000.0, 10000.0, 50000.0]
        vals = [crosstalk_phi(1550.0, 1551.0, q) for q in qs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_bad_q(self):
        with pytest.raises(DomainError):
            crosstalk_phi(1550.0, 1551.0, 0.0)


class TestChannelResolution:
    def comb(self, n, spacing=1.0, center=1550.0):
        return [center + (i - (n - 1) / 2) * spacing for i in range(n)]

    def test_matches_brute_force(self):
        lams = self.comb(15)
        res = channel_resolution(lams, 5000.0)
        oracle = brute_force_noise(lams, 5000.0)
        assert np.allclose(res.noise_powers, oracle, rtol=1e-12)
        assert res.levels == pytest.approx(1.0 / max(oracle), rel=1e-12)

    def test_q5000_fifteen_channels(self):
        # the uncalibrated Q = 5000 comb resolves 14 levels (3 bits); the
        # 4-bit claim needs the calibrated design window (next test)
        res = channel_resolution(self.comb(15), 5000.0)
        assert res.levels == pytest.approx(14.0015, abs=1e-3)
        assert res.bits == 3

    def test_calibrated_multibit_reaches_4_bits(self, multibit):
        _, q = fwhm_and_q(multibit)
        res = channel_resolution(self.comb(15), q)
        assert res.levels >= 16.0
        assert res.bits >= 4

    def test_middle_channel_pairwise_sum(self):
        lams = [1550.0, 1551.0, 1552.0]
        res = channel_resolution(lams, 5000.0)
        expected = (crosstalk_phi(1551.0, 1550.0, 5000.0)
                    + crosstalk_phi(1551.0, 1552.0, 5000.0))
        assert res.noise_powers[1] == pytest.approx(expected, rel=1e-12)

    def test_single_channel_sentinel(self):
        res = channel_resolution([1550.0], 5000.0, max_bits=16)
        assert res.levels == math.inf
        assert res.bits == 16

    def test_wide_detuning_levels_grow(self):
        prev = 0.0
        for spacing in (1.0, 2.0, 4.0, 8.0):
            res = channel_resolution(self.comb(2, spacing), 5000.0)
            assert res.levels > prev
            prev = res.levels

    def test_adding_channel_never_decreases_noise(self):
        for n in range(2, 12):
            a = channel_resolution(self.comb(n), 5000.0)
            b = channel_resolution(self.comb(n + 1), 5000.0)
            assert max(b.noise_powers) >= max(a.noise_powers) - 1e-15

    def test_doubling_spacing_never_decreases_levels(self):
        for n in (3, 7, 15):
            a = channel_resolution(self.comb(n, 1.0), 5000.0)
            b = channel_resolution(self.comb(n, 2.0), 5000.0)
            assert b.levels >= a.levels

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            channel_resolution([], 5000.0)


# ---------------------------------------------------------------------------
# sensitivity slopes
# ---------------------------------------------------------------------------

class TestSensitivitySlope:
    AT = (400.0, 220.0, 5000.0)

    def test_constant_fn(self):
        assert sensitivity_slope(lambda w, t, r: 1550.0, "width", 1.0,
                                 self.AT) == 0.0

    def test_linear_fn_exact(self):
        fn = lambda w, t, r: 1500.0 + 2.0 * w
        for eps in (0.01, 0.1, 1.0, 10.0):
            assert sensitivity_slope(fn, "width", eps, self.AT) \
                == pytest.approx(2.0, rel=1e-9)

    def test_quadratic_surrogate_exact_central_difference(self):
        # central differences are exact for quadratics, any epsilon
        surr = GeometrySurrogate(1550.0, self.AT, (0.06, 0.18, 0.09),
                                 (-1e-4, 0.0, 0.0))
        truth = abs(0.06 + 2 * (-1e-4) * 0.0)  # derivative at the base point
        for eps in (0.5, 2.0):
            assert sensitivity_slope(surr, "width", eps, self.AT) \
                == pytest.approx(truth, rel=1e-9)

    def test_cubic_second_order_convergence(self):
        # for a cubic term the central-difference error is exactly
        # quadratic in epsilon: halving epsilon shrinks it 4x
        fn = lambda w, t, r: 1550.0 + 0.5 * (w - 400.0) + 1e-3 * (w - 400.0)**3
        truth = 0.5
        err1 = abs(sensitivity_slope(fn, "width", 2.0, self.AT) - truth)
        err2 = abs(sensitivity_slope(fn, "width", 1.0, self.AT) - truth)
        assert err1 / err2 == pytest.approx(4.0, rel=1e-6)

    def test_parameter_axes(self):
        fn = lambda w, t, r: 1550.0 + 3.0 * t + 5.0 * r
        assert sensitivity_slope(fn, "thickness", 0.5, self.AT) \
            == pytest.approx(3.0, rel=1e-9)
        assert sensitivity_slope(fn, "radius", 0.5, self.AT) \
            == pytest.approx(5.0, rel=1e-9)

    def test_bad_args(self):
        with pytest.raises(DomainError):
            sensitivity_slope(lambda w, t, r: 0.0, "gap", 1.0, self.AT)
        with pytest.raises(DomainError):
            sensitivity_slope(lambda w, t, r: 0.0, "width", 0.0, self.AT)


# ---------------------------------------------------------------------------
# FPV sampling
# ---------------------------------------------------------------------------

class TestFpvSampling:
    def test_zero_sigma_zero_shift(self, multibit):
        stats = FpvStatistics(sigma_nm=(0.0, 0.0, 0.0), seed=1)
        fmap = sample_fpv_map([multibit], stats, 100)
        assert np.all(fmap.delta_lambdas_nm == 0.0)

    def test_shift_arithmetic(self, multibit):
        from dataclasses import replace
        d = replace(multibit, sensitivity_slopes=(1.0, 1.0, 1.0))
        assert delta_lambda_of(d, 4.9, 1.5, 0.75) == pytest.approx(
            7.15, rel=1e-12)

    def test_linearity_in_deviations(self, multibit):
        base = delta_lambda_of(multibit, 1.3, -0.4, 0.2)
        for c in (-2.0, 0.5, 3.0):
            assert delta_lambda_of(multibit, 1.3 * c, -0.4 * c, 0.2 * c) \
                == pytest.approx(c * base, rel=1e-12)

    def test_seed_reproducibility(self, multibit):
        stats = FpvStatistics(seed=77)
        a = sample_fpv_map([multibit], stats, 500)
        b = sample_fpv_map([multibit], stats, 500)
        assert a.delta_lambdas_nm.tobytes() == b.delta_lambdas_nm.tobytes()
        c = sample_fpv_map([multibit], stats, 500, seed=78)
        assert a.delta_lambdas_nm.tobytes() != c.delta_lambdas_nm.tobytes()

    def test_component_statistics(self, multibit):
        stats = FpvStatistics(seed=5)
        n = 20000
        fmap = sample_fpv_map([multibit], stats, n)
        dw = np.array([s.dw_nm for s in fmap.samples])
        dt = np.array([s.dt_nm for s in fmap.samples])
        dr = np.array([s.dR_nm for s in fmap.samples])
        for vals, sigma in ((dw, 4.9), (dt, 1.5), (dr, 0.75)):
            assert abs(np.mean(vals)) <= 3 * sigma / math.sqrt(n)
            assert abs(np.std(vals) - sigma) <= 3 * sigma / math.sqrt(n)

    def test_sample_invariant(self, multibit):
        stats = FpvStatistics(seed=9)
        fmap = sample_fpv_map([multibit], stats, 50)
        for s in fmap.samples:
            assert s.delta_lambda_nm == pytest.approx(
                delta_lambda_of(multibit, s.dw_nm, s.dt_nm, s.dR_nm),
                abs=1e-9)

    def test_population_calibration(self, toolkit_config):
        from mrbnn.config import population_design
        design = population_design(toolkit_config)
        stats = FpvStatistics(seed=toolkit_config.fpv.seed)
        fmap = sample_fpv_map([design], stats, 10_000)
        assert abs(fmap.delta_std_nm - 24.417) / 24.417 <= 0.05
        assert abs(fmap.delta_mean_nm - (-0.1461)) <= 0.5

    def test_count_validation(self, multibit):
        with pytest.raises(DomainError):
            sample_fpv_map([multibit], FpvStatistics(), 0)
        with pytest.raises(DomainError):
            sample_fpv_map([], FpvStatistics(), 5)


class TestShiftedResonance:
    def test_zero_residual(self, multibit):
        s = FpvSample(1.0, 1.0, 1.0, 5.0)
        assert shifted_resonance(multibit, s, 0.0) \
            == multibit.resonant_wavelength_nm

    def test_full_residual(self, multibit):
        s = FpvSample(0.0, 0.0, 0.0, 0.5)
        assert shifted_resonance(multibit, s, 1.0) \
            == multibit.resonant_wavelength_nm + 0.5

    def test_partial_tuning(self, multibit):
        s = FpvSample(0.0, 0.0, 0.0, 7.15)
        got = shifted_resonance(multibit, s, 0.2)
        assert got == pytest.approx(multibit.resonant_wavelength_nm + 1.43,
                                    rel=1e-12)


class TestMrDesign:
    def test_coupler_invariant_enforced(self, multibit):
        from dataclasses import replace
        with pytest.raises(DomainError):
            replace(multibit, cross_coupling_kappa=0.5)

    def test_round_trip_length_derived(self, multibit):
        assert multibit.circumference_nm == pytest.approx(
            2 * math.pi * multibit.radius_um * 1000.0, rel=1e-12)

    def test_field_validation(self, multibit):
        from dataclasses import replace
        with pytest.raises(DomainError):
            replace(multibit, radius_um=-1.0)
        with pytest.raises(DomainError):
            replace(multibit, amplitude_a=1.5)
        with pytest.raises(DomainError):
            replace(multibit, q_factor=0.0)
