import numpy as np
import pytest
from scipy.special import erf

from afcmem.cavity import CavitySpec, cavity_response, impedance_matched_r1, single_pass_amplitude, tune_length
from afcmem.errors import ConfigurationError, InvalidArgumentError, TruncationError, WindowOverlapError
from afcmem.pulses import GaussianPulseSpec, TimeTrace, gaussian_waveform, time_grid
from afcmem.spectral import AbsorptionSpectrum, CombSpec, make_grid
from afcmem.storage import (
    AfcParams,
    analytic_afc_efficiency,
    comb_mean_depth,
    echo_time,
    extract_echo_efficiency,
    golden_section_max,
    optimize_finesse,
    simulate_cavity_storage,
    simulate_single_pass_storage,
    storage_time_grid,
)

NU0 = 4.95e14
L = 2e-3


def comb_and_pulse(finesse, d_eff, d0=0.0, n_peaks=41, delta=1e6, tau=100e-9, amplitude=1.0):
    gamma = delta / finesse
    comb = CombSpec(n_peaks, delta, gamma, d0 + d_eff * finesse, d0)
    lo, hi = comb.extent_hz
    tg = storage_time_grid(delta, gamma, tau, hi - lo)
    return comb, gaussian_waveform(GaussianPulseSpec(tau, amplitude=amplitude), tg)


class TestAnalytic:
    def test_no_contrast(self):
        assert analytic_afc_efficiency(AfcParams(2.0, 2.0, 5.0)) == 0.0

    def test_value(self):
        eta = analytic_afc_efficiency(AfcParams(4.0, 0.4, 4.0))
        assert eta == pytest.approx(0.81 * np.exp(-0.9) * np.exp(-7 / 16) * np.exp(-0.4), rel=1e-14)

    def test_infinite_finesse_optimum(self):
        # Independent oracle: brute force of x^2 exp(-x) on (0, 10].
        x = np.arange(1, 100001) * 1e-4
        y = x**2 * np.exp(-x)
        assert y.max() == pytest.approx(4 * np.exp(-2), rel=1e-8)
        assert x[np.argmax(y)] == pytest.approx(2.0, abs=1e-4)

        F = 1e8
        f = lambda de: analytic_afc_efficiency(AfcParams(de * F, 0.0, F))  # noqa: E731
        de_best = golden_section_max(f, 1e-6, 10.0, 1e-6)
        assert de_best == pytest.approx(2.0, abs=1e-3)
        assert f(de_best) == pytest.approx(4 * np.exp(-2), rel=1e-6)

    @pytest.mark.parametrize("kw", [dict(d=1, d0=2, finesse=3), dict(d=1, d0=0, finesse=1.0), dict(d=1, d0=-1, finesse=3)])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            AfcParams(**kw)


class TestOptimize:
    def test_against_brute_force(self):
        F_best, eta = optimize_finesse(20.0, 0.0)
        grid = np.arange(1.01, 100.0, 1e-4)
        de = 20.0 / grid
        vals = de**2 * np.exp(-de) * np.exp(-7 / grid**2)
        assert F_best == pytest.approx(grid[np.argmax(vals)], abs=2e-3)
        assert eta == pytest.approx(vals.max(), rel=1e-7)

    def test_range_invariance(self):
        a, _ = optimize_finesse(20.0, 0.0, (1.01, 100.0))
        b, _ = optimize_finesse(20.0, 0.0, (5.0, 40.0))
        assert a == pytest.approx(b, abs=2e-3)

    def test_degenerate(self):
        F, eta = optimize_finesse(1.0, 1.0, (2.0, 50.0))
        assert F == 2.0 and eta == 0.0

    @pytest.mark.parametrize("rng", [(5.0, 5.0), (10.0, 2.0), (1.0, 10.0), (2.0, 101.0)])
    def test_bad_range(self, rng):
        with pytest.raises(InvalidArgumentError):
            optimize_finesse(10.0, 0.0, rng)

    def test_golden_section_tie_prefers_lower(self):
        assert golden_section_max(lambda x: 1.0, 2.0, 9.0) == 2.0


class TestEchoTime:
    @pytest.mark.parametrize("delta,t", [(0.9e6, 1.111e-6), (1e6, 1e-6), (0.5e6, 2e-6)])
    def test_examples(self, delta, t):
        assert echo_time(delta) == pytest.approx(t, rel=1e-3)

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            echo_time(0.0)


# Energy share of a Gaussian pulse inside +-1.5 intensity FWHM.
WINDOW_SHARE = erf(3 * np.sqrt(np.log(2)))

# Mean depth of a Gaussian peak over one period, relative to peak_d / F.
GAUSS_AREA = np.sqrt(np.pi / (4 * np.log(2)))


class TestExtract:
    tg = time_grid(10e-9, 2048, -2e-6)

    def ref(self, t0=0.0, amp=1.0):
        return gaussian_waveform(GaussianPulseSpec(100e-9, t_center_s=t0, amplitude=amp), self.tg)

    def test_perfect_recall(self):
        m = extract_echo_efficiency(self.ref(1e-6), self.ref(), 1e-6)
        assert m.efficiency == pytest.approx(1.0, rel=1e-3)
        assert m.efficiency == pytest.approx(WINDOW_SHARE, rel=1e-4)
        assert m.echo_peak_time_s == pytest.approx(1e-6, abs=1e-10)

    def test_zero(self):
        y = TimeTrace(self.tg, np.zeros(2048))
        assert extract_echo_efficiency(y, self.ref(), 1e-6).efficiency == 0.0

    def test_half(self):
        m = extract_echo_efficiency(self.ref(1e-6, 1 / np.sqrt(2)), self.ref(), 1e-6)
        assert m.efficiency == pytest.approx(0.5, rel=1e-3)
        assert m.efficiency == pytest.approx(0.5 * WINDOW_SHARE, rel=1e-4)

    def test_overlap(self):
        with pytest.raises(WindowOverlapError):
            extract_echo_efficiency(self.ref(), self.ref(), 0.2e-6)

    def test_window_outside(self):
        with pytest.raises(TruncationError):
            extract_echo_efficiency(self.ref(), self.ref(), 19e-6)

    def test_default_window(self):
        m = extract_echo_efficiency(self.ref(1e-6), self.ref(), 1e-6)
        assert m.window[1] - m.window[0] == pytest.approx(2 * 1.5 * 100e-9, rel=1e-3)


class TestSinglePass:
    def test_no_comb_no_echo(self):
        comb, x = comb_and_pulse(4, 1.0)
        empty = AbsorptionSpectrum(make_grid(0, 1e6, 64), np.zeros(64))
        y, m = simulate_single_pass_storage(x, empty, L, NU0, delta_hz=1e6)
        assert m.efficiency < 1e-12
        assert y.energy == pytest.approx(x.energy, rel=1e-9)

    def test_echo_time_and_exact_gaussian_comb(self):
        comb, x = comb_and_pulse(4, 0.25)
        _, m = simulate_single_pass_storage(x, comb, L, NU0)
        assert m.echo_peak_time_s == pytest.approx(1e-6, abs=0.02e-6)
        de = GAUSS_AREA * comb.peak_d / comb.finesse
        exact = de**2 * np.exp(-de) * np.exp(-7 / comb.finesse**2)
        assert m.efficiency == pytest.approx(exact, rel=0.02)

    @pytest.mark.xfail(strict=True, reason="closed formula omits the Gaussian peak-area factor; deviation is 10.6%")
    def test_formula_at_f4_d1(self):
        comb, x = comb_and_pulse(4, 0.25)
        _, m = simulate_single_pass_storage(x, comb, L, NU0)
        eta = analytic_afc_efficiency(AfcParams(comb.peak_d, 0.0, 4))
        assert m.efficiency == pytest.approx(eta, rel=0.10)

    def test_formula_agreement_in_accepted_range(self):
        comb, x = comb_and_pulse(5, 1.0)
        _, m = simulate_single_pass_storage(x, comb, L, NU0)
        eta = analytic_afc_efficiency(AfcParams(comb.peak_d, 0.0, 5))
        assert m.efficiency == pytest.approx(eta, rel=0.10)

    def test_optimum_crossing(self):
        effs = []
        for de in (0.5, 1.0, 2.0, 4.0, 8.0):
            comb, x = comb_and_pulse(8, de)
            effs.append(simulate_single_pass_storage(x, comb, L, NU0)[1].efficiency)
        # The field simulation sees an averaged depth ~1.06 d~; its optimum sits near d~ = 2.
        assert int(np.argmax(effs)) == 2
        assert effs[0] < effs[1] < effs[2] > effs[3] > effs[4]

    @pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
    def test_linearity(self, c):
        comb, x1 = comb_and_pulse(5, 1.0)
        _, xc = comb_and_pulse(5, 1.0, amplitude=c)
        y1, m1 = simulate_single_pass_storage(x1, comb, L, NU0)
        yc, mc = simulate_single_pass_storage(xc, comb, L, NU0)
        assert yc.energy == pytest.approx(c**2 * y1.energy, rel=1e-9)
        assert mc.efficiency == pytest.approx(m1.efficiency, rel=1e-9)

    def test_causality(self):
        comb, x = comb_and_pulse(5, 1.0)
        y, _ = simulate_single_pass_storage(x, comb, L, NU0)
        onset = -5 * 100e-9
        before = y.intensity[y.t < onset].sum() * y.grid.dt_s
        assert before < 1e-10 * y.energy

    def test_energy_bound(self):
        comb, x = comb_and_pulse(5, 2.0)
        y, _ = simulate_single_pass_storage(x, comb, L, NU0)
        assert y.energy <= x.energy

    def test_square_comb_peak_transmission(self):
        """Square peaks, d0=0: gaps are transparent and the peaks transmit exp(-d)."""
        comb = CombSpec(41, 1e6, 0.2e6, 3.0, 0.0, "square")
        lo, hi = comb.extent_hz
        tg = storage_time_grid(1e6, 0.2e6, 100e-9, hi - lo)
        x = gaussian_waveform(GaussianPulseSpec(100e-9), tg)
        y, _ = simulate_single_pass_storage(x, comb, L, NU0)
        from afcmem.pulses import to_spectrum

        X, Y = to_spectrum(x), to_spectrum(y)
        ratio = Y.power / np.where(X.power > 0, X.power, 1)
        nu = np.where(X.power > 1e-12 * X.power.max(), X.nu, np.nan)
        at_peaks = np.isin(np.round(nu), np.round(comb.peak_centers_hz))
        gaps = np.isin(np.round(nu), np.round(comb.peak_centers_hz + 0.5e6))
        np.testing.assert_allclose(ratio[at_peaks], np.exp(-3.0), rtol=1e-9)
        np.testing.assert_allclose(ratio[gaps], 1.0, rtol=1e-9)
        assert y.energy <= x.energy

    def test_missing_delta(self):
        _, x = comb_and_pulse(4, 1.0)
        with pytest.raises(InvalidArgumentError):
            simulate_single_pass_storage(x, AbsorptionSpectrum(make_grid(0, 1e6, 64), np.zeros(64)), L, NU0)


class TestCavity:
    def weak_comb(self):
        # Gaussian peaks, F=10; peak depth chosen for ~10% mean single-pass absorption.
        comb, x = comb_and_pulse(10, 0.099)
        return comb, x

    def test_enhancement(self):
        comb, x = self.weak_comb()
        d_avg = comb_mean_depth(comb)
        assert 1 - np.exp(-d_avg) == pytest.approx(0.10, abs=0.01)
        cav = CavitySpec(L, impedance_matched_r1(d_avg), 0.997, mode_coupling=1.0)
        _, m_cav = simulate_cavity_storage(x, comb, cav, NU0)
        _, m_free = simulate_single_pass_storage(x, comb, L, NU0)
        eta_formula = analytic_afc_efficiency(AfcParams(comb.peak_d, 0.0, comb.finesse))
        assert m_cav.efficiency > 3 * m_free.efficiency
        assert m_cav.efficiency > 3 * eta_formula
        assert m_cav.echo_peak_time_s == pytest.approx(1e-6, abs=0.02e-6)

    @pytest.mark.parametrize("d_eff", [0.05, 0.099, 0.2, 0.5])
    def test_mode_coupling_ceiling(self, d_eff):
        comb, x = comb_and_pulse(10, d_eff)
        cav = CavitySpec(L, impedance_matched_r1(comb_mean_depth(comb)), 0.997, mode_coupling=0.84)
        _, m = simulate_cavity_storage(x, comb, cav, NU0)
        assert m.efficiency <= 0.84 + 1e-6

    def test_no_comb_no_echo(self):
        _, x = self.weak_comb()
        empty = AbsorptionSpectrum(make_grid(0, 1e6, 64), np.zeros(64))
        cav = CavitySpec(L, 0.8, 0.9999, mode_coupling=1.0)
        _, m = simulate_cavity_storage(x, empty, cav, NU0, delta_hz=1e6)
        assert m.efficiency < 1e-6

    def test_unaligned_raises(self):
        comb, x = self.weak_comb()
        cav = CavitySpec(L, 0.8, 0.997)
        # Half an FSR away from resonance at the comb centre.
        from afcmem.cavity import shift_length

        cav = shift_length(tune_length(cav, NU0), np.pi, NU0)
        with pytest.raises(ConfigurationError, match="no cavity resonance"):
            simulate_cavity_storage(x, comb, cav, NU0, align=False, comb_halfwidth_hz=1e6)

    def test_cw_zero_reflection(self):
        d = 0.3
        g = make_grid(0, 1e6, 64)
        spec = AbsorptionSpectrum(g, np.full(64, d))
        cav = tune_length(CavitySpec(L, np.exp(-2 * d), 1.0), NU0)
        a = single_pass_amplitude(spec, None, cav.length_m, NU0, n_bg=cav.n_bg)
        r = cavity_response(a, cav.r1_power, cav.r2_power).r_of_nu
        assert abs(r[32]) ** 2 < 1e-6
