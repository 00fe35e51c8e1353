import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from nvdnp.diffusion import DiffusionGrid, RadialDiffusion, RadialGeometry, diffusion_buildup
from nvdnp.dnp import (
    BuildupCurve, DnpSpectrum, dnp_spectrum, enhanced_polarization, fit_buildup,
    recovery_correction_factor, recovery_time_for_factor, relax_toward, simulate_buildup,
    thermal_polarization,
)
from nvdnp.ensemble import GridSpec, LineshapeParams, broaden, default_grid, synthesize_odmr
from nvdnp.errors import ConfigError, DomainError, FitError
from nvdnp.spin_model import TransitionLine

from conftest import SAMPLE_LABELS

LORENTZ = LineshapeParams("lorentzian", 8.0)
NU_N = 5.054176  # MHz at 0.472 T


def single_line(center=16.1, fwhm=8.0, span=0.8, n=3201, profile="lorentzian"):
    grid = GridSpec.centered(center, span, n)
    return broaden([TransitionLine(center, 1.0, "+1", 0)], LineshapeParams(profile, fwhm), grid)


def mirror_residual(spec, center):
    f, s = spec.mw_frequencies, spec.signal
    mirrored = np.interp(2 * center - f, f, s)
    return np.max(np.abs(s + mirrored)) / np.max(np.abs(s))


# --- spectra -----------------------------------------------------------------

@pytest.mark.parametrize("profile", ["lorentzian", "gaussian"])
def test_single_line_gives_odd_spectrum(profile):
    odmr = single_line(profile=profile)
    spec = dnp_spectrum(odmr, NU_N)
    center = 16.1
    assert mirror_residual(spec, center) < 1e-9
    assert spec.at(center) == pytest.approx(0.0, abs=1e-12 * np.max(np.abs(spec.signal)))


def test_zero_larmor_frequency_gives_zero():
    assert not np.any(dnp_spectrum(single_line(), 0.0).signal)


def test_negative_larmor_rejected():
    with pytest.raises(DomainError):
        dnp_spectrum(single_line(), -1.0)


def test_narrow_grid_rejected():
    with pytest.raises(DomainError):
        dnp_spectrum(single_line(span=0.02, n=401), NU_N)


def test_scale_is_linear():
    odmr = single_line()
    np.testing.assert_allclose(dnp_spectrum(odmr, NU_N, 2.5).signal,
                               2.5 * dnp_spectrum(odmr, NU_N).signal)


@settings(max_examples=30, deadline=None)
@given(
    offsets=st.lists(st.floats(0.01, 0.2), min_size=1, max_size=4),
    amps=st.lists(st.floats(0.1, 5.0), min_size=4, max_size=4),
    fwhm=st.floats(2.0, 20.0),
)
def test_symmetric_input_gives_antisymmetric_output(offsets, amps, fwhm):
    center = 16.1
    lines = [TransitionLine(center, amps[0], "+1", 0)]
    for d, a in zip(offsets, amps[1:] + amps[:1]):
        lines += [TransitionLine(center - d, a, "+1", 0), TransitionLine(center + d, a, "+1", 0)]
    odmr = broaden(lines, LineshapeParams("gaussian", fwhm), GridSpec.centered(center, 0.8, 4001))
    spec = dnp_spectrum(odmr, NU_N)
    assert mirror_residual(spec, center) < 1e-9


@pytest.mark.parametrize("label", SAMPLE_LABELS)
def test_zero_integral(config, samples, label):
    s = samples[label]
    grid = default_grid(config.nv, "+1", 0.8, 3201)
    odmr = synthesize_odmr(s.p, config.nv, config.site_tensors, config.lineshape, grid)
    spec = dnp_spectrum(odmr, NU_N)
    integral = np.trapezoid(spec.signal, spec.mw_frequencies)
    assert abs(integral) < 1e-4 * np.trapezoid(np.abs(spec.signal), spec.mw_frequencies)


def test_quartet_satellites_are_equal_sign_pairs(nv, secular_sites):
    grid = default_grid(nv, "+1", 0.8, 3201)
    odmr = synthesize_odmr(1.0, nv, secular_sites, LORENTZ, grid)
    spec = dnp_spectrum(odmr, NU_N)
    s = spec.signal
    pos, _ = find_peaks(s, prominence=0.05 * s.max())
    neg, _ = find_peaks(-s, prominence=0.05 * s.max())
    assert pos.size == neg.size == 4
    # each satellite: one negative lobe below, one positive lobe above its line
    f0 = nv.D + nv.gamma_e * nv.B
    for off, (i_neg, i_pos) in zip([-0.195, -0.065, 0.065, 0.195], zip(neg, pos)):
        assert spec.mw_frequencies[i_neg] < f0 + off < spec.mw_frequencies[i_pos]
        assert s[i_pos] == pytest.approx(-s[i_neg], rel=0.01)
    # mirror partners: satellites at -d and +d carry equal, opposite lobes
    np.testing.assert_allclose(s[pos], -s[neg][::-1], rtol=1e-9)
    # direct kernel evaluation
    L = odmr.intensities
    f = odmr.frequencies
    direct = np.interp(f - NU_N * 1e-3, f, L, 0, 0) - np.interp(f + NU_N * 1e-3, f, L, 0, 0)
    np.testing.assert_allclose(s, direct, rtol=0, atol=1e-12 * s.max())


def test_dnp_spectrum_validation():
    with pytest.raises(DomainError):
        DnpSpectrum([2.0, 1.0], [0.0, 0.0])


def test_normalized_and_interpolation():
    spec = DnpSpectrum([1.0, 2.0, 3.0], [0.0, -4.0, 2.0]).normalized()
    np.testing.assert_allclose(spec.signal, [0.0, -1.0, 0.5])
    assert spec.at(2.5) == pytest.approx(-0.25)
    assert spec.at(5.0) == 0.0


# --- polarization -------------------------------------------------------------

def test_thermal_polarization_values():
    assert thermal_polarization(0.0, 300) == 0.0
    assert thermal_polarization(0.472, 300, convention="tanh_half") == pytest.approx(4.04e-7, rel=1e-3)
    assert thermal_polarization(0.472, 300) == pytest.approx(8.08e-7, rel=1e-3)


def test_conventions_differ_by_two():
    ht = thermal_polarization(0.472, 300, convention="high_temperature_no_half")
    th = thermal_polarization(0.472, 300, convention="tanh_half")
    assert ht / th == pytest.approx(2.0, rel=1e-9)


@pytest.mark.parametrize("bad", [dict(B=-1, temperature=300), dict(B=1, temperature=0)])
def test_thermal_polarization_domain(bad):
    with pytest.raises(DomainError):
        thermal_polarization(**bad)


def test_enhanced_polarization_examples():
    p_th = thermal_polarization(0.472, 300)
    assert enhanced_polarization(1, p_th) == p_th
    assert 100 * enhanced_polarization(1264, p_th) == pytest.approx(0.10, abs=0.005)
    assert 100 * enhanced_polarization(138, p_th) == pytest.approx(0.011, abs=0.0005)
    with pytest.raises(DomainError):
        enhanced_polarization(2.0, 1.5)


# --- buildup -------------------------------------------------------------------

def test_simulate_buildup_analytic_points():
    T = 15.28
    c = simulate_buildup(T, 2.0, [0.0, T, 10 * T])
    assert c.polarization[0] == 0.0
    assert c.polarization[1] == pytest.approx(2.0 * (1 - np.exp(-1)), rel=1e-15)
    assert c.polarization[2] == pytest.approx(2.0, rel=5e-5)


def test_simulate_buildup_deterministic():
    t = np.linspace(0, 60, 50)
    a = simulate_buildup(15.0, 1.0, t, 0.01, seed=3)
    b = simulate_buildup(15.0, 1.0, t, 0.01, seed=3)
    np.testing.assert_array_equal(a.polarization, b.polarization)


def test_noiseless_buildup_strictly_increasing():
    c = simulate_buildup(22.34, 1.0, np.linspace(0, 200, 300))
    assert np.all(np.diff(c.polarization) > 0)


@pytest.mark.parametrize("T", [22.34, 59.55, 36.14, 42.94, 15.28])
@pytest.mark.parametrize("baseline", ["fixed", "free"])
def test_buildup_round_trip(T, baseline):
    curve = simulate_buildup(T, 1e-3, np.linspace(0, 5 * T, 60))
    fit = fit_buildup(curve, baseline=baseline)
    assert fit.T_DNP == pytest.approx(T, rel=1e-6)
    assert fit.P_max == pytest.approx(1e-3, rel=1e-6)


def test_buildup_fit_constant_input_is_error():
    with pytest.raises(FitError):
        fit_buildup(BuildupCurve(np.linspace(0, 10, 20), np.zeros(20)))


def test_buildup_fit_needs_four_times():
    with pytest.raises(DomainError):
        fit_buildup(BuildupCurve([0.0, 1.0, 1.0, 2.0], [0.0, 0.5, 0.5, 0.8]))


def test_buildup_coverage():
    T, n_trials = 15.28, 500
    t = np.linspace(0, 60, 50)
    hits = 0
    for i in range(n_trials):
        fit = fit_buildup(simulate_buildup(T, 1.0, t, 0.01, seed=i))
        hits += abs(fit.T_DNP - T) <= fit.T_DNP_ci
    assert hits / n_trials >= 0.93


def test_relax_toward_closed_form():
    assert relax_toward(0.0, 1.0, 2.0, 8.0) == pytest.approx(1 - np.exp(-4))
    assert relax_toward(0.3, 0.3, 1.0, 5.0) == 0.3


# --- thermal recovery correction -------------------------------------------------

def test_correction_factor_examples():
    assert recovery_correction_factor(1.0, 1.0) == pytest.approx(1.582, abs=1e-3)
    assert recovery_correction_factor(100.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    t = np.linspace(0.1, 10, 50)
    f = [recovery_correction_factor(x, 1.0) for x in t]
    assert np.all(np.diff(f) < 0) and min(f) >= 1


@pytest.mark.parametrize("label", SAMPLE_LABELS)
def test_printed_correction_factors_round_trip(samples, label):
    s = samples[label]
    factor = s.extra["thermal_correction_factor"]
    assert 1.565 <= factor <= 1.844
    t_rec = recovery_time_for_factor(factor, s.T1n)
    assert recovery_correction_factor(t_rec, s.T1n) == pytest.approx(factor, rel=1e-12)


# --- spin diffusion --------------------------------------------------------------

FAST_GRID = DiffusionGrid(n_cells=60, dt=0.1, t_end=600.0, record_every=20)


def test_no_transport_keeps_bulk_at_zero():
    curve = diffusion_buildup(0.0, 30.0, grid=DiffusionGrid(t_end=50.0))
    assert not np.any(curve.polarization)


@pytest.mark.parametrize("scheme, dt", [("implicit", 0.05), ("explicit", 1e-3)])
def test_closed_domain_conserves_total(scheme, dt):
    grid = DiffusionGrid(n_cells=50, dt=dt, t_end=1.0, scheme=scheme)
    model = RadialDiffusion(2.0, None, RadialGeometry(), grid, source_rate=0.0)
    P = np.exp(-model.centers)
    total = model.total(P)
    for _ in range(200):
        P = model.step(P)
        assert model.total(P) == pytest.approx(total, rel=1e-8)


def test_explicit_scheme_stability_limit():
    with pytest.raises(ConfigError):
        RadialDiffusion(4.0, 30.0, RadialGeometry(), DiffusionGrid(dt=0.05, scheme="explicit"))


@pytest.mark.slow
def test_faster_diffusion_shortens_buildup():
    T_eff = []
    for D in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]:
        curve = diffusion_buildup(D, 300.0, grid=FAST_GRID)
        T_eff.append(fit_buildup(curve, baseline="free").T_DNP)
    assert np.all(np.diff(T_eff) < 0)


def test_refinement_changes_trajectory_little():
    coarse = diffusion_buildup(2.0, 100.0, grid=DiffusionGrid(45, 0.1, 200.0, record_every=10))
    fine = diffusion_buildup(2.0, 100.0, grid=DiffusionGrid(90, 0.05, 200.0, record_every=20))
    np.testing.assert_allclose(coarse.times, fine.times)
    assert np.max(np.abs(coarse.polarization - fine.polarization)) < 0.01 * fine.polarization.max()
