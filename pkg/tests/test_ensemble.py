import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from nvdnp.errors import DomainError, ResolutionError, ResolutionWarning
from nvdnp.ensemble import (
    GridSpec, LineshapeParams, SpectrumGrid, broaden, default_grid, occupancy_weights,
    pattern_spectra, profile, synthesize_odmr,
)
from nvdnp.spin_model import HyperfineTensor, NvParameters, TransitionLine

LORENTZ = LineshapeParams("lorentzian", 8.0)


@pytest.fixture
def grid(nv):
    return default_grid(nv, "+1", 0.8, 3201)


@pytest.mark.parametrize("p, expected", [
    (0.0, [1, 0, 0, 0]),
    (1.0, [0, 0, 0, 1]),
    (0.5, [0.125, 0.375, 0.375, 0.125]),
])
def test_occupancy_weights_examples(p, expected):
    np.testing.assert_allclose(occupancy_weights(p), expected, atol=1e-15)


@pytest.mark.parametrize("p", [-0.01, 1.2, np.nan])
def test_occupancy_weights_domain(p):
    with pytest.raises(DomainError):
        occupancy_weights(p)


def test_weights_sum_to_one(rng):
    for p in rng.uniform(0, 1, 10_000):
        w = occupancy_weights(p)
        assert abs(w.sum() - 1) < 1e-12 and np.all(w >= 0)


def test_satellite_weight_monotone():
    ps = np.linspace(0, 1, 201)
    sat = [1 - occupancy_weights(p)[0] for p in ps]
    assert np.all(np.diff(sat) > 0)


@pytest.mark.parametrize("shape", ["lorentzian", "gaussian"])
def test_profiles_have_unit_area(shape):
    ls = LineshapeParams(shape, 2.0)
    x = np.linspace(-5, 5, 400_001)  # GHz, +-2500 FWHM
    assert np.trapezoid(profile(x, ls), x) == pytest.approx(1.0, abs=1e-3)


def test_lorentzian_peak_height(grid):
    f0 = 0.5 * (grid.f_min + grid.f_max)
    spec = broaden([TransitionLine(f0, 1.0, "+1", 0)], LORENTZ, grid)
    assert spec.intensities.max() == pytest.approx(2 / (np.pi * LORENTZ.fwhm_ghz), rel=1e-9)


def test_empty_line_list(grid):
    assert not np.any(broaden([], LORENTZ, grid).intensities)


def test_coincident_lines_add(grid):
    f0 = 16.1
    one = broaden([TransitionLine(f0, 1.0, "+1", 0)], LORENTZ, grid)
    two = broaden([TransitionLine(f0, 1.0, "+1", 0)] * 2, LORENTZ, grid)
    np.testing.assert_array_equal(two.intensities, 2 * one.intensities)


def test_coarse_grid_error_and_warning():
    coarse = GridSpec(16.0, 16.2, 101)  # 2 MHz step, 4 points per FWHM
    with pytest.raises(ResolutionError):
        broaden([], LORENTZ, coarse)
    with pytest.warns(ResolutionWarning):
        broaden([], LORENTZ, coarse, on_coarse="warn")


def test_spectrum_grid_validation():
    with pytest.raises(DomainError):
        SpectrumGrid([1.0, 1.0], [0.0, 0.0])
    with pytest.raises(DomainError):
        SpectrumGrid([1.0, 2.0], [0.0])


def test_p0_equals_bare_line(nv, config, grid):
    bare = broaden([TransitionLine(nv.D + nv.gamma_e * nv.B, 1.0, "+1", 0)], LORENTZ, grid)
    spec = synthesize_odmr(0.0, nv, config.site_tensors, LORENTZ, grid)
    np.testing.assert_allclose(spec.intensities, bare.intensities, rtol=1e-12)


@pytest.mark.parametrize("p", [0.011, 0.1, 0.25, 0.5, 1.0])
def test_total_area(nv, config, grid, p):
    spec = synthesize_odmr(p, nv, config.site_tensors, LORENTZ, grid)
    assert spec.area() == pytest.approx(occupancy_weights(p).sum(), rel=0.01)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(0.0, 1.0))
def test_linear_in_pattern_spectra(p):
    nv = NvParameters()
    secular_sites = (HyperfineTensor.secular(130.0),) * 3
    grid = default_grid(nv, "+1", 0.8, 1601)
    patterns = pattern_spectra(nv, secular_sites, LORENTZ, grid)
    spec = synthesize_odmr(p, nv, secular_sites, LORENTZ, grid)
    combo = sum(w * s.intensities for w, s in zip(occupancy_weights(p), patterns))
    np.testing.assert_allclose(spec.intensities, combo, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
def test_symmetric_pattern_gives_mirror_spectrum(nv, secular_sites, grid, p):
    spec = synthesize_odmr(p, nv, secular_sites, LORENTZ, grid)
    y = spec.intensities
    np.testing.assert_allclose(y, y[::-1], rtol=1e-9, atol=1e-9 * y.max())


def test_quartet_heights(nv, secular_sites, grid):
    spec = synthesize_odmr(1.0, nv, secular_sites, LORENTZ, grid)
    idx, _ = find_peaks(spec.intensities, prominence=0.05 * spec.intensities.max())
    heights = spec.intensities[idx]
    assert idx.size == 4
    np.testing.assert_allclose(heights / heights[0], [1, 3, 3, 1], rtol=0.02)


def test_metadata_records_weights(nv, config, grid):
    spec = synthesize_odmr(0.5, nv, config.site_tensors, LORENTZ, grid)
    assert spec.metadata["weights"] == [0.125, 0.375, 0.375, 0.125]
