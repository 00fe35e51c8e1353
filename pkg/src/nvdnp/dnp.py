"""DNP spectra, polarization buildup and absolute-polarization conversion."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .ensemble import SpectrumGrid
from .errors import DomainError, FitError
from .fitting import least_squares_fit


class PolarizationConvention(str, enum.Enum):
    TANH_HALF = "tanh_half"
    HIGH_TEMPERATURE_NO_HALF = "high_temperature_no_half"


@dataclass
class DnpSpectrum:
    mw_frequencies: np.ndarray  # GHz
    signal: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mw_frequencies = np.asarray(self.mw_frequencies, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.mw_frequencies.shape != self.signal.shape:
            raise DomainError("frequency and signal arrays differ in length")
        if np.any(np.diff(self.mw_frequencies) <= 0):
            raise DomainError("frequencies must be ascending")

    def normalized(self):
        peak = np.max(np.abs(self.signal)) if self.signal.size else 0.0
        sig = self.signal / peak if peak > 0 else self.signal.copy()
        return DnpSpectrum(self.mw_frequencies.copy(), sig, dict(self.metadata, normalized=True))

    def at(self, f_ghz):
        """Linear interpolation; zero outside the sampled range."""
        return np.interp(f_ghz, self.mw_frequencies, self.signal, left=0.0, right=0.0)


@dataclass(frozen=True)
class SampleParams:
    label: str
    p: float
    T_DNP: float
    T1n: float
    enhancement: float
    B: float = 0.472
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"{self.label}: enrichment {self.p} outside [0, 1]")
        if not (self.T_DNP > 0 and self.T1n > 0):
            raise DomainError(f"{self.label}: T_DNP and T1n must be positive")
        if not np.isfinite(self.enhancement):
            raise DomainError(f"{self.label}: enhancement must be finite")


@dataclass
class BuildupCurve:
    times: np.ndarray
    polarization: np.ndarray
    sigma: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.polarization = np.asarray(self.polarization, dtype=float)
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)
        if self.times.shape != self.polarization.shape:
            raise DomainError("times and polarization differ in length")
        if np.any(self.times < 0) or np.any(np.diff(self.times) < 0):
            raise DomainError("times must be non-negative and ascending")


@dataclass
class BuildupFit:
    T_DNP: float
    T_DNP_ci: float
    P_max: float
    P_max_ci: float
    baseline: float = 0.0
    baseline_ci: float = 0.0
    residual_norm: float = 0.0
    dof: int = 0
    mode: str = "fixed"

    def as_dict(self):
        return dict(self.__dict__)


# --- spectra -----------------------------------------------------------------

def solid_effect_kernel(odmr_at, f, nu_n_ghz):
    return odmr_at(f - nu_n_ghz) - odmr_at(f + nu_n_ghz)


def dnp_spectrum(odmr: SpectrumGrid, nu_n, scale=1.0, kernel=solid_effect_kernel, edge_tol=1e-3):
    """Signed DNP spectrum from an ODMR lineshape; ``nu_n`` in MHz.

    With the default kernel S(f) = scale * [L(f - nu_n) - L(f + nu_n)].
    The ODMR intensity must be negligible (below ``edge_tol`` of its peak)
    within ``nu_n`` of either grid end.
    """
    if nu_n < 0:
        raise DomainError(f"nu_n must be non-negative, got {nu_n}")
    f = odmr.frequencies
    L = odmr.intensities
    shift = nu_n * 1e-3
    if shift >= (f[-1] - f[0]) / 2:
        raise DomainError("ODMR grid narrower than twice the nuclear Larmor frequency")
    peak = np.max(np.abs(L))
    if peak > 0 and shift > 0:
        near_edge = (f < f[0] + shift) | (f > f[-1] - shift)
        if np.max(np.abs(L[near_edge])) > edge_tol * peak:
            raise DomainError(
                "ODMR support reaches within nu_n of the grid edge; widen the grid"
            )

    def odmr_at(x):
        return np.interp(x, f, L, left=0.0, right=0.0)

    signal = scale * kernel(odmr_at, f, shift)
    meta = dict(odmr.metadata)
    meta.update({"nu_n_MHz": float(nu_n), "scale": float(scale)})
    return DnpSpectrum(f.copy(), signal, meta)


# --- polarization ------------------------------------------------------------

def thermal_polarization(B, temperature, gamma_n=10.708, convention="high_temperature_no_half"):
    """Equilibrium 13C polarization; ``gamma_n`` in MHz/T."""
    if B < 0 or not temperature > 0:
        raise DomainError("need B >= 0 and temperature > 0")
    x = constants.h * gamma_n * 1e6 * B / (constants.k * temperature)
    convention = PolarizationConvention(convention)
    if convention is PolarizationConvention.TANH_HALF:
        return float(np.tanh(x / 2))
    return float(x)


def enhanced_polarization(enhancement, p_thermal):
    if not 0 <= p_thermal < 1:
        raise DomainError(f"thermal polarization {p_thermal} outside [0, 1)")
    return enhancement * p_thermal


def relax_toward(p0, p_inf, time_constant, dt):
    """Exact single-exponential step from p0 toward p_inf after ``dt``."""
    decay = np.exp(-np.asarray(dt, dtype=float) / time_constant)
    return p_inf + (p0 - p_inf) * decay


def buildup_model(t, T_DNP, P_max, baseline=0.0):
    return baseline + P_max * -np.expm1(-t / T_DNP)


def simulate_buildup(T_DNP, P_max, times, noise_sigma=0.0, seed=None) -> BuildupCurve:
    if not T_DNP > 0:
        raise DomainError("T_DNP must be positive")
    times = np.asarray(times, dtype=float)
    pol = relax_toward(0.0, P_max, T_DNP, times)
    sigma = None
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        pol = pol + rng.normal(0.0, noise_sigma, size=times.shape)
        sigma = np.full(times.shape, float(noise_sigma))
    return BuildupCurve(times, pol, sigma, {"T_DNP_s": T_DNP, "P_max": P_max})


def fit_buildup(curve: BuildupCurve, baseline="fixed", confidence=0.95) -> BuildupFit:
    """Saturation-recovery fit P(t) = [b +] P_max (1 - exp(-t/T_DNP))."""
    t, y = curve.times, curve.polarization
    if np.unique(t).size < 4:
        raise DomainError("buildup fit needs at least 4 distinct time points")
    if baseline not in ("fixed", "free"):
        raise DomainError(f"baseline mode must be 'fixed' or 'free', got {baseline!r}")
    if np.ptp(y) == 0:
        raise FitError("buildup curve is constant; no time constant to fit",
                       {"residual_norm": 0.0})

    # initial guess: asymptote from the late points, T from the 63% crossing
    y0 = y[0] if baseline == "free" else 0.0
    tail = y[-max(2, y.size // 10):].mean()
    amp = tail - y0
    if amp == 0:
        amp = y[-1] - y0 or np.ptp(y)
    frac = (y - y0) / amp
    crossing = np.flatnonzero(frac >= 1 - np.exp(-1))
    T0 = t[crossing[0]] if crossing.size and t[crossing[0]] > 0 else (t[-1] - t[0]) / 3

    if baseline == "fixed":
        def model(t_, T, P):
            return P * -np.expm1(-t_ / T)

        def jac(t_, T, P):
            e = np.exp(-t_ / T)
            return np.column_stack([-P * e * t_ / T**2, 1 - e])

        x0 = [T0, amp]
    else:
        def model(t_, T, P, b):
            return b + P * -np.expm1(-t_ / T)

        def jac(t_, T, P, b):
            e = np.exp(-t_ / T)
            return np.column_stack([-P * e * t_ / T**2, 1 - e, np.ones_like(t_)])

        x0 = [T0, amp, y0]

    res = least_squares_fit(model, jac, x0, t, y, confidence=confidence)
    T, P = res.params[0], res.params[1]
    if not T > 0:
        raise FitError(f"fitted T_DNP = {T} is not positive", {"residual_norm": res.residual_norm})
    out = BuildupFit(
        T_DNP=float(T), T_DNP_ci=float(res.ci_halfwidth[0]),
        P_max=float(P), P_max_ci=float(res.ci_halfwidth[1]),
        residual_norm=res.residual_norm, dof=res.dof, mode=baseline,
    )
    if baseline == "free":
        out.baseline = float(res.params[2])
        out.baseline_ci = float(res.ci_halfwidth[2])
    return out


def recovery_correction_factor(t_rec, T1n):
    """Scale for a signal recorded after only ``t_rec`` of T1 recovery."""
    if not (t_rec > 0 and T1n > 0):
        raise DomainError("t_rec and T1n must be positive")
    return float(-1.0 / np.expm1(-t_rec / T1n))


def recovery_time_for_factor(factor, T1n):
    """Inverse of :func:`recovery_correction_factor`."""
    if not factor > 1:
        raise DomainError("correction factor must exceed 1")
    return float(-T1n * np.log1p(-1.0 / factor))
