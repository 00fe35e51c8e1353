"""Time-domain NMR synthesis and analysis: FIDs, solid-echo trains, T2/T1 fits."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyWarning, DomainError, FitError
from .fitting import least_squares_fit, t_quantile

DEFAULT_PHASE_CYCLE = (180.0, 0.0, 0.0, 180.0)


@dataclass
class FidRecord:
    samples: np.ndarray
    dwell: float
    start_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if not self.dwell > 0:
            raise DomainError("dwell must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise DomainError("FID contains non-finite samples")

    @property
    def times(self):
        return self.start_time + self.dwell * np.arange(self.samples.size)


@dataclass
class EchoTrain:
    echoes: np.ndarray  # (n_echoes, points_per_echo)
    tau: float
    dwell: float
    phase_cycle: tuple = DEFAULT_PHASE_CYCLE
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.echoes = np.atleast_2d(np.asarray(self.echoes, dtype=complex))
        self.phase_cycle = tuple(float(p) for p in self.phase_cycle)
        if not (self.tau > 0 and self.dwell > 0):
            raise DomainError("tau and dwell must be positive")
        if not self.phase_cycle:
            raise DomainError("phase cycle must not be empty")
        if self.echoes.shape[0] % len(self.phase_cycle):
            raise DomainError(
                f"{self.echoes.shape[0]} echoes is not a whole number of "
                f"{len(self.phase_cycle)}-step phase cycles"
            )

    @property
    def n_echoes(self):
        return self.echoes.shape[0]

    @property
    def points_per_echo(self):
        return self.echoes.shape[1]

    def echo_times(self):
        return self.tau * np.arange(self.n_echoes)

    def phases(self):
        cyc = np.deg2rad(self.phase_cycle)
        return cyc[np.arange(self.n_echoes) % len(cyc)]


@dataclass(frozen=True)
class BiexpParams:
    A1: float
    T2_1: float
    A2: float
    T2_2: float

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        out = self.A1 * np.exp(-t / self.T2_1)
        if self.A2:
            out = out + self.A2 * np.exp(-t / self.T2_2)
        return out


@dataclass
class BiexpFit:
    A1: float
    T2_1: float
    A2: float
    T2_2: float
    A1_ci: float
    T2_1_ci: float
    A2_ci: float
    T2_2_ci: float
    residual_norm: float = 0.0
    dof: int = 0
    warnings: list = field(default_factory=list)

    @property
    def params(self):
        return BiexpParams(self.A1, self.T2_1, self.A2, self.T2_2)

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class ScaleFit:
    scale: float
    stderr: float
    ci_halfwidth: float
    dof: int


@dataclass
class SmallFlipT1Fit:
    T1: float
    T1_ci_low: float
    T1_ci_high: float
    T1_observed: float
    T1_observed_ci: float
    amplitude: float
    correction_rate: float  # 1/s

    @property
    def T1_ci(self):
        return 0.5 * (self.T1_ci_high - self.T1_ci_low)

    def as_dict(self):
        d = dict(self.__dict__)
        d["T1_ci"] = self.T1_ci
        return d


def complex_noise(rng, sigma, shape):
    """i.i.d. complex Gaussian, standard deviation ``sigma`` per quadrature."""
    return rng.normal(0.0, sigma, shape) + 1j * rng.normal(0.0, sigma, shape)


# --- synthesis ---------------------------------------------------------------

def synthesize_fid(amplitude, decay=None, frequency_offset=0.0, noise_sigma=0.0, seed=None,
                   n_points=256, dwell=0.5e-6, phase=0.0, start_time=0.0) -> FidRecord:
    """Single-component FID.

    ``decay`` is a T2* in seconds, a callable ``t -> envelope`` or None for
    no decay. ``frequency_offset`` is in Hz, ``phase`` in rad.
    """
    if n_points < 1:
        raise DomainError("n_points must be at least 1")
    t = start_time + dwell * np.arange(n_points)
    if decay is None:
        env = np.ones(n_points)
    elif callable(decay):
        env = np.asarray(decay(t), dtype=float)
    else:
        env = np.exp(-t / float(decay))
    s = amplitude * env * np.exp(1j * (2 * np.pi * frequency_offset * t + phase))
    if noise_sigma > 0:
        s = s + complex_noise(np.random.default_rng(seed), noise_sigma, n_points)
    return FidRecord(s, dwell, start_time)


def synthesize_echo_train(params: BiexpParams, tau=40e-6, n_echoes=500, points_per_echo=32,
                          dwell=0.5e-6, noise_sigma=0.0, seed=None,
                          phase_cycle=DEFAULT_PHASE_CYCLE, echo_t2star=None) -> EchoTrain:
    """Solid-echo train whose echo-k amplitude follows the biexponential envelope.

    Echo k carries phase ``phase_cycle[k mod len]``. With ``echo_t2star`` set,
    samples inside each echo additionally decay with that constant.
    """
    if min(tau, dwell) <= 0 or n_echoes < 1 or points_per_echo < 1:
        raise DomainError("echo train parameters must be positive")
    if params.T2_1 <= 0 or (params.A2 and params.T2_2 <= 0):
        raise DomainError("T2 values must be positive")
    k_t = tau * np.arange(n_echoes)
    env = params.envelope(k_t)
    intra = np.ones(points_per_echo)
    if echo_t2star is not None:
        intra = np.exp(-dwell * np.arange(points_per_echo) / echo_t2star)
    cyc = np.deg2rad(np.asarray(phase_cycle, dtype=float))
    phases = np.exp(1j * cyc[np.arange(n_echoes) % cyc.size])
    echoes = (env * phases)[:, None] * intra[None, :]
    if noise_sigma > 0:
        echoes = echoes + complex_noise(np.random.default_rng(seed), noise_sigma, echoes.shape)
    return EchoTrain(echoes, tau, dwell, tuple(phase_cycle))


def compensate_phase_cycle(train: EchoTrain) -> EchoTrain:
    echoes = train.echoes * np.exp(-1j * train.phases())[:, None]
    return EchoTrain(echoes, train.tau, train.dwell, (0.0,) * len(train.phase_cycle),
                     dict(train.metadata))


def echo_envelope(train: EchoTrain):
    """(times, complex amplitude) per echo: mean of the first quarter of samples
    after removing the phase cycle."""
    comp = compensate_phase_cycle(train)
    n = max(1, train.points_per_echo // 4)
    return train.echo_times(), comp.echoes[:, :n].mean(axis=1)


# --- processing --------------------------------------------------------------

def moving_average(series, window, sample_period=1.0):
    """Centered box average over ``window`` (same units as ``sample_period``).

    Near the ends the box is truncated to the available samples, so the
    output has the input's length and constants pass through unchanged.
    """
    x = np.asarray(series)
    if window < sample_period * (1 - 1e-9):
        raise DomainError("moving-average window is shorter than one sample")
    w = max(1, int(round(window / sample_period)))
    if w == 1:
        return x.copy()
    n = x.size
    csum = np.concatenate([[0], np.cumsum(x)])
    left = w // 2
    right = w - left  # window covers [i - left, i + right)
    idx = np.arange(n)
    lo = np.clip(idx - left, 0, n)
    hi = np.clip(idx + right, 0, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


# --- fits --------------------------------------------------------------------

def _log_linear(t, y):
    """Slope/intercept of log(y) for the positive entries; None if unusable."""
    ok = y > 0
    if ok.sum() < 2 or np.ptp(t[ok]) == 0:
        return None
    slope, intercept = np.polyfit(t[ok], np.log(y[ok]), 1)
    return slope, intercept


def _monoexp_fit(t, y, confidence):
    seed = _log_linear(t, y)
    if seed is None or seed[0] >= 0:
        T0 = (t[-1] - t[0]) / 2 or 1.0
        A0 = y[0]
    else:
        T0, A0 = -1.0 / seed[0], np.exp(seed[1])

    def model(t_, A, T):
        return A * np.exp(-t_ / T)

    def jac(t_, A, T):
        e = np.exp(-t_ / T)
        return np.column_stack([e, A * e * t_ / T**2])

    return least_squares_fit(model, jac, [A0, T0], t, y, confidence=confidence)


def _biexp_seed(t, y):
    """Two-segment log-linear seeding: slow tail first, then the fast residual."""
    n = t.size
    tail = slice(n // 2, n)
    slow = _log_linear(t[tail], y[tail])
    if slow is None or slow[0] >= 0:
        return None
    T2s, A2 = -1.0 / slow[0], np.exp(slow[1])
    head = slice(0, max(3, n // 4))
    fast = _log_linear(t[head], y[head] - A2 * np.exp(-t[head] / T2s))
    if fast is None or fast[0] >= 0:
        T1s, A1 = T2s / 10, max(y[0] - A2, 1e-3 * abs(y[0]))
    else:
        T1s, A1 = -1.0 / fast[0], np.exp(fast[1])
    return [A1, T1s, A2, T2s]


def _biexp_model(t, A1, T1, A2, T2):
    return A1 * np.exp(-t / T1) + A2 * np.exp(-t / T2)


def _biexp_jac(t, A1, T1, A2, T2):
    e1, e2 = np.exp(-t / T1), np.exp(-t / T2)
    return np.column_stack([e1, A1 * e1 * t / T1**2, e2, A2 * e2 * t / T2**2])


def fit_biexponential(envelope, times, confidence=0.95, degeneracy_ratio=1.5) -> BiexpFit:
    """A1 exp(-t/T2_1) + A2 exp(-t/T2_2) with T2_1 <= T2_2.

    If the two components cannot be separated (rank-deficient fit, a
    vanishing or negative amplitude, or T2_2/T2_1 below ``degeneracy_ratio``)
    the result collapses to a single exponential and carries a warning.
    """
    y = np.real(np.asarray(envelope))
    t = np.asarray(times, dtype=float)
    if y.size < 6 or t.size != y.size:
        raise DomainError("biexponential fit needs at least 6 matching points")
    if np.any(t < 0) or np.ptp(t) == 0:
        raise DomainError("times must be non-negative and not all equal")

    reason = None
    res = None
    x0 = _biexp_seed(t, y)
    if x0 is None:
        reason = "envelope does not show two decaying components"
    else:
        try:
            res = least_squares_fit(_biexp_model, _biexp_jac, x0, t, y, confidence=confidence)
        except FitError as exc:
            reason = f"biexponential fit failed ({exc})"
    if res is not None:
        A1, T1, A2, T2 = res.params
        ci = res.ci_halfwidth
        if T1 > T2:
            A1, T1, A2, T2 = A2, T2, A1, T1
            ci = ci[[2, 3, 0, 1]]
        if min(T1, T2) <= 0:
            reason = "non-positive time constant"
        elif min(A1, A2) <= 0 or min(abs(A1), abs(A2)) < 1e-6 * (abs(A1) + abs(A2)):
            reason = "one component has vanishing or negative amplitude"
        elif T2 / T1 < degeneracy_ratio:
            reason = f"time constants within a factor {degeneracy_ratio}"
        else:
            return BiexpFit(A1, T1, A2, T2, *ci, residual_norm=res.residual_norm, dof=res.dof)

    mono = _monoexp_fit(t, y, confidence)
    A, T = mono.params
    if not T > 0:
        raise FitError("single-exponential fallback gave a non-positive time constant",
                       {"residual_norm": mono.residual_norm})
    msg = f"degenerate biexponential: {reason}; reporting a single exponential"
    warnings.warn(msg, DegeneracyWarning, stacklevel=2)
    dA, dT = mono.ci_halfwidth
    return BiexpFit(A, T, 0.0, T, dA, dT, 0.0, dT, residual_norm=mono.residual_norm,
                    dof=mono.dof, warnings=[msg])


def fit_scaling_factor(target: FidRecord, model: FidRecord, component="real",
                       confidence=0.95) -> ScaleFit:
    """Least-squares scalar c minimizing |target - c * model|^2.

    ``component`` selects the real channel (default) or both quadratures.
    """
    a = np.asarray(getattr(target, "samples", target))
    m = np.asarray(getattr(model, "samples", model))
    if a.shape != m.shape:
        raise DomainError("target and model are on different grids")
    if component == "real":
        a, m = a.real.astype(float), m.real.astype(float)
    elif component == "complex":
        a = np.concatenate([a.real, a.imag]).astype(float)
        m = np.concatenate([m.real, m.imag]).astype(float)
    else:
        raise DomainError(f"unknown component {component!r}")
    mm = float(m @ m)
    if mm == 0:
        raise DomainError("model has zero norm")
    c = float(a @ m) / mm
    dof = a.size - 1
    r = a - c * m
    s2 = float(r @ r) / max(dof, 1)
    se = np.sqrt(s2 / mm)
    return ScaleFit(c, float(se), float(t_quantile(dof, confidence) * se), dof)


def small_flip_series(amplitude, theta, tau, T1, n_pulses, noise_sigma=0.0, seed=None):
    """Signals after each of ``n_pulses`` flips of angle ``theta`` spaced by ``tau``."""
    k = np.arange(n_pulses)
    s = amplitude * np.sin(theta) * np.cos(theta) ** k * np.exp(-k * tau / T1)
    if noise_sigma > 0:
        s = s + np.random.default_rng(seed).normal(0.0, noise_sigma, n_pulses)
    return s


def fit_t1_small_flip(series, theta, tau, confidence=0.95) -> SmallFlipT1Fit:
    """Fit the observed decay of a small-flip train and remove the flip loss.

    1/T1 = 1/T1_observed - (-ln cos theta) / tau.
    """
    y = np.real(np.asarray(series, dtype=complex))
    if not 0 < theta < np.pi / 2:
        raise DomainError("flip angle must lie in (0, pi/2)")
    if not tau > 0:
        raise DomainError("tau must be positive")
    if y.size < 4:
        raise DomainError("small-flip T1 fit needs at least 4 points")
    if np.ptp(y) == 0:
        raise FitError("constant series; no decay to fit")
    t = tau * np.arange(y.size)
    res = _monoexp_fit(t, y, confidence)
    A, T_obs = res.params
    dT_obs = res.ci_halfwidth[1]
    if not T_obs > 0:
        raise FitError(f"observed decay constant {T_obs} is not positive")
    loss = -np.log(np.cos(theta)) / tau

    def corrected(T):
        rate = 1.0 / T - loss
        return np.inf if rate <= 0 else 1.0 / rate

    T1 = corrected(T_obs)
    if not np.isfinite(T1):
        raise FitError("flip-angle loss exceeds the observed decay rate",
                       {"T1_observed": float(T_obs), "loss_rate": float(loss)})
    lo = corrected(max(T_obs - dT_obs, np.finfo(float).tiny))
    hi = corrected(T_obs + dT_obs)
    return SmallFlipT1Fit(float(T1), float(lo), float(hi), float(T_obs), float(dT_obs),
                          float(A), float(loss))
