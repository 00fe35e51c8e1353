"""Run compiled timelines against the buildup/relaxation and FID forward models."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..dnp import DnpSpectrum, SampleParams, dnp_spectrum, relax_toward, thermal_polarization
from ..ensemble import default_grid, synthesize_odmr
from ..errors import ZeroSignalWarning
from ..seeding import derive_seed
from ..signal import FidRecord, fit_scaling_factor, synthesize_fid
from .timeline import Timeline


@dataclass(frozen=True)
class ExecutionPhysics:
    """Rate-equation and detection parameters for one sample.

    ``dnp`` is the normalized DNP spectrum; the buildup asymptote at
    microwave frequency f is ``p_enhanced * dnp.at(f)``.
    """

    dnp: DnpSpectrum
    p_enhanced: float
    p_thermal: float
    relax_to_thermal: bool = True
    fid_t2star: float | None = 5e-4
    noise_sigma: float = 0.0
    signal_scale: float = 1.0


@dataclass
class ExecutionState:
    polarization: float = 0.0
    mw_frequency: float | None = None  # GHz, None when off
    laser: bool = False
    clock: float = 0.0
    transverse: float = 0.0
    transverse_phase: float = 0.0  # deg
    excited: bool = False


@dataclass
class AcquisitionResult:
    index: int
    t_start: float
    fid: FidRecord
    amplitude: float
    mw_frequency: float | None
    phase_deg: float
    metadata: dict = field(default_factory=dict)


def physics_for_sample(sample: SampleParams, config, **overrides) -> ExecutionPhysics:
    """Forward-model physics for a registry sample under ``config``."""
    nv = replace(config.nv, B=sample.B)
    grid = default_grid(nv, "+1", config.grid_span, config.grid_points)
    odmr = synthesize_odmr(sample.p, nv, config.site_tensors, config.lineshape, grid)
    spec = dnp_spectrum(odmr, nv.nuclear_larmor_mhz).normalized()
    p_th = thermal_polarization(sample.B, config.temperature, nv.gamma_n, config.convention)
    kwargs = dict(dnp=spec, p_enhanced=sample.enhancement * p_th, p_thermal=p_th,
                  fid_t2star=config.fid_t2star, noise_sigma=config.fid_noise)
    kwargs.update(overrides)
    return ExecutionPhysics(**kwargs)


class Executor:
    def __init__(self, sample: SampleParams, physics: ExecutionPhysics, seed=0,
                 mw_frequency=None):
        self.sample = sample
        self.physics = physics
        self.seed = seed
        self.mw_override = mw_frequency
        self.state = ExecutionState()
        self.acquisitions = []

    def asymptote(self):
        s = self.state
        if s.laser and s.mw_frequency is not None:
            return self.physics.p_enhanced * float(self.physics.dnp.at(s.mw_frequency)), \
                self.sample.T_DNP
        target = self.physics.p_thermal if self.physics.relax_to_thermal else 0.0
        return target, self.sample.T1n

    def advance(self, t):
        dt = t - self.state.clock
        if dt > 0:
            target, tc = self.asymptote()
            self.state.polarization = float(relax_toward(self.state.polarization, target, tc, dt))
            self.state.clock = t

    def apply(self, event):
        s = self.state
        p = event.payload
        if event.channel == "laser":
            s.laser = p["kind"] == "on"
        elif event.channel == "mw":
            if p["kind"] == "on":
                s.mw_frequency = self.mw_override if self.mw_override is not None \
                    else p["frequency_GHz"]
            else:
                s.mw_frequency = None
        elif event.channel == "rf":
            if p["kind"] == "saturation":
                s.polarization = 0.0
                s.transverse = 0.0
                s.excited = False
            else:
                theta = np.deg2rad(p["angle_deg"])
                s.transverse = s.polarization * np.sin(theta)
                s.transverse_phase = p["phase_deg"]
                s.polarization = s.polarization * np.cos(theta)
                s.excited = True
        elif event.channel == "acq":
            self.acquire(event)

    def acquire(self, event):
        s = self.state
        p = event.payload
        index = len(self.acquisitions)
        if not s.excited:
            warnings.warn(f"acquisition {index} at t={event.t_start:.6g} s has no preceding "
                          "excitation pulse; signal is zero", ZeroSignalWarning, stacklevel=4)
        amp = self.physics.signal_scale * s.transverse if s.excited else 0.0
        fid = synthesize_fid(
            amp, self.physics.fid_t2star, noise_sigma=self.physics.noise_sigma,
            seed=derive_seed(self.seed, "acquire", index), n_points=p["n_points"],
            dwell=p["dwell_s"], phase=np.deg2rad(s.transverse_phase), start_time=0.0,
        )
        self.acquisitions.append(AcquisitionResult(
            index, event.t_start, fid, float(amp), s.mw_frequency, s.transverse_phase,
            {"polarization_after_pulse": s.polarization, "line": p.get("line")},
        ))
        s.transverse = 0.0
        s.excited = False

    def run(self, timeline: Timeline):
        for event in timeline.events:
            self.advance(event.t_start)
            self.apply(event)
        self.advance(timeline.duration)
        return self.acquisitions


def execute_plan(timeline: Timeline, sample: SampleParams, physics: ExecutionPhysics, seed=0,
                 mw_frequency=None):
    """Acquisition results for one run; ``mw_frequency`` overrides every ``mw on``."""
    return Executor(sample, physics, seed, mw_frequency).run(timeline)


def recovered_amplitude(result: AcquisitionResult, physics: ExecutionPhysics):
    """Amplitude of an acquired FID by scaling a unit noiseless template onto it."""
    fid = result.fid
    model = synthesize_fid(1.0, physics.fid_t2star, n_points=fid.samples.size, dwell=fid.dwell,
                           phase=np.deg2rad(result.phase_deg))
    return fit_scaling_factor(fid, model, component="complex").scale


def sweep_mw(timeline: Timeline, sample: SampleParams, physics: ExecutionPhysics, frequencies,
             seed=0, workers=1, acquisition=0) -> DnpSpectrum:
    """Run the plan once per microwave frequency; signal = fitted amplitude of
    the chosen acquisition. Point i uses seed derived from (seed, i)."""
    freqs = np.asarray(frequencies, dtype=float)

    def point(i):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroSignalWarning)
            acqs = execute_plan(timeline, sample, physics, derive_seed(seed, "sweep", i),
                                mw_frequency=float(freqs[i]))
        if not acqs:
            return 0.0
        return recovered_amplitude(acqs[acquisition], physics)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(point, range(freqs.size)))
    else:
        values = [point(i) for i in range(freqs.size)]
    return DnpSpectrum(freqs, np.array(values), {"sample": sample.label, "source": "plan sweep"})
