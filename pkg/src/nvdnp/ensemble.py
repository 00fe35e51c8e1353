"""Enrichment-weighted ODMR spectra from first-shell occupancy statistics."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionError, ResolutionWarning
from .spin_model import FirstShellConfig, NvParameters, lines_for_shell

N_SITES = 3


@dataclass(frozen=True)
class LineshapeParams:
    profile: str = "lorentzian"
    fwhm: float = 8.0  # MHz

    def __post_init__(self):
        if self.profile not in ("lorentzian", "gaussian"):
            raise DomainError(f"unknown lineshape profile {self.profile!r}")
        if not self.fwhm > 0:
            raise DomainError(f"fwhm must be positive, got {self.fwhm}")

    @property
    def fwhm_ghz(self):
        return self.fwhm * 1e-3


@dataclass(frozen=True)
class GridSpec:
    """Uniform frequency grid, GHz, endpoints included."""

    f_min: float
    f_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2 or not self.f_max > self.f_min:
            raise DomainError(f"degenerate grid {self}")

    @classmethod
    def centered(cls, center, span, n_points):
        return cls(center - span / 2, center + span / 2, n_points)

    @property
    def step(self):
        return (self.f_max - self.f_min) / (self.n_points - 1)

    def frequencies(self):
        return np.linspace(self.f_min, self.f_max, self.n_points)


@dataclass
class SpectrumGrid:
    frequencies: np.ndarray
    intensities: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.intensities = np.asarray(self.intensities, dtype=float)
        if self.frequencies.shape != self.intensities.shape or self.frequencies.ndim != 1:
            raise DomainError("frequencies and intensities must be 1-D arrays of equal length")
        if not np.all(np.diff(self.frequencies) > 0):
            raise DomainError("frequencies must be strictly ascending")
        if not (np.all(np.isfinite(self.frequencies)) and np.all(np.isfinite(self.intensities))):
            raise DomainError("spectrum contains non-finite values")

    def area(self):
        return float(np.trapezoid(self.intensities, self.frequencies))


def occupancy_weights(p):
    """Binomial probabilities of 0..3 occupied first-shell sites."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"enrichment must lie in [0, 1], got {p}")
    return np.array(
        [math.comb(N_SITES, k) * p**k * (1.0 - p) ** (N_SITES - k) for k in range(N_SITES + 1)]
    )


def profile(x, lineshape: LineshapeParams):
    """Unit-area lineshape evaluated at offsets ``x`` (GHz)."""
    g = lineshape.fwhm_ghz
    if lineshape.profile == "lorentzian":
        half = g / 2
        return (half / np.pi) / (x * x + half * half)
    sigma = g / (2 * np.sqrt(2 * np.log(2)))
    return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


def check_resolution(grid: GridSpec, lineshape: LineshapeParams, on_coarse="error"):
    per_fwhm = lineshape.fwhm_ghz / grid.step
    if per_fwhm < 5:
        msg = f"grid step {grid.step * 1e3:.3g} MHz gives {per_fwhm:.2f} points per fwhm (< 5)"
        if on_coarse == "error":
            raise ResolutionError(msg)
        if on_coarse == "warn":
            warnings.warn(msg, ResolutionWarning, stacklevel=3)


def broaden(lines, lineshape: LineshapeParams, grid: GridSpec, on_coarse="error") -> SpectrumGrid:
    """Sum of unit-area profiles scaled by line amplitude."""
    check_resolution(grid, lineshape, on_coarse)
    f = grid.frequencies()
    out = np.zeros_like(f)
    for line in lines:
        out += line.amplitude * profile(f - line.frequency, lineshape)
    return SpectrumGrid(f, out, {"profile": lineshape.profile, "fwhm_MHz": lineshape.fwhm})


def pattern_lines(nv: NvParameters, site_tensors, k, branch="+1", **kwargs):
    """Lines of the k-occupied pattern, averaged over which sites are occupied.

    Amplitudes are divided by 2**k and by the number of site combinations,
    so each pattern carries unit total strength per branch.
    """
    site_tensors = tuple(site_tensors)
    if len(site_tensors) != N_SITES:
        raise DomainError(f"need {N_SITES} site tensors, got {len(site_tensors)}")
    combos = list(itertools.combinations(range(N_SITES), k))
    norm = 1.0 / (2**k * len(combos))
    out = []
    for combo in combos:
        shell = FirstShellConfig(tuple(site_tensors[i] for i in combo))
        for line in lines_for_shell(nv, shell, branches=(branch,), **kwargs):
            out.append(type(line)(line.frequency, line.amplitude * norm, line.branch, k))
    return out


def pattern_spectra(nv, site_tensors, lineshape, grid, branch="+1", on_coarse="error"):
    """The four single-occupancy spectra, k = 0..3, each of unit strength."""
    return [
        broaden(pattern_lines(nv, site_tensors, k, branch), lineshape, grid, on_coarse)
        for k in range(N_SITES + 1)
    ]


def synthesize_odmr(
    p,
    nv: NvParameters,
    site_tensors,
    lineshape: LineshapeParams,
    grid: GridSpec,
    branch="+1",
    on_coarse="error",
) -> SpectrumGrid:
    """Composite ODMR spectrum at enrichment ``p``."""
    weights = occupancy_weights(p)
    patterns = pattern_spectra(nv, site_tensors, lineshape, grid, branch, on_coarse)
    total = np.zeros(grid.n_points)
    for w, spec in zip(weights, patterns):
        total = total + w * spec.intensities
    meta = {
        "p": float(p),
        "weights": [float(w) for w in weights],
        "branch": branch,
        "profile": lineshape.profile,
        "fwhm_MHz": lineshape.fwhm,
        "B_T": nv.B,
    }
    return SpectrumGrid(patterns[0].frequencies, total, meta)


def default_grid(nv: NvParameters, branch="+1", span=0.8, n_points=3201):
    """Grid centered on the bare (k=0) line of ``branch``."""
    (line,) = lines_for_shell(nv, FirstShellConfig(()), branches=(branch,))
    return GridSpec.centered(line.frequency, span, n_points)
