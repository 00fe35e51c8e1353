"""Bootstrap estimation of weak thermal-signal amplitudes and the resulting enhancement."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DomainError, UnboundedEnhancementError
from .signal import fit_scaling_factor

CHUNK = 256


@dataclass
class DatasetStore:
    """Stack of equally shaped data blocks, each already averaged in hardware."""

    blocks: np.ndarray
    averages_per_block: int = 4
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        blocks = [np.asarray(b) for b in self.blocks]
        if blocks and any(b.shape != blocks[0].shape for b in blocks):
            raise DomainError("blocks in a dataset store must share one shape")
        self.blocks = np.array(blocks) if blocks else np.empty((0, 0))

    def __len__(self):
        return self.blocks.shape[0]

    def average(self):
        return self.blocks.mean(axis=0)


@dataclass
class BootstrapResult:
    mean: float
    sigma: float
    n_resamples: int
    ci_low: float
    ci_high: float
    ci_method: str = "normal"
    distribution: np.ndarray | None = None
    warnings: list = field(default_factory=list)

    def as_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "distribution"}
        return d


@dataclass
class EnhancementResult:
    enhancement: float
    lower: float
    upper: float
    mode: str  # "symmetric" or "asymmetric"

    @property
    def halfwidth(self):
        return 0.5 * (self.upper - self.lower)

    def as_dict(self):
        return dict(self.__dict__)


def scale_to_model(model, component="real"):
    """Fit procedure: least-squares scale of an averaged block onto ``model``."""
    model = np.asarray(getattr(model, "samples", model))

    def fit(block):
        return fit_scaling_factor(block, model, component=component).scale

    return fit


def resample_counts(n_blocks, indices, seed):
    """Multiplicity of each block for every resample index in ``indices``."""
    counts = np.empty((len(indices), n_blocks))
    for row, i in enumerate(indices):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(int(i),)))
        draw = rng.integers(0, n_blocks, n_blocks)
        counts[row] = np.bincount(draw, minlength=n_blocks)
    return counts


def bootstrap_amplitude(store: DatasetStore, fit, n_resamples=10_000, seed=0, workers=1,
                        confidence=0.95, ci_method="normal", keep_distribution=False):
    """Resample blocks with replacement, average, and fit an amplitude each time.

    Resample ``i`` draws from its own generator seeded by (seed, i) and work
    is split into fixed-size chunks, so the result does not depend on
    ``workers``.
    """
    n = len(store)
    if n == 0:
        raise DomainError("dataset store is empty")
    if n < 2:
        raise DomainError("bootstrap needs at least 2 blocks")
    if n_resamples < 1:
        raise DomainError("n_resamples must be at least 1")
    if ci_method not in ("normal", "percentile"):
        raise DomainError(f"unknown ci_method {ci_method!r}")
    blocks = store.blocks.reshape(n, -1)
    shape = store.blocks.shape[1:]

    identical = bool(np.all(blocks == blocks[0]))

    def run(chunk):
        if identical:  # every resample averages to the same block exactly
            return np.full(len(chunk), float(fit(blocks[0].reshape(shape))))
        counts = resample_counts(n, chunk, seed)
        means = counts @ blocks / n
        return np.array([fit(row.reshape(shape)) for row in means], dtype=float)

    chunks = [range(a, min(a + CHUNK, n_resamples)) for a in range(0, n_resamples, CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    dist = np.concatenate(parts)

    if np.all(dist == dist[0]):
        mean, sigma = float(dist[0]), 0.0
    else:
        mean = float(np.mean(dist))
        sigma = float(np.std(dist, ddof=1))
    notes = []
    if sigma == 0.0:
        notes.append("bootstrap distribution is degenerate (sigma = 0); interval has zero width")
        warnings.warn(notes[-1], stacklevel=2)
    if ci_method == "normal":
        z = float(stats.norm.ppf(0.5 + confidence / 2))
        lo, hi = mean - z * sigma, mean + z * sigma
    else:
        tail = 100 * (1 - confidence) / 2
        lo, hi = (float(v) for v in np.percentile(dist, [tail, 100 - tail]))
        lo, hi = min(lo, mean), max(hi, mean)
    return BootstrapResult(mean, sigma, n_resamples, float(lo), float(hi), ci_method,
                           dist if keep_distribution else None, notes)


def enhancement_with_ci(hp_amplitude, thermal: BootstrapResult, correction=1.0, mode="auto",
                        max_rel_halfwidth=0.25) -> EnhancementResult:
    """Enhancement hp / (thermal * correction) with 95% bounds.

    A well-determined thermal amplitude (interval clear of zero and half-width
    at most ``max_rel_halfwidth`` of the mean) gives symmetric bounds by
    linear propagation. Otherwise the thermal bounds are mapped through the
    reciprocal, giving asymmetric bounds. If the thermal interval reaches zero
    this raises in every mode except ``"asymmetric"``, which reports an
    infinite upper bound.
    """
    if mode not in ("auto", "symmetric", "asymmetric"):
        raise DomainError(f"unknown mode {mode!r}")
    if thermal.mean == 0 or correction <= 0:
        raise DomainError("thermal amplitude and correction must be non-zero/positive")
    eps = hp_amplitude / (thermal.mean * correction)
    halfwidth = 0.5 * (thermal.ci_high - thermal.ci_low)
    clear = thermal.ci_low > 0 or thermal.ci_high < 0
    requested = mode
    if mode == "auto":
        mode = "symmetric" if clear and halfwidth <= max_rel_halfwidth * abs(thermal.mean) \
            else "asymmetric"

    if not clear:
        if requested == "asymmetric" and thermal.mean > 0 and thermal.ci_high > 0:
            lo = hp_amplitude / (thermal.ci_high * correction)
            return EnhancementResult(float(eps), float(lo), float("inf"), "asymmetric")
        raise UnboundedEnhancementError(
            f"thermal interval [{thermal.ci_low:.4g}, {thermal.ci_high:.4g}] contains zero"
        )

    if mode == "symmetric":
        h = abs(eps) * halfwidth / abs(thermal.mean)
        return EnhancementResult(float(eps), float(eps - h), float(eps + h), "symmetric")
    a = hp_amplitude / (thermal.ci_high * correction)
    b = hp_amplitude / (thermal.ci_low * correction)
    return EnhancementResult(float(eps), float(min(a, b)), float(max(a, b)), "asymmetric")
