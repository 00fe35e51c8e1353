"""Radial spin-diffusion model of polarization transport away from an NV.

Finite-volume discretization of a spherical shell r_inner <= r <= r_outer
with zero-flux walls at both ends. Polarization is injected into the cells
inside ``source_width`` of the inner wall at rate ``source_rate`` toward
``source_polarization``; every cell relaxes to zero with ``T1n``.
Lengths in nm, D_sd in nm^2/s, times in s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .dnp import BuildupCurve
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class RadialGeometry:
    r_inner: float = 1.0
    r_outer: float = 10.0
    source_width: float = 0.5

    def __post_init__(self):
        if not 0 <= self.r_inner < self.r_outer:
            raise DomainError("need 0 <= r_inner < r_outer")
        if not 0 < self.source_width < self.r_outer - self.r_inner:
            raise DomainError("source shell must be thinner than the domain")


@dataclass(frozen=True)
class DiffusionGrid:
    n_cells: int = 90
    dt: float = 0.05
    t_end: float = 200.0
    scheme: str = "implicit"  # "implicit" (Crank-Nicolson) or "explicit"
    record_every: int = 10

    def __post_init__(self):
        if self.n_cells < 3 or not self.dt > 0 or not self.t_end > 0:
            raise DomainError("invalid diffusion grid")
        if self.scheme not in ("implicit", "explicit"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")


class RadialDiffusion:
    """Assembled operator; ``step`` advances the cell polarizations by dt."""

    def __init__(self, D_sd, T1n, geometry: RadialGeometry, grid: DiffusionGrid,
                 source_rate=1.0, source_polarization=1.0):
        if D_sd < 0:
            raise DomainError("D_sd must be non-negative")
        self.D_sd = float(D_sd)
        self.geometry = geometry
        self.grid = grid
        edges = np.linspace(geometry.r_inner, geometry.r_outer, grid.n_cells + 1)
        self.dr = edges[1] - edges[0]
        self.centers = 0.5 * (edges[1:] + edges[:-1])
        self.volumes = (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
        # fraction of each cell's volume inside the source shell
        r_src = geometry.r_inner + geometry.source_width
        inner = np.clip(edges[1:], None, r_src)
        self.source_fraction = np.clip(inner**3 - edges[:-1] ** 3, 0.0, None) / 3.0 / self.volumes
        self.source_mask = self.source_fraction > 0
        self.bulk_weights = np.where(self.source_mask, 0.0, self.volumes)

        if grid.scheme == "explicit" and self.D_sd > 0:
            dim = 3
            limit = self.dr**2 / (2 * dim * self.D_sd)
            if grid.dt > limit:
                raise ConfigError(
                    f"explicit step dt={grid.dt:g} s exceeds stability limit {limit:g} s"
                )

        n = grid.n_cells
        # conductance across each interior face
        faces = edges[1:-1] ** 2 * self.D_sd / self.dr
        lower = np.zeros(n)
        upper = np.zeros(n)
        diag = np.zeros(n)
        upper[:-1] = faces / self.volumes[:-1]
        lower[1:] = faces / self.volumes[1:]
        diag[:-1] -= faces / self.volumes[:-1]
        diag[1:] -= faces / self.volumes[1:]

        relax = 0.0 if T1n is None or np.isinf(T1n) else 1.0 / T1n
        diag -= relax
        src = float(source_rate) * self.source_fraction
        diag -= src
        self.forcing = src * source_polarization
        self._lower, self._diag, self._upper = lower, diag, upper

        if grid.scheme == "implicit":
            h = 0.5 * grid.dt
            ab = np.zeros((3, n))
            ab[0, 1:] = -h * upper[:-1]
            ab[1] = 1.0 - h * diag
            ab[2, :-1] = -h * lower[1:]
            self._banded = ab

    def apply(self, P):
        out = self._diag * P
        out[:-1] += self._upper[:-1] * P[1:]
        out[1:] += self._lower[1:] * P[:-1]
        return out

    def step(self, P):
        dt = self.grid.dt
        if self.grid.scheme == "explicit":
            return P + dt * (self.apply(P) + self.forcing)
        rhs = P + 0.5 * dt * self.apply(P) + dt * self.forcing
        return solve_banded((1, 1), self._banded, rhs)

    def total(self, P):
        return float(np.dot(self.volumes, P))

    def bulk_average(self, P):
        return float(np.dot(self.bulk_weights, P) / self.bulk_weights.sum())


def diffusion_buildup(D_sd, T1n, geometry=RadialGeometry(), grid=DiffusionGrid(),
                      source_rate=1.0, source_polarization=1.0, initial=None) -> BuildupCurve:
    """Bulk-averaged polarization trajectory under continuous injection."""
    model = RadialDiffusion(D_sd, T1n, geometry, grid, source_rate, source_polarization)
    P = np.zeros(grid.n_cells) if initial is None else np.array(initial, dtype=float)
    n_steps = int(round(grid.t_end / grid.dt))
    times = [0.0]
    bulk = [model.bulk_average(P)]
    for i in range(1, n_steps + 1):
        P = model.step(P)
        if i % grid.record_every == 0 or i == n_steps:
            times.append(i * grid.dt)
            bulk.append(model.bulk_average(P))
    return BuildupCurve(np.array(times), np.array(bulk), metadata={
        "D_sd_nm2_per_s": float(D_sd), "T1n_s": None if T1n is None else float(T1n),
        "scheme": grid.scheme, "n_cells": grid.n_cells, "dt_s": grid.dt,
    })
