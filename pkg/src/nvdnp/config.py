"""Physics constants, hyperfine tensors and the sample registry.

Both files are JSON. ``NVDNP_CONFIG`` and ``NVDNP_SAMPLES`` override the
packaged defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources

from .dnp import SampleParams
from .ensemble import GridSpec, LineshapeParams
from .errors import ConfigError
from .spin_model import HyperfineTensor, NvParameters, default_site_tensors

CONFIG_ENV = "NVDNP_CONFIG"
SAMPLES_ENV = "NVDNP_SAMPLES"


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _packaged(name):
    return json.loads(resources.files("nvdnp").joinpath("data").joinpath(name).read_text("utf-8"))


@dataclass(frozen=True)
class PhysicsConfig:
    nv: NvParameters
    site_tensors: tuple
    lineshape: LineshapeParams
    grid_span: float
    grid_points: int
    temperature: float
    convention: str
    saturation_pulses: int
    saturation_spacing: float
    fid_t2star: float
    fid_dwell: float
    fid_noise: float

    def grid(self, center):
        return GridSpec.centered(center, self.grid_span, self.grid_points)


def load_config(path=None) -> PhysicsConfig:
    path = path or os.environ.get(CONFIG_ENV)
    raw = _read_json(path) if path else _packaged("defaults.json")
    try:
        c = raw["constants"]
        nv = NvParameters(
            D=float(c["D_GHz"]), gamma_e=float(c["gamma_e_GHz_per_T"]),
            gamma_n=float(c["gamma_n_MHz_per_T"]), B=float(c["B_T"]),
            theta=float(c.get("theta_rad", 0.0)),
        )
        hf = raw["hyperfine"]
        ref = HyperfineTensor(hf["reference_site_MHz"])
        sites = list(default_site_tensors(ref, hf.get("site_rotations_deg", (0.0, 120.0, 240.0))))
        for idx, tensor in hf.get("overrides", {}).items():
            sites[int(idx)] = HyperfineTensor(tensor)
        ls = raw.get("lineshape", {})
        grid = raw.get("grid", {})
        sat = raw.get("saturation", {})
        fid = raw.get("fid", {})
        return PhysicsConfig(
            nv=nv,
            site_tensors=tuple(sites),
            lineshape=LineshapeParams(ls.get("profile", "lorentzian"), float(ls.get("fwhm_MHz", 8.0))),
            grid_span=float(grid.get("span_GHz", 0.8)),
            grid_points=int(grid.get("points", 3201)),
            temperature=float(raw.get("temperature_K", 300.0)),
            convention=raw.get("polarization_convention", "high_temperature_no_half"),
            saturation_pulses=int(sat.get("n_pulses", 8)),
            saturation_spacing=float(sat.get("spacing_s", 0.01)),
            fid_t2star=float(fid.get("T2star_s", 5e-4)),
            fid_dwell=float(fid.get("dwell_s", 5e-7)),
            fid_noise=float(fid.get("noise_sigma", 0.0)),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid configuration: {exc!r}") from exc


def load_samples(path=None) -> dict:
    """Sample label -> SampleParams; the raw record is kept in ``extra``."""
    path = path or os.environ.get(SAMPLES_ENV)
    raw = _read_json(path) if path else _packaged("samples.json")
    field_T = raw.get("field_T", 0.472)
    out = {}
    try:
        for rec in raw["samples"]:
            out[rec["label"]] = SampleParams(
                label=rec["label"], p=float(rec["p"]), T_DNP=float(rec["T_DNP_s"]),
                T1n=float(rec["T1n_s"]), enhancement=float(rec["enhancement"]),
                B=float(rec.get("B_T", field_T)), extra=dict(rec),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sample registry: {exc!r}") from exc
    return out


def get_sample(label, path=None) -> SampleParams:
    samples = load_samples(path)
    if label not in samples:
        raise ConfigError(f"unknown sample {label!r}; known: {', '.join(sorted(samples))}")
    return samples[label]
