"""CSV and JSON serialization for spectra, curves, FIDs, echo trains and stores.

CSV files start with ``# key: <json value>`` metadata lines, then a header
row, then data rows. Floats are written with ``repr`` so they round-trip
exactly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .bootstrap import DatasetStore
from .dnp import BuildupCurve, DnpSpectrum
from .ensemble import SpectrumGrid
from .errors import InputError
from .signal import EchoTrain, FidRecord

STORE_MANIFEST = "manifest.json"


def _fmt(x):
    return repr(float(x))


def dumps_json(obj):
    """Canonical JSON used for every report (stable key order, trailing newline)."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_csv(path, columns, rows, metadata=None):
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}: {json.dumps(_plain(value), sort_keys=True)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        return text
    Path(path).write_text(text, encoding="utf-8")
    return text


def read_csv(path, expected_columns=None):
    """Return (metadata, columns, float array of shape (rows, cols))."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputError(f"{path}: file not found") from exc
    meta, columns, data = {}, None, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            key, sep, value = s[1:].partition(":")
            if sep:
                try:
                    meta[key.strip()] = json.loads(value)
                except json.JSONDecodeError:
                    meta[key.strip()] = value.strip()
            continue
        if columns is None:
            columns = [c.strip() for c in s.split(",")]
            if expected_columns and columns[: len(expected_columns)] != list(expected_columns):
                raise InputError(
                    f"{path}: line {lineno}: expected columns {','.join(expected_columns)}, "
                    f"got {s}"
                )
            continue
        fields = s.split(",")
        if len(fields) != len(columns):
            raise InputError(f"{path}: row at line {lineno} has {len(fields)} fields, "
                             f"expected {len(columns)}")
        try:
            data.append([float(f) for f in fields])
        except ValueError as exc:
            raise InputError(f"{path}: row at line {lineno}: {exc}") from exc
    if columns is None:
        raise InputError(f"{path}: no header row (empty file?)")
    if not data:
        raise InputError(f"{path}: no data rows")
    arr = np.array(data)
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(arr), axis=1))[0])
        raise InputError(f"{path}: data row {bad + 1} contains non-finite values")
    return meta, columns, arr


# --- spectra -------------------------------------------------------------------

def write_spectrum(path, spec: SpectrumGrid):
    meta = {"format": "nvdnp-odmr/1", **spec.metadata}
    return write_csv(path, ["frequency_GHz", "intensity"],
                     zip(spec.frequencies, spec.intensities), meta)


def read_spectrum(path) -> SpectrumGrid:
    meta, _, a = read_csv(path, ["frequency_GHz", "intensity"])
    try:
        return SpectrumGrid(a[:, 0], a[:, 1], meta)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_dnp(path, spec: DnpSpectrum):
    meta = {"format": "nvdnp-dnp/1", **spec.metadata}
    return write_csv(path, ["mw_frequency_GHz", "signal"],
                     zip(spec.mw_frequencies, spec.signal), meta)


def read_dnp(path) -> DnpSpectrum:
    meta, _, a = read_csv(path, ["mw_frequency_GHz", "signal"])
    return DnpSpectrum(a[:, 0], a[:, 1], meta)


def write_buildup(path, curve: BuildupCurve):
    meta = {"format": "nvdnp-buildup/1", **curve.metadata}
    if curve.sigma is None:
        return write_csv(path, ["time_s", "polarization"], zip(curve.times, curve.polarization), meta)
    return write_csv(path, ["time_s", "polarization", "sigma"],
                     zip(curve.times, curve.polarization, curve.sigma), meta)


def read_buildup(path) -> BuildupCurve:
    meta, cols, a = read_csv(path, ["time_s", "polarization"])
    sigma = a[:, 2] if len(cols) > 2 and cols[2] == "sigma" else None
    try:
        return BuildupCurve(a[:, 0], a[:, 1], sigma, meta)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


# --- time domain -------------------------------------------------------------

def write_fid(path, fid: FidRecord):
    meta = {"format": "nvdnp-fid/1", "dwell_s": fid.dwell, "start_time_s": fid.start_time,
            **fid.metadata}
    return write_csv(path, ["time_s", "real", "imag"],
                     zip(fid.times, fid.samples.real, fid.samples.imag), meta)


def read_fid(path) -> FidRecord:
    meta, _, a = read_csv(path, ["time_s", "real", "imag"])
    t = a[:, 0]
    dwell = meta.get("dwell_s")
    if dwell is None:
        if t.size < 2:
            raise InputError(f"{path}: cannot infer dwell from a single sample")
        dwell = float(t[1] - t[0])
    start = meta.get("start_time_s", float(t[0]))
    extra = {k: v for k, v in meta.items() if k not in ("format", "dwell_s", "start_time_s")}
    return FidRecord(a[:, 1] + 1j * a[:, 2], float(dwell), float(start), extra)


def write_echo_train(path, train: EchoTrain):
    meta = {
        "format": "nvdnp-echo/1", "tau_s": train.tau, "dwell_s": train.dwell,
        "n_echoes": train.n_echoes, "points_per_echo": train.points_per_echo,
        "phase_cycle_deg": list(train.phase_cycle), **train.metadata,
    }
    k, j = np.meshgrid(np.arange(train.n_echoes), np.arange(train.points_per_echo), indexing="ij")
    t = (k * train.tau + j * train.dwell).ravel()
    s = train.echoes.ravel()
    return write_csv(path, ["time_s", "real", "imag"], zip(t, s.real, s.imag), meta)


def read_echo_train(path) -> EchoTrain:
    meta, _, a = read_csv(path, ["time_s", "real", "imag"])
    try:
        n, m = int(meta["n_echoes"]), int(meta["points_per_echo"])
        tau, dwell = float(meta["tau_s"]), float(meta["dwell_s"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: echo-train metadata incomplete ({exc!r})") from exc
    if a.shape[0] != n * m:
        raise InputError(f"{path}: expected {n * m} rows for {n} echoes x {m} points, "
                         f"found {a.shape[0]}")
    echoes = (a[:, 1] + 1j * a[:, 2]).reshape(n, m)
    cycle = tuple(meta.get("phase_cycle_deg", (180.0, 0.0, 0.0, 180.0)))
    extra = {k: v for k, v in meta.items()
             if k not in ("format", "tau_s", "dwell_s", "n_echoes", "points_per_echo",
                          "phase_cycle_deg")}
    return EchoTrain(echoes, tau, dwell, cycle, extra)


# --- dataset stores ----------------------------------------------------------

def write_store(directory, blocks, dwell, model=None, averages_per_block=4, extra=None):
    """Write blocks (sequence of complex FID arrays) plus manifest to ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, block in enumerate(blocks):
        name = f"block_{i:05d}.csv"
        write_fid(d / name, FidRecord(block, dwell))
        names.append(name)
    manifest = {"format": "nvdnp-store/1", "kind": "fid", "averages_per_block": averages_per_block,
                "blocks": names, **(extra or {})}
    if model is not None:
        write_fid(d / "model.csv", FidRecord(model, dwell))
        manifest["model"] = "model.csv"
    (d / STORE_MANIFEST).write_text(dumps_json(manifest), encoding="utf-8")
    return manifest


def read_store(directory):
    """Return (DatasetStore, manifest dict, model FidRecord or None)."""
    d = Path(directory)
    mpath = d / STORE_MANIFEST
    if not mpath.is_file():
        raise InputError(f"{directory}: missing {STORE_MANIFEST}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
        names = list(manifest["blocks"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{mpath}: invalid manifest ({exc!r})") from exc
    if not names:
        raise InputError(f"{mpath}: manifest lists no blocks")
    blocks = [read_fid(d / n).samples for n in names]
    if any(b.shape != blocks[0].shape for b in blocks):
        raise InputError(f"{directory}: blocks differ in length")
    model = read_fid(d / manifest["model"]) if manifest.get("model") else None
    store = DatasetStore(blocks, int(manifest.get("averages_per_block", 4)), manifest)
    return store, manifest, model


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)
