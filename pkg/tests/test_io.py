import numpy as np
import pytest

from nvdnp import io as nio
from nvdnp.dnp import BuildupCurve, DnpSpectrum
from nvdnp.ensemble import SpectrumGrid
from nvdnp.errors import InputError
from nvdnp.signal import BiexpParams, FidRecord, synthesize_echo_train, synthesize_fid


def test_spectrum_round_trip(tmp_path):
    spec = SpectrumGrid([1.0, 1.5, 2.0], [0.1, 1 / 3, 0.0], {"p": 0.5, "weights": [0.5, 0.5]})
    nio.write_spectrum(tmp_path / "s.csv", spec)
    back = nio.read_spectrum(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.intensities, spec.intensities)
    assert back.metadata["weights"] == [0.5, 0.5]


def test_dnp_and_buildup_round_trip(tmp_path):
    d = DnpSpectrum([1.0, 2.0], [-0.25, 0.75])
    nio.write_dnp(tmp_path / "d.csv", d)
    np.testing.assert_array_equal(nio.read_dnp(tmp_path / "d.csv").signal, d.signal)
    c = BuildupCurve([0.0, 1.0, 2.0], [0.0, 0.4, 0.6], [0.01, 0.01, 0.01])
    nio.write_buildup(tmp_path / "b.csv", c)
    back = nio.read_buildup(tmp_path / "b.csv")
    np.testing.assert_array_equal(back.sigma, c.sigma)


def test_fid_round_trip_bit_exact(tmp_path):
    fid = synthesize_fid(0.7, 1e-4, noise_sigma=0.1, seed=3, n_points=33)
    nio.write_fid(tmp_path / "f.csv", fid)
    back = nio.read_fid(tmp_path / "f.csv")
    assert back.samples.tobytes() == fid.samples.tobytes()
    assert back.dwell == fid.dwell


def test_echo_round_trip(tmp_path):
    train = synthesize_echo_train(BiexpParams(0.5, 1e-3, 0.5, 1e-2), n_echoes=8,
                                  points_per_echo=4, noise_sigma=0.01, seed=1)
    nio.write_echo_train(tmp_path / "e.csv", train)
    back = nio.read_echo_train(tmp_path / "e.csv")
    np.testing.assert_array_equal(back.echoes, train.echoes)
    assert back.phase_cycle == train.phase_cycle and back.tau == train.tau


def test_store_round_trip(tmp_path):
    blocks = [np.arange(4) + 1j * i for i in range(3)]
    nio.write_store(tmp_path / "st", blocks, 1e-6, model=np.ones(4), extra={"hp_amplitude": 2.0})
    store, manifest, model = nio.read_store(tmp_path / "st")
    assert len(store) == 3 and manifest["hp_amplitude"] == 2.0
    np.testing.assert_array_equal(model.samples, np.ones(4))


@pytest.mark.parametrize("text, match", [
    ("", "no header"),
    ("time_s,polarization\n", "no data rows"),
    ("time_s,polarization\n0,1\n1,abc\n", "line 3"),
    ("time_s,polarization\n0,1,2\n", "line 2"),
    ("freq,intensity\n0,1\n", "expected columns"),
])
def test_malformed_csv(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InputError, match=match):
        nio.read_buildup(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(InputError, match="manifest"):
        nio.read_store(tmp_path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="not found"):
        nio.read_fid(tmp_path / "nope.csv")


def test_canonical_json_is_stable():
    a = nio.dumps_json({"b": np.float64(1.5), "a": np.arange(2)})
    assert a == '{\n  "a": [\n    0,\n    1\n  ],\n  "b": 1.5\n}\n'


def test_fid_metadata_dwell_inferred(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("time_s,real,imag\n0,1,0\n2e-6,0.5,0\n")
    assert nio.read_fid(path).dwell == pytest.approx(2e-6)
    assert isinstance(nio.read_fid(path), FidRecord)
