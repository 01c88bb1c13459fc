import json

import numpy as np
import pytest

from mfdirac import config as cfgmod
from mfdirac.config import ConfigError, normalize
from mfdirac.dynamics import smooth_noise_hat
from mfdirac.grid import SpinorField
from mfdirac.io import read_csv, read_snapshot, write_csv, write_json, write_snapshot


def test_csv_roundtrip_and_format(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["x", "n", "flag"], [(0.1, 3, True), (-2.5e-17, 4, False)])
    assert p.read_text().splitlines() == [
        "x,n,flag",
        "1.000000000000000e-01,3,1",
        "-2.500000000000000e-17,4,0",
    ]
    d = read_csv(p)
    assert d["x"].tolist() == [0.1, -2.5e-17] and d["n"].tolist() == [3.0, 4.0]


def test_empty_csv(tmp_path):
    p = write_csv(tmp_path / "e.csv", ["a", "b"], [])
    assert p.read_text() == "a,b\n"
    assert read_csv(p)["a"].size == 0


def test_json_sanitizes(tmp_path):
    p = write_json(tmp_path / "r.json", {"b": np.float64(np.nan), "a": np.arange(2), "c": 1 + 2j,
                                         "d": np.bool_(True)})
    assert json.loads(p.read_text()) == {"a": [0, 1], "b": None, "c": [1.0, 2.0], "d": True}
    assert p.read_text().index('"a"') < p.read_text().index('"b"')


def test_snapshot_roundtrip(tmp_path, grid32):
    psi = SpinorField(grid32, smooth_noise_hat(grid32, 1))
    p = write_snapshot(tmp_path / "s.bin", psi, 1.0, 2.5)
    header, back = read_snapshot(p)
    assert header["time"] == 2.5 and header["byte_order"] == "little" and header["space"] == "position"
    assert np.array_equal(back.data, psi.to_position().data)
    assert p.stat().st_size == len(p.read_bytes().split(b"\n", 1)[0]) + 1 + 16 * 4 * 32**3


# config ---------------------------------------------------------------------
def test_defaults_filled():
    c = cfgmod.default("attract")
    assert c.name == "attract" and c.time["T"] == 50.0 and c.data["grid"] == {"N": 64, "L": 32.0}
    assert c.params["initial"]["kind"] == "perturbedSolitary"
    assert cfgmod.default("evolve").time["T"] == 20.0


@pytest.mark.parametrize("name", cfgmod.EXPERIMENTS)
def test_roundtrip(name, tmp_path):
    c = normalize({"experiment": {"name": name}, "seed": 4})
    c.save(tmp_path / "c.json")
    again = cfgmod.load(tmp_path / "c.json")
    assert again.data == c.data and again.dumps() == c.dumps()


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"grid": {"N": 64, "M": 2}},
    {"model": {"mass": 1.0}},
    {"experiment": {"name": "evolve", "params": {"engine": "spectral", "speed": 2}}},
    {"experiment": {"name": "dance"}},
    {"grid": 64},
])
def test_unknown_or_malformed_rejected(raw):
    with pytest.raises(ConfigError):
        normalize(raw)


@pytest.mark.parametrize("raw", [
    {"model": {"potential": [1.0]}},
    {"model": {"potential": [0.0, -1.0]}},
    {"model": {"m": 0.0}},
    {"model": {"coupling": [{"amplitude": 1.0, "width": 1.0, "direction": [1, 0, 0, 0]},
                            {"amplitude": -1.0, "width": 1.0, "direction": [1, 0, 0, 0]}]}},
    {"grid": {"N": 63}},
    {"time": {"dt": 0.0}},
    {"seed": -1},
    {"seed": 1.5},
    {"tolerances": {"sigma": 0.0}},
    {"experiment": {"name": "evolve", "params": {"engine": "fast"}}},
])
def test_invariants_enforced(raw):
    with pytest.raises(ConfigError):
        normalize(raw)


def test_resolution_rule_warns():
    with pytest.warns(UserWarning, match="Nyquist"):
        normalize({"grid": {"N": 16, "L": 32.0}})


def test_name_mismatch_and_overrides():
    c = normalize({"experiment": {"name": "sigma"}})
    with pytest.raises(ConfigError):
        normalize(c.data, "atlas")
    with pytest.raises(ConfigError):
        c.with_overrides(engine="both")
    e = cfgmod.default("evolve").with_overrides(seed=9, output="x", engine="both")
    assert e.seed == 9 and e.data["output"] == "x" and e.params["engine"] == "both"


def test_complex_coupling_accepted():
    c = normalize({"model": {"coupling": [{"amplitude": [0.5, 0.5], "width": 1.0,
                                           "direction": [[1, 0], [0, 1], 0, 0]}]}})
    assert c.coupling().terms[0].amplitude == 0.5 + 0.5j


def test_omega_grid():
    assert cfgmod.omega_grid(0, 1, 0).size == 0
    assert cfgmod.omega_grid(0.3, 1, 1).tolist() == [0.3]
    assert cfgmod.omega_grid(-1, 1, 5).tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
