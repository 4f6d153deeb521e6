import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls.grid import Gaussian, PlaneWave, Topology, WaveField, make_grid
from dnls.io import (
    CheckpointError,
    ConfigError,
    checkpoint,
    checkpoint_bytes,
    parse_config,
    read_series,
    restore,
    restore_bytes,
    series_to_csv,
    write_series,
)
from dnls.observables import SERIES_COLUMNS, ObservableSeries

MINIMAL = """\
experiment = run
dim = 1
sigma1 = 1
sigma2 = 1
lambda = 1
a = 0.5
"""


# -- config ----------------------------------------------------------------------------


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.experiment == "run"
    assert cfg.physics.lam == 1 and cfg.physics.a == 0.5
    assert cfg.physics.omegas == (0.0,)
    assert cfg.grid.topology is Topology.LINE
    assert cfg.grid.points == (256,) and cfg.grid.half_extents == (10.0,)
    assert cfg.stepping.t_end == 1.0 and cfg.stepping.dt > 0
    assert cfg.stepping.watchdog_factor == 1e6
    assert isinstance(cfg.initial, Gaussian)
    assert cfg.output_dir == "out" and cfg.seed == 0


def test_subcritical_bound_cited():
    text = MINIMAL.replace("dim = 1", "dim = 3").replace("sigma2 = 1", "sigma2 = 3")
    with pytest.raises(ConfigError, match=r"2/\(d-2\)"):
        parse_config(text)


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(MINIMAL + "a = 1\n")


def test_unknown_key():
    with pytest.raises(ConfigError, match="colour"):
        parse_config(MINIMAL + "colour = blue\n")


@pytest.mark.parametrize("key", ["experiment", "dim", "sigma1", "sigma2", "lambda", "a"])
def test_missing_required_key(key):
    text = "\n".join(ln for ln in MINIMAL.splitlines() if not ln.startswith(key + " "))
    with pytest.raises(ConfigError, match=key):
        parse_config(text)


@pytest.mark.parametrize(
    "extra, key",
    [
        ("points = 7", "points"),
        ("dt = -1", "dt"),
        ("a = -1", "a"),
        ("half_extent = 0", "half_extent"),
        ("record_every = 0", "record_every"),
        ("watchdog_factor = 0.5", "watchdog_factor"),
        ("topology = sphere", "topology"),
        ("initial = banana", "initial"),
        ("omega = 1, 2", "omega"),
        ("dt = abc", "dt"),
        ("kappa = 0", "kappa"),
    ],
)
def test_invalid_values_name_key(extra, key):
    text = MINIMAL.replace("a = 0.5\n", "") + ("a = 0.5\n" if key != "a" else "") + extra + "\n"
    with pytest.raises(ConfigError, match=key):
        parse_config(text)


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\n" + MINIMAL.replace("a = 0.5", "a = 0.5  # damping") + "\n   \n")
    assert cfg.physics.a == 0.5


def test_blowup_default_watchdog():
    cfg = parse_config(MINIMAL.replace("experiment = run", "experiment = blowup"))
    assert cfg.stepping.watchdog_factor == 10.0


def test_torus_plane_wave_config():
    cfg = parse_config(MINIMAL + "topology = torus\ninitial = plane\nwavenumber = 2\npoints = 32\n")
    assert cfg.grid.topology is Topology.TORUS
    assert cfg.grid.half_extents == (math.pi,)
    assert isinstance(cfg.initial, PlaneWave)


def test_sweep_requires_axes_and_experiment():
    with pytest.raises(ConfigError, match="sweep"):
        parse_config(MINIMAL.replace("experiment = run", "experiment = sweep") + "sweep_experiment = run\n")
    with pytest.raises(ConfigError, match="sweep_experiment"):
        parse_config(MINIMAL.replace("experiment = run", "experiment = sweep") + "sweep.a = 1, 2\n")


def test_config_key_stable_and_sensitive():
    a, b = parse_config(MINIMAL), parse_config(MINIMAL)
    assert a.key() == b.key()
    assert parse_config(MINIMAL.replace("a = 0.5", "a = 0.6")).key() != a.key()
    assert parse_config(MINIMAL + "output_dir = elsewhere\n").key() == a.key()


# -- CSV series -------------------------------------------------------------------------------


def series(n, seed=0):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.1, 1.0, n))
    return ObservableSeries(t, *[rng.normal(size=n) * 10.0 ** rng.integers(-20, 20) for _ in range(7)])


def test_empty_series_header_only(tmp_path):
    p = tmp_path / "s.csv"
    write_series(ObservableSeries.empty(), p)
    assert p.read_bytes() == (",".join(SERIES_COLUMNS) + "\n").encode()


def test_two_samples_three_lines(tmp_path):
    p = tmp_path / "s.csv"
    write_series(series(2), p)
    data = p.read_bytes()
    assert data.count(b"\n") == 3 and b"\r" not in data
    assert data.startswith(b"t,mass,damping_norm,grad_norm,weight_norm,e_mod,e_lin,dissipation_residual\n")


def test_series_round_trip_bit_exact(tmp_path):
    s = series(50, seed=4)
    s.weight_norm[3] = math.nan
    p = tmp_path / "s.csv"
    write_series(s, p)
    back = read_series(p)
    for a, b in zip(s.columns(), back.columns()):
        assert np.array_equal(a.view(np.uint64), b.view(np.uint64))


def test_csv_uses_17_digits():
    line = series_to_csv(ObservableSeries(*[np.array([1 / 3])] * 8)).splitlines()[1]
    assert line.split(",")[0] == "0.33333333333333331"


# -- checkpoints --------------------------------------------------------------------------------


def rand_wave(dim, seed, topology=Topology.LINE):
    g = make_grid(dim, [1.5, 2.0, 2.5][:dim], [8, 10, 12][:dim], topology)
    rng = np.random.default_rng(seed)
    return WaveField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape), time=rng.uniform(0, 10))


@pytest.mark.parametrize("dim", [1, 2, 3])
@pytest.mark.parametrize("topology", list(Topology))
def test_checkpoint_round_trip(tmp_path, dim, topology):
    f = rand_wave(dim, dim, topology)
    p = tmp_path / "f.dnls"
    checkpoint(f, p)
    g = restore(p)
    assert g.grid == f.grid
    assert g.time == f.time
    assert np.array_equal(g.values.view(np.uint64), f.values.view(np.uint64))


def test_checkpoint_layout():
    f = rand_wave(1, 0, Topology.TORUS)
    b = checkpoint_bytes(f)
    assert b[:5] == b"DNLS\x01"
    assert struct.unpack("<I", b[5:9]) == (1,)
    assert struct.unpack("<Qd", b[9:25]) == (8, 1.5)
    code, t = struct.unpack("<Bd", b[25:34])
    assert code == 0 and t == f.time
    payload = np.frombuffer(b[34:], dtype="<f8")
    assert payload[0] == f.values[0].real and payload[1] == f.values[0].imag
    assert len(b) == 34 + 16 * 8


def test_truncated_checkpoint_reports_offset():
    b = checkpoint_bytes(rand_wave(2, 1))
    with pytest.raises(CheckpointError, match="byte offset"):
        restore_bytes(b[:-5])
    with pytest.raises(CheckpointError, match="byte offset 5"):
        restore_bytes(b[:7])


def test_wrong_magic():
    b = checkpoint_bytes(rand_wave(1, 2))
    with pytest.raises(CheckpointError, match="magic"):
        restore_bytes(b"XXXX" + b[4:])


def test_trailing_bytes_rejected():
    with pytest.raises(CheckpointError):
        restore_bytes(checkpoint_bytes(rand_wave(1, 3)) + b"\0")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.sampled_from([1, 2, 3]))
def test_checkpoint_property(seed, dim):
    f = rand_wave(dim, seed)
    g = restore_bytes(checkpoint_bytes(f))
    assert np.array_equal(g.values.view(np.uint64), f.values.view(np.uint64))
