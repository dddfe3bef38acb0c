import os
import pathlib

import numpy as np
import pytest

from css2d.cli import main
from css2d.config import ConfigError, parse_config
from css2d.dynamics import evolve
from css2d.fields import State, vacuum_state
from css2d.initdata import preset_state
from css2d.snapshots import SnapshotError, read_snapshot, write_snapshot
from css2d.spectral import Grid

GOOD_CONFIG = """\
# smoke configuration
grid.n_points = 16
grid.side_length = 20.0
time.dt = 2e-2
time.T = 0.1
time.scheme = rk4
physics.kappa = 1.0
physics.m_bound = 1.0
data.preset = vacuum
output.directory = {out}
output.diagnostics_stride = 2
norms.s = 1.1
seeds.rng_seed = 0
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- config parsing -------------------------------------------------------------

def test_parse_config_full():
    cfg = parse_config(GOOD_CONFIG.format(out="/tmp/x"))
    assert cfg.n_points == 16
    assert cfg.dt == pytest.approx(2e-2)
    assert cfg.preset == "vacuum"
    assert cfg.out_dir == "/tmp/x"
    cfg.validate()


def test_parse_config_line_precise_error():
    text = "grid.n_points = 16\n# ok\ngrid.mystery = 3\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert "line 3" in str(err.value)
    with pytest.raises(ConfigError) as err2:
        parse_config("grid.n_points 16\n")
    assert "line 1" in str(err2.value)
    with pytest.raises(ConfigError) as err3:
        parse_config("time.dt = fast\n")
    assert "line 1" in str(err3.value)


def test_parse_config_data_passthrough():
    cfg = parse_config("data.preset = bump\ndata.delta = 0.2\ndata.sigma = 2.5\n")
    assert cfg.preset_params == {"delta": 0.2, "sigma": 2.5}


def test_config_validation_bounds():
    cfg = parse_config("physics.kappa = 0.5\nphysics.m_bound = 1.0\n")
    with pytest.raises(ConfigError):
        cfg.validate()  # 1/(2 kappa^2) = 2 > m_bound
    cfg2 = parse_config("time.scheme = euler\n")
    with pytest.raises(ConfigError):
        cfg2.validate()


def test_config_warns_below_theorem_regime():
    cfg = parse_config("norms.s = 0.9\n")
    with pytest.warns(UserWarning):
        cfg.validate()


# --- snapshots --------------------------------------------------------------------

def test_snapshot_round_trip_bitwise(tmp_path, grid32):
    st = preset_state("bump", grid32, delta=0.17, sigma=2.5, vel=0.4,
                      a0_amp=0.1, rng_seed=5, kappa=1.3)
    st = State(grid32, st.phi, st.dphi, st.a, st.da, t=0.625, kappa=1.3)
    path = str(tmp_path / "state.css2")
    write_snapshot(path, st)
    back = read_snapshot(path)
    for name in ("phi", "dphi", "a", "da"):
        assert np.array_equal(getattr(back, name), getattr(st, name))
    assert back.t == st.t
    assert back.kappa == st.kappa
    assert back.grid.n_points == 32
    assert back.grid.side_length == st.grid.side_length


def test_snapshot_bad_magic(tmp_path, grid32):
    path = str(tmp_path / "state.css2")
    write_snapshot(path, vacuum_state(grid32))
    raw = bytearray(pathlib.Path(path).read_bytes())
    raw[0:4] = b"XXXX"
    pathlib.Path(path).write_bytes(bytes(raw))
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_snapshot_truncated(tmp_path, grid32):
    path = str(tmp_path / "state.css2")
    write_snapshot(path, vacuum_state(grid32))
    raw = pathlib.Path(path).read_bytes()
    pathlib.Path(path).write_bytes(raw[:-100])
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_snapshot_restart_bitwise(tmp_path, grid32):
    st = preset_state("bump", grid32, delta=0.1, sigma=2.5, vel=0.3)
    full = evolve(st, 0.2, 0.02, "rk4", record_stride=10**9).final
    half = evolve(st, 0.1, 0.02, "rk4", record_stride=10**9).final
    path = str(tmp_path / "mid.css2")
    write_snapshot(path, half)
    resumed = evolve(read_snapshot(path), 0.1, 0.02, "rk4", record_stride=10**9).final
    for name in ("phi", "dphi", "a", "da"):
        assert np.array_equal(getattr(full, name), getattr(resumed, name))


# --- simulate -----------------------------------------------------------------------

def test_simulate_vacuum(tmp_path, capsys):
    out = tmp_path / "out"
    cfg_path = _write(tmp_path, GOOD_CONFIG.format(out=out))
    code = main(["simulate", cfg_path])
    assert code == 0
    csv = (out / "diagnostics.csv").read_text().splitlines()
    assert csv[0].startswith("t,energy,")
    for row in csv[1:]:
        vals = row.split(",")
        assert float(vals[1]) == 0.0  # energy column all zeros
    assert (out / "state_final.css2").exists()


def test_simulate_cfl_guard(tmp_path):
    text = GOOD_CONFIG.format(out=tmp_path / "o") .replace("time.dt = 2e-2", "time.dt = 5.0")
    cfg_path = _write(tmp_path, text)
    code = main(["simulate", cfg_path])
    assert code == 2
    assert not (tmp_path / "o" / "diagnostics.csv").exists()


def test_simulate_deterministic_bytes(tmp_path):
    text = """\
grid.n_points = 32
grid.side_length = 20.0
time.dt = 5e-3
time.T = 0.05
time.scheme = rk4
physics.kappa = 1.0
physics.m_bound = 1.0
data.preset = bump
data.delta = 0.1
data.sigma = 2.5
data.vel = 0.4
output.directory = {out}
output.diagnostics_stride = 2
norms.s = 1.1
"""
    p1 = _write(tmp_path, text.format(out=tmp_path / "r1"), "a.cfg")
    p2 = _write(tmp_path, text.format(out=tmp_path / "r2"), "b.cfg")
    assert main(["simulate", p1]) == 0
    assert main(["simulate", p2]) == 0
    b1 = (tmp_path / "r1" / "diagnostics.csv").read_bytes()
    b2 = (tmp_path / "r2" / "diagnostics.csv").read_bytes()
    assert b1 == b2


def test_simulate_matches_archived_reference(tmp_path):
    ref = pathlib.Path(__file__).parent / "data" / "reference_diagnostics.csv"
    text = """\
grid.n_points = 32
grid.side_length = 20.0
time.dt = 5e-3
time.T = 0.05
time.scheme = rk4
physics.kappa = 1.0
physics.m_bound = 1.0
data.preset = bump
data.delta = 0.1
data.sigma = 2.5
data.vel = 0.4
output.directory = {out}
output.diagnostics_stride = 2
norms.s = 1.1
"""
    cfg = _write(tmp_path, text.format(out=tmp_path / "out"))
    assert main(["simulate", cfg]) == 0
    got = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
    want = ref.read_text().splitlines()
    assert got[0] == want[0]
    assert len(got) == len(want)
    for g_row, w_row in zip(got[1:], want[1:]):
        g_vals = np.array([float(x) for x in g_row.split(",")])
        w_vals = np.array([float(x) for x in w_row.split(",")])
        assert np.allclose(g_vals, w_vals, rtol=1e-10, atol=1e-14)


def test_simulate_unstable_exit(tmp_path):
    text = """\
grid.n_points = 8
grid.side_length = 20.0
time.dt = 0.9
time.T = 40.0
time.scheme = trig
physics.kappa = 0.71
physics.m_bound = 1.0
data.preset = bump
data.delta = 0.5
data.sigma = 1.5
data.vel = 3.0
output.directory = {out}
"""
    cfg = _write(tmp_path, text.format(out=tmp_path / "out"))
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["simulate", cfg])
    assert code == 3


def test_simulate_missing_config(tmp_path):
    assert main(["simulate", str(tmp_path / "absent.cfg")]) == 2


# --- picard ----------------------------------------------------------------------

def test_picard_vacuum_row(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG.format(out=tmp_path / "out"))
    assert main(["picard", cfg, "--m-max", "5", "--tol", "1e-9"]) == 0
    rows = (tmp_path / "out" / "picard_report.csv").read_text().splitlines()
    assert rows[0] == "iteration,diff_phi_hs,diff_a_hs,ratio"
    assert len(rows) == 2
    assert rows[1].startswith("1,0,0")


def test_picard_not_contracting_exit(tmp_path):
    text = """\
grid.n_points = 16
grid.side_length = 20.0
time.dt = 2e-2
time.T = 5.0
physics.kappa = 0.75
physics.m_bound = 1.0
data.preset = bump
data.delta = 0.45
data.sigma = 2.5
data.vel = 1.5
output.directory = {out}
"""
    cfg = _write(tmp_path, text.format(out=tmp_path / "out"))
    code = main(["picard", cfg, "--m-max", "30", "--tol", "1e-12"])
    assert code == 4
    assert (tmp_path / "out" / "picard_report.csv").exists()


# --- check ------------------------------------------------------------------------

def test_check_passes(tmp_path, capsys):
    text = """\
grid.n_points = 32
grid.side_length = 20.0
time.dt = 1e-2
time.T = 0.1
physics.kappa = 1.0
physics.m_bound = 1.0
data.preset = bump
data.delta = 0.05
data.sigma = 3.0
data.vel = 0.1
output.directory = {out}
norms.s = 1.1
"""
    cfg = _write(tmp_path, text.format(out=tmp_path / "out"))
    code = main(["check", cfg])
    captured = capsys.readouterr().out
    assert code == 0
    assert "FAIL" not in captured
    assert "scaling.hdot1: PASS" in captured


def test_check_corrupted_snapshot_localized(tmp_path, grid32, capsys):
    st = preset_state("bump", grid32, delta=0.1, sigma=2.5, vel=0.3)
    bad_a = st.a.copy()
    bad_a[1] *= 2.0
    bad = State(grid32, st.phi, st.dphi, bad_a, st.da)
    snap = str(tmp_path / "bad.css2")
    write_snapshot(snap, bad)
    text = f"""\
grid.n_points = 32
grid.side_length = 20.0
time.dt = 1e-2
time.T = 0.05
physics.kappa = 1.0
physics.m_bound = 1.0
data.snapshot = {snap}
output.directory = {tmp_path / 'out'}
"""
    cfg = _write(tmp_path, text)
    code = main(["check", cfg])
    captured = capsys.readouterr().out
    assert code == 1
    assert "state.sphere: PASS" in captured      # matter untouched
    assert "state.f2: FAIL" in captured          # gauge corruption localized
    assert "state.lorenz: FAIL" in captured


# --- lemma -----------------------------------------------------------------------

def test_lemma_matrix(capsys):
    assert main(["lemma", "--matrix", "1,1,1,1,1,1"]) == 0
    out = capsys.readouterr().out
    assert "product estimate: PASS" in out
    assert main(["lemma", "--matrix", "0,0,0,0,0,0"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" in out and "b_sum" in out


def test_lemma_nullform(capsys):
    assert main(["lemma", "--nullform", "Q0j,1.5,1.1,0.1,0,0"]) == 0
    out = capsys.readouterr().out
    assert "Q0j estimate: PASS" in out


def test_lemma_preset(capsys, tmp_path):
    csv = str(tmp_path / "verdicts.csv")
    assert main(["lemma", "preset", "--s", "1.1", "--eps", "0.05", "--csv", csv]) == 0
    out = capsys.readouterr().out
    assert "q0j_gauge" in out and "PASS" in out
    assert "dimension offset: +0.1" in out
    rows = pathlib.Path(csv).read_text().splitlines()
    assert rows[0] == "group,condition,satisfied,margin"
    assert len(rows) == 1 + 3 * 9


def test_lemma_ratio_trials(capsys, tmp_path):
    csv = str(tmp_path / "ratios.csv")
    assert main(["lemma", "--nullform", "Q0j,1.5,1.1,0.1,0,0",
                 "--ratio-trials", "3", "--grid-n", "16", "--time-samples", "16",
                 "--csv", csv]) == 0
    out = capsys.readouterr().out
    assert "max ratio" in out
    assert len(pathlib.Path(csv).read_text().splitlines()) == 4


def test_lemma_bad_args():
    assert main(["lemma"]) == 2
    assert main(["lemma", "--matrix", "1,2,3"]) == 2
    assert main(["lemma", "--nullform", "Qz,1,1,0,0,0"]) == 2
