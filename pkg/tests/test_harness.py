import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coupled_rotors.errors import ConfigurationError
from coupled_rotors.evolution import ProbeSet
from coupled_rotors.harness import runner
from coupled_rotors.harness.cli import main
from coupled_rotors.harness.config import (
    ConfigError,
    RunConfig,
    ScheduleConfig,
    parse_config,
    serialize_config,
)
from coupled_rotors.harness.export import fmt, load_record
from coupled_rotors.harness.runner import CheckpointError, MemoryCapError, run
from coupled_rotors.harness.sweep import SweepError, sweep

MINIMAL = """
t_max = 100
[grid]
n = 64
[params]
k1 = 9.0
k2 = 10.0
xi12 = 0.05
"""


def small(tmp_path, **kw) -> RunConfig:
    base = dict(n=32, k1=9.0, k2=10.0, xi12=0.1, t_max=40, schedule=ScheduleConfig("linear", 20),
                output=str(tmp_path / "run"))
    base.update(kw)
    return RunConfig(**base)


# --- configuration -----------------------------------------------------------


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.hbar_s == 1.0
    assert cfg.schedule == ScheduleConfig("log", 200)
    assert cfg.initial1.sigma == pytest.approx(math.sqrt(0.5))
    assert cfg.initial1.x0 == pytest.approx(math.pi + 0.1)
    assert cfg.initial1.p0 == 0.0
    assert cfg.seed == 0 and cfg.ensemble == 1


def test_negative_coupling_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("xi12 = 0.05", "xi12 = -0.1"))
    assert exc.value.key == "params.xi12"


@pytest.mark.parametrize(
    "text, key",
    [
        ("bogus = 1\n" + MINIMAL, "bogus"),
        (MINIMAL.replace("[params]", "[params]\nk3 = 1.0"), "params.k3"),
        (MINIMAL.replace("n = 64", "n = 48"), "grid.n"),
        (MINIMAL.replace("n = 64", 'n = "64"'), "grid.n"),
        (MINIMAL.replace("k2 = 10.0\n", ""), "params.k2"),
        (MINIMAL + "[schedule]\nkind = \"cubic\"\n", "schedule.kind"),
        (MINIMAL + "[initial.rotor1]\nsigma = 2.5\n", "initial.rotor1.sigma"),
        ("schema = 7\n" + MINIMAL, "schema"),
        ("t_max = [", "<document>"),
    ],
)
def test_invalid_config_names_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_baseline_round_trip():
    cfg = parse_config(MINIMAL)
    assert parse_config(serialize_config(cfg)) == cfg


@given(
    n=st.sampled_from([16, 32, 64, 512]),
    k=st.floats(0.0, 20.0),
    xi=st.floats(0.0, 1.0),
    hbar=st.floats(0.3, 1.2),
    t_max=st.integers(0, 10**5),
    kind=st.sampled_from(["log", "linear"]),
    count=st.integers(1, 500),
    seed=st.integers(0, 2**31),
    flags=st.lists(st.booleans(), min_size=6, max_size=6),
)
def test_config_round_trip_property(n, k, xi, hbar, t_max, kind, count, seed, flags):
    cfg = RunConfig(n=n, k1=k, k2=k + 1.0, xi12=xi, t_max=t_max, hbar_s=hbar,
                    schedule=ScheduleConfig(kind, count), probes=ProbeSet(*flags), seed=seed)
    assert parse_config(serialize_config(cfg)) == cfg


# --- export ------------------------------------------------------------------


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(fmt(x)) == x
    assert fmt(x) == repr(x)


def test_csv_header_and_round_trip(tmp_path):
    cfg = small(tmp_path, probes=ProbeSet(marginals=True, decoherence=True), schedule=ScheduleConfig("log", 8))
    rec = run(cfg)
    lines = (Path(cfg.output) / "record.csv").read_text().splitlines()
    assert lines[0] == "t,svn,slin,e1,e2,dcoh,valid"
    assert len(lines) == len(rec) + 1
    back = load_record(cfg.output)
    for col in ("t", "svn", "slin", "e1", "e2", "dcoh", "valid"):
        np.testing.assert_array_equal(getattr(back, col), getattr(rec, col))
    np.testing.assert_array_equal(back.energy_e1, rec.energy_e1)
    assert back.config == rec.config
    assert back.first_breach == rec.first_breach
    assert set(back.marginals) == set(rec.marginals)
    meta = json.loads((Path(cfg.output) / "record.json").read_text())
    assert meta["provenance"]["code_version"]


def test_marginal_files(tmp_path):
    cfg = small(tmp_path, probes=ProbeSet(marginals=True), schedule=ScheduleConfig("log", 4))
    rec = run(cfg)
    files = sorted(p.name for p in (Path(cfg.output) / "marginals").iterdir())
    t = rec.t[-1]
    assert f"marginal_t{t:06d}_momentum_rotor1.txt" in files
    assert f"marginal_t{t:06d}_position_rotor2.txt" in files
    assert len(files) == 4 * len(rec)
    vals = np.loadtxt(Path(cfg.output) / "marginals" / f"marginal_t{t:06d}_position_rotor1.txt")
    assert vals.shape == (cfg.n,)
    assert vals.sum() == pytest.approx(1.0, abs=1e-12)


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run(small(tmp_path, output=str(blocker / "sub")))


# --- runs --------------------------------------------------------------------


def test_uncoupled_run_has_no_entanglement(tmp_path):
    rec = run(small(tmp_path, xi12=0.0, t_max=200), write=False)
    assert np.all(rec.svn < 1e-10)
    assert np.all(rec.slin < 1e-10)


def test_reruns_are_byte_identical(tmp_path):
    a = run(small(tmp_path, output=str(tmp_path / "a")))
    b = run(small(tmp_path, output=str(tmp_path / "b")))
    assert a.complete and b.complete
    for name in ("record.csv", "energy.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_checkpoint_resume_is_bit_identical(tmp_path, monkeypatch):
    ref_cfg = small(tmp_path, output=str(tmp_path / "ref"), t_max=60, probes=ProbeSet(marginals=True))
    run(ref_cfg)
    cfg = ref_cfg.replace(output=str(tmp_path / "cut"), checkpoint_every=10)

    real = runner.save_checkpoint
    calls = []

    def interrupted(path, *a):
        real(path, *a)
        calls.append(a[1])
        if len(calls) == 3:
            raise KeyboardInterrupt

    monkeypatch.setattr(runner, "save_checkpoint", interrupted)
    with pytest.raises(KeyboardInterrupt):
        run(cfg)
    monkeypatch.setattr(runner, "save_checkpoint", real)
    assert (tmp_path / "cut" / runner.CHECKPOINT_NAME).exists()
    assert calls == [10, 20, 30]

    rec = run(cfg, resume=True)
    assert rec.complete
    assert not (tmp_path / "cut" / runner.CHECKPOINT_NAME).exists()
    for name in ("record.csv", "energy.csv"):
        assert (tmp_path / "cut" / name).read_bytes() == (tmp_path / "ref" / name).read_bytes()


def test_resume_rejects_other_config(tmp_path, monkeypatch):
    cfg = small(tmp_path, checkpoint_every=10)
    real = runner.save_checkpoint

    def stop(path, *a):
        real(path, *a)
        raise KeyboardInterrupt

    monkeypatch.setattr(runner, "save_checkpoint", stop)
    with pytest.raises(KeyboardInterrupt):
        run(cfg)
    monkeypatch.undo()
    with pytest.raises(CheckpointError):
        run(cfg.replace(xi12=0.2), resume=True)


def test_checkpoint_schema_checked(tmp_path):
    bad = tmp_path / "c.npz"
    np.savez(bad, schema=np.array("something/else"))
    with pytest.raises(CheckpointError):
        runner.load_checkpoint(bad)


def test_memory_cap_refuses_before_allocation(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("allocated before the memory check")

    monkeypatch.setattr(runner, "build_phase_tables", boom)
    monkeypatch.setattr(runner, "initial_state", boom)
    cfg = small(tmp_path, n=8192, memory_cap_mb=4096)
    with pytest.raises(MemoryCapError):
        run(cfg)
    assert isinstance(MemoryCapError("x"), ConfigurationError)


def test_ensemble_average(tmp_path):
    cfg = small(tmp_path, ensemble=3, seed=4)
    specs = runner.ensemble_specs(cfg)
    assert specs == runner.ensemble_specs(cfg)
    assert specs[0] == (cfg.initial1, cfg.initial2)
    rec = run(cfg, write=False)
    assert rec.extras["ensemble_size"] == 3
    members = [run(small(tmp_path, initial1=s1, initial2=s2), write=False) for s1, s2 in specs]
    np.testing.assert_allclose(rec.svn, np.mean([m.svn for m in members], axis=0), rtol=1e-12)
    with pytest.raises(ConfigurationError):
        run(cfg.replace(checkpoint_every=5))


# --- sweeps ------------------------------------------------------------------


def test_sweep_is_order_independent(tmp_path):
    base = RunConfig(n=64, k1=9.0, k2=10.0, xi12=0.0, t_max=300, schedule=ScheduleConfig("log", 60))
    values = [0.1, 0.3, 0.2]
    a = sweep(base, "xi12", values, d_cl=15.0, write=False)
    b = sweep(base, "xi12", [0.3, 0.1, 0.2], d_cl=15.0, workers=2, write=False)
    assert [s.value for s in a.summaries] == [0.1, 0.2, 0.3]
    assert a.table() == b.table() or all(
        x == y or (isinstance(x, float) and math.isnan(x) and math.isnan(y))
        for ra, rb in zip(a.table(), b.table()) for x, y in zip(ra, rb)
    )
    assert a.beta == b.beta or (math.isnan(a.beta) and math.isnan(b.beta))
    with pytest.raises(SweepError):
        sweep(base, "xi12", [0.1, 0.1], d_cl=15.0, write=False)


def test_sweep_reports_total_failure(tmp_path):
    base = RunConfig(n=32, k1=9.0, k2=10.0, xi12=0.1, t_max=10)
    with pytest.raises(SweepError):
        sweep(base, "hbar_s", [20.0, 30.0], d_cl=15.0, write=False)


# --- command line ------------------------------------------------------------


def write_config(tmp_path, text=MINIMAL) -> Path:
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return p


def test_cli_run_ok(tmp_path, capsys):
    cfg = write_config(tmp_path, MINIMAL.replace("n = 64", "n = 32"))
    assert main(["run", str(cfg), "--output", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "record.csv").exists()
    assert main(["report", str(tmp_path / "out"), "--d-cl", "15"]) == 0


def test_cli_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, MINIMAL.replace("xi12 = 0.05", "xi12 = -0.1"))
    assert main(["run", str(cfg)]) == 2
    assert "params.xi12" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.toml")]) == 4


def test_cli_unwritable_output(tmp_path):
    cfg = write_config(tmp_path, MINIMAL.replace("n = 64", "n = 32"))
    (tmp_path / "file").write_text("x")
    assert main(["run", str(cfg), "--output", str(tmp_path / "file" / "out")]) == 4


def test_cli_strict_breach(tmp_path):
    # a tiny grid saturates its momentum edge within a few kicks
    cfg = write_config(tmp_path, MINIMAL.replace("n = 64", "n = 16"))
    assert main(["run", str(cfg), "--output", str(tmp_path / "a")]) == 0
    assert main(["run", str(cfg), "--output", str(tmp_path / "b"), "--strict"]) == 3


def test_cli_predict(capsys):
    assert main(["predict-tstar", "--xi", "0.1", "--dq", "2"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(97.98, abs=0.01)
    assert main(["predict-tstar", "--xi", "0.1", "--dq", "-2"]) in (2, 3)


def test_cli_classical(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["classical", str(cfg), "--size", "500", "--t-max", "20", "--output", str(tmp_path / "c")]) == 0
    summary = json.loads((tmp_path / "c" / "classical.json").read_text())
    assert summary["lyapunov_k1"] > 1.0


def test_cli_sweep(tmp_path):
    cfg = write_config(tmp_path, MINIMAL.replace("n = 64", "n = 32").replace("t_max = 100", "t_max = 200"))
    code = main(["sweep", str(cfg), "--values", "0.2", "0.1", "--d-cl", "15", "--output", str(tmp_path / "s")])
    assert code in (0, 3)
    lines = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("value,xi12")
