import io
import json

import numpy as np
import pytest

from pimfft import CLOCK_HZ, GATE_ENERGY_FJ, ConfigurationError
from pimfft.bench import (
    CSV_COLUMNS,
    BenchConfig,
    SweepError,
    emit_report,
    load_reports,
    read_sequence_file,
    run,
    sweep,
    write_sequence_file,
)
from pimfft.cli import main


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    import os

    for k in list(os.environ):
        if k.startswith("PIMFFT_"):
            monkeypatch.delenv(k)


def small(**kw):
    return BenchConfig(**{"n": 32, **kw})


def test_crossbar_count_8gb():
    cfg = BenchConfig(n=2048, config="TwoR")
    assert cfg.crossbar_count == 65536
    assert cfg.replace(memory_gb=40).crossbar_count == 5 * 65536


def test_report_arithmetic():
    r = run(small())
    assert r.energy_fJ_per_instance == r.gate_ops * GATE_ENERGY_FJ
    assert r.latency_s == r.cycles / CLOCK_HZ
    assert r.throughput * r.latency_s == pytest.approx(r.crossbar_count * r.batch_per_crossbar, rel=1e-12)
    assert r.power_W == pytest.approx(r.energy_fJ_per_instance * 1e-15 * r.throughput, rel=1e-12)
    assert r.throughput_per_watt == pytest.approx(1 / (r.energy_fJ_per_instance * 1e-15), rel=1e-12)
    assert r.status == "pass" and r.bit_exact == "n/a"
    assert sum(getattr(r, f"cycles_{p}") for p in ("permutation", "movement", "twiddle", "butterfly")) == r.cycles


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_report_roundtrip(fmt):
    reports = [run(small()), run(small(workload="polymul-real", format="half-complex-32"))]
    buf = io.StringIO()
    emit_report(reports, buf, fmt)
    text = buf.getvalue()
    back = load_reports(text, fmt)
    assert [b.to_dict() for b in back] == [r.to_dict() for r in reports]
    if fmt == "csv":
        assert text.splitlines()[0].split(",") == list(CSV_COLUMNS)
    else:
        assert list(json.loads(text)[0]) == list(CSV_COLUMNS)


def test_deterministic_runs():
    a, b = run(small(seed=7, trials=2)), run(small(seed=7, trials=2))
    assert a.to_dict() == b.to_dict()
    c = run(small(seed=8))
    assert c.cycles == a.cycles and c.rel_l2_error != a.rel_l2_error


def test_sweep_grid_and_throughput_monotone(capsys):
    code = main(["sweep", "--n", "16,32,64", "--format", "single,half", "--emit", "json"])
    assert code == 0
    reports = load_reports(capsys.readouterr().out)
    assert len(reports) == 6
    assert {(r.n, r.format) for r in reports} == {(n, f) for n in (16, 32, 64) for f in ("single-complex-64", "half-complex-32")}
    mem = sweep([small(memory_gb=8), small(memory_gb=40)])
    assert mem[1].throughput > mem[0].throughput
    assert mem[1].throughput_per_watt == pytest.approx(mem[0].throughput_per_watt)


def test_sweep_empty_grid_and_failure():
    assert sweep([]) == []
    good = small()
    with pytest.raises(SweepError) as exc:
        sweep([good, good.replace(n=64, config="TwoRBeta", beta=4, partitions=2)])
    assert len(exc.value.partial) == 1


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--n", "32"]) == 0
    assert main(["run", "--n", "48"]) == 2
    assert main(["run", "--n", "32", "--format", "quad"]) == 2
    assert main(["run", "--n", "32", "--memory-gb", "16"]) == 2
    assert main(["run", "--n", "4096", "--config", "R"]) == 2
    # values whose spectrum overflows single precision fail verification
    path = tmp_path / "big.txt"
    write_sequence_file(path, np.full(32, 3e37 + 0j))
    capsys.readouterr()
    assert main(["run", "--n", "32", "--input", str(path)]) == 1
    assert "verification failed" in capsys.readouterr().err


def test_verify_subcommand(capsys):
    assert main(["verify", "--n", "64", "--format", "half"]) == 0
    (r,) = load_reports(capsys.readouterr().out)
    assert r.workload == "verify" and r.bit_exact == "true"


def test_env_overrides(monkeypatch, capsys, tmp_path):
    monkeypatch.setenv("PIMFFT_N", "16")
    monkeypatch.setenv("PIMFFT_EMIT", "csv")
    assert main(["run"]) == 0
    (r,) = load_reports(capsys.readouterr().out, "csv")
    assert r.n == 16
    out = tmp_path / "r.json"
    assert main(["run", "--n", "32", "--emit", "json", "--out", str(out)]) == 0
    (r,) = load_reports(out.read_text())
    assert r.n == 32


def test_sequence_file_io(tmp_path, rng, capsys):
    x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    path = tmp_path / "x.txt"
    write_sequence_file(path, x)
    back, fmt = read_sequence_file(path)
    assert np.array_equal(back, x) and fmt == "single-complex-64"
    assert main(["run", "--n", "32", "--input", str(path)]) == 0
    assert main(["run", "--n", "64", "--input", str(path)]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("3 single-complex-64\n1 2\n")
    with pytest.raises(ConfigurationError):
        read_sequence_file(bad)


def test_config_validation():
    for kw in ({"workload": "dct"}, {"trials": 0}, {"partitions": 0}, {"clock_hz": 0}, {"rows": 8, "n": 32}):
        with pytest.raises(ConfigurationError):
            small(**kw)
