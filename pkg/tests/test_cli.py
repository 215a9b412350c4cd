from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from certrev.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main

GOLDEN = Path(__file__).resolve().parent / "golden"
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL = """\
name = tiny
scheme = crl
population = 300
users_per_ca = 100
verifiers = 30
horizon = 4
validity_days = 10
crl_period = 2
seed = 5
"""


@pytest.fixture
def scn(tmp_path) -> Path:
    p = tmp_path / "tiny.scn"
    p.write_text(SMALL)
    return p


@pytest.mark.parametrize("argv,golden", [
    (["demo-crt"], "demo_crt.txt"),
    (["demo-crt", "--revoke", "CA_2:500"], "demo_crt_ca2_500.txt"),
    (["demo-hcrs"], "demo_hcrs.txt"),
])
def test_demo_golden(tmp_path, argv, golden):
    out = tmp_path / "out.txt"
    assert main([*argv, "--out", str(out)]) == EXIT_OK
    assert out.read_text() == (GOLDEN / golden).read_text()


def test_demo_hcrs_custom(capsys):
    assert main(["demo-hcrs", "--depth", "3", "--revoked", "000,111"]) == EXIT_OK
    assert "cover (4): {001, 01, 10, 110}" in capsys.readouterr().out
    assert main(["demo-hcrs", "--depth", "3", "--revoked", "all"]) == EXIT_OK
    assert main(["demo-hcrs", "--depth", "3", "--revoked", "0000"]) == EXIT_USAGE


def test_demo_crt_bad_revoke():
    assert main(["demo-crt", "--revoke", "CA_2"]) == EXIT_USAGE
    assert main(["demo-crt", "--revoke", "CA_7:5"]) == EXIT_USAGE


def test_simulate_csv(scn, tmp_path, capsys):
    ledger = tmp_path / "ledger.csv"
    assert main(["simulate", "--scenario", str(scn), "--ledger", str(ledger)]) == EXIT_OK
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("# model-dependent")
    assert lines[1] == "scheme,link_class,bytes,kilobytes,cost"
    assert any(l.startswith("crl,total,") for l in lines)
    assert lines[-1].startswith("# peak_request_rate=")
    assert ledger.read_text().startswith("src,dst,link_class,tick,requests,bytes")


def test_simulate_is_reproducible(scn, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["simulate", "--scenario", str(scn), "--scheme", "hcrs", "--seed", "9", "--out", str(p)]) == 0
    assert a.read_text() == b.read_text()


def test_simulate_text_and_federal_note(capsys):
    assert main(["simulate", "--scenario", str(SCENARIOS / "federal.scn"), "--format", "text"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "federal PKI assumption list" in out and "model-dependent" in out


def test_compare(scn, capsys):
    assert main(["compare", "--scenario", str(scn), "--scheme", "crl", "--scheme", "nn"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].startswith("scheme,") and [l.split(",")[0] for l in lines[2:]] == ["crl", "nn"]


def test_config_errors_report_line(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("scheme = crl\npopulation = many\n")
    assert main(["simulate", "--scenario", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    bad.write_text("scheme = crl\n\nsegments = 0\n")
    assert main(["simulate", "--scenario", str(bad)]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err
    assert main(["simulate", "--scenario", str(tmp_path / "missing.scn")]) == EXIT_CONFIG


def test_usage_errors():
    assert main(["simulate", "--no-such-flag"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["simulate", "--scheme", "bogus"]) == EXIT_USAGE
    assert main(["prove", "--serial", "1"]) == EXIT_USAGE


@pytest.mark.parametrize("scheme", ["crt", "nn", "crs", "hcrs"])
def test_prove_verify_round_trip(scn, tmp_path, capsys, scheme):
    proof = tmp_path / f"{scheme}.bin"
    assert main(["prove", "--scenario", str(scn), "--scheme", scheme, "--serial", "150",
                 "--day", "3", "--out", str(proof)]) == EXIT_OK
    assert main(["verify", str(proof)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1].startswith(f"{scheme} serial 150 day 3: ")
    data = bytearray(proof.read_bytes())
    data[-1] ^= 0x01
    proof.write_bytes(bytes(data))
    assert main(["verify", str(proof)]) == EXIT_VERIFY


def test_prove_rejects_list_schemes_and_bad_serials(scn, tmp_path):
    out = str(tmp_path / "p.bin")
    assert main(["prove", "--scenario", str(scn), "--serial", "1", "--out", out]) == EXIT_CONFIG
    assert main(["prove", "--scenario", str(scn), "--scheme", "crt", "--serial", "999", "--out", out]) == EXIT_USAGE


def test_verify_malformed(tmp_path):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"not a proof")
    assert main(["verify", str(junk)]) == EXIT_VERIFY
    assert main(["verify", str(tmp_path / "absent.bin")]) == EXIT_CONFIG


def test_inspect(scn, tmp_path, capsys):
    assert main(["inspect", str(scn)]) == EXIT_OK
    assert "population = 300" in capsys.readouterr().out
    proof = tmp_path / "p.bin"
    main(["prove", "--scenario", str(scn), "--scheme", "nn", "--serial", "5", "--out", str(proof)])
    capsys.readouterr()
    assert main(["inspect", str(proof)]) == EXIT_OK
    assert "scheme: nn" in capsys.readouterr().out


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "certrev.cli", "demo-hcrs", "--depth", "2", "--revoked", "00"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "cover (2): {01, 1}" in r.stdout
