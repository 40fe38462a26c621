import json

import pytest

from keylab.cli import CONFIG_ENV, main


def run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    out = capsys.readouterr()
    return code, json.loads(out.out), out.err


def test_run_honest(capsys):
    code, d, _ = run_json(capsys, "run", "mac-qke", "--seed", "7", "--n", "256")
    assert code == 0 and d["run"]["outcome"] == "OK" and d["run"]["key_bits"] == 256
    assert d["seed"] == 7 and d["schema"] == "keylab.run/1" and d["config"]["n"] == 256


def test_run_intercept_resend_aborts(capsys):
    code, d, _ = run_json(capsys, "run", "mac-qke", "--eve", "intercept-resend")
    assert d["run"]["outcome"] == "ABORT"
    assert 0.2 <= d["run"]["qber"] <= 0.3


def test_run_oob(capsys):
    code, d, _ = run_json(capsys, "run", "oob")
    assert d["run"]["messages"] == 0 and d["run"]["key_equals_initial_key"]


def test_table3_underpowered_warning(capsys):
    code = main(["table3", "--trials", "10"])
    out = capsys.readouterr()
    assert "underpowered" in out.err and "underpowered" in out.out
    assert code in (0, 2)


def test_advantage_seb_revealed(capsys):
    code, d, _ = run_json(capsys, "advantage", "--real", "seb", "--reveal-keys", "--distinguisher", "recompute",
                          "--trials", "100")
    assert d["results"][0]["advantage"] >= 0.95


def test_attribution_sig_qke_otp(capsys):
    code, d, _ = run_json(capsys, "attribution", "--protocol", "sig-qke", "--cipher", "otp")
    assert code == 0 and d["verdict"]["label"] == "nonattributable"


def test_two_phase_break_after(capsys):
    code, d, _ = run_json(capsys, "two-phase", "--sessions", "3", "--break-owf-after", "1", "--trials", "10")
    assert code == 0 and d["keys_private"]


def test_exhaustion(capsys):
    code, d, _ = run_json(capsys, "exhaustion")
    assert code == 0 and d["mac_reason"] == "auth-key-exhausted" and d["sig_completed"]


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "nope"],
        ["run", "oob", "--bogus"],
        ["run", "oob", "--set", "bogus=1"],
        ["run", "oob", "--set", "novalue"],
        ["run", "oob", "--noise", "0.7"],
        ["table3", "--trials", "0"],
        ["two-phase", "--break-owf-during", "2"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1


def test_config_file_layering(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "keylab.conf"
    cfg.write_text("# defaults\nseed = 3\nn = 64\nformat = json\n")
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert main(["run", "pge"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["seed"] == 3 and d["config"]["n"] == 64
    assert main(["run", "pge", "--n", "128", "--seed", "4"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["seed"] == 4 and d["config"]["n"] == 128


def test_config_file_unknown_key(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("colour = blue\n")
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert main(["run", "oob"]) == 1


def test_reruns_are_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert main(["kdc", "--trials", "30", "--seed", "11", "--format", "json", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_report_directory_has_all_outputs(tmp_path, capsys):
    rep = tmp_path / "rep"
    assert main(["run", "mac-qke", "--report", str(rep)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in rep.iterdir())
    assert names == ["report.csv", "report.json", "report.txt", "session.png"]
    assert (rep / "session.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    header = (rep / "report.csv").read_text().splitlines()[0]
    assert header.startswith("class,outcome,abort_reason,key_bits,qber")


def test_figures_flag(tmp_path, capsys):
    assert main(["table3", "--trials", "5", "--figures", str(tmp_path)]) in (0, 2)
    capsys.readouterr()
    assert (tmp_path / "table3.png").exists()
