from __future__ import annotations
import csv
import json
import os

import pytest

from scanspectra.run.cli import (EXIT_FAILED, EXIT_FILE, EXIT_OK, EXIT_USAGE, ScanSpectraCommandLineInterface,
                                 run_subcommand)


LOGS: dict[str, list[str]] = {
    'info': [],
    'warning': [],
    'error': []
}

HARDCORE_K2 = "hardcore:complete:n=2,lambda=1"


def reset_logger():
    global LOGS
    LOGS = {
        'info': [],
        'warning': [],
        'error': []
    }


class CaptureLogger(object):
    @staticmethod
    def info(msg, **_):
        LOGS['info'].append(msg)

    @staticmethod
    def warning(msg, **_):
        LOGS['warning'].append(msg)

    @staticmethod
    def error(msg, **_):
        LOGS['error'].append(msg)

    @staticmethod
    def exception(msg, **_):
        LOGS['error'].append(msg)


@pytest.fixture(scope="module")
def cli():
    return ScanSpectraCommandLineInterface(show_prompt=False, logger_class=CaptureLogger)


def _report(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_verify(cli, capsys):
    assert cli.execute("verify", ["--model", "hardcore:complete:n=4,lambda=1", "--suite", "scan-gap"]) == EXIT_OK
    report = _report(capsys)
    assert report["passed"]
    assert report["schema_version"] == 1
    assert report["config"]["suite"] == "scan-gap"
    assert report["config"]["model"] == "hardcore:complete:n=4,lambda=1"
    assert len([result for result in report["results"] if result["kind"] == "spectral"]) == 24


def test_verify_short_suite_name(cli, capsys):
    assert cli.execute("verify", ["--model", "hardcore:complete:n=4,lambda=1", "--suite", "cor32"]) == EXIT_OK
    report = _report(capsys)
    assert report["passed"]
    assert report["config"]["suite"] == "cor32"
    permutations = [result for result in report["results"] if result["kind"] == "spectral"]
    assert len(permutations) == 24
    assert all(result["verdict"] == "pass" for result in permutations)
    assert all(result["name"].startswith("scan-gap ") for result in permutations)


def test_verify_without_model(cli):
    reset_logger()
    assert cli.execute("verify", ["--suite", "laplacian"]) == EXIT_USAGE
    assert "verify needs --model" in LOGS['error'][-1]
    # The usage of the subcommand follows the error
    assert "Usage:" in LOGS['info'][-1]


def test_recht_re(cli, capsys):
    assert cli.execute("recht-re", ["--n", "4", "--delta", "0.5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.353553" in out
    report = json.loads(out)
    table = report["results"][0]
    assert table["kind"] == "table"
    assert table["payload"][0]["closed_form"] == pytest.approx(0.353553, abs=1e-6)
    assert report["results"][1]["name"] == "scan-gap-tightness n=4"
    assert report["results"][2]["name"] == "closed-form-agreement n=4"
    assert report["results"][2]["verdict"] == "pass"


def test_certify(cli, capsys):
    assert cli.execute("certify", ["--n", "3", "--seq", "0 0 0"]) == EXIT_FAILED
    report = _report(capsys)
    assert not report["passed"]
    assert report["results"][0]["payload"]["covered"] is False

    assert cli.execute("certify", ["--n", "3", "--seq", "0 1 2 0"]) == EXIT_OK
    payload = _report(capsys)["results"][0]["payload"]
    assert payload["cover_time"] == 3
    assert payload["sum_k"] == 6
    assert payload["accepted"] is True


def test_certify_with_model(cli, capsys, tmp_path):
    path = os.path.join(tmp_path, "seq.txt")
    with open(path, "w") as seq_fh:
        seq_fh.write("0, 1, 0\n")
    assert cli.execute("certify", ["--model", HARDCORE_K2, "--seq", path]) == EXIT_OK
    results = _report(capsys)["results"]
    assert [result["name"] for result in results] == ["certificate", "certified-sequence"]
    assert results[0]["payload"]["delta"] == pytest.approx(0.25)
    assert results[0]["payload"]["norm_bound"] == pytest.approx(1 - 0.25 / 64)

    assert cli.execute("certify", ["--model", HARDCORE_K2, "--n", "3", "--seq", "0 1 2"]) == EXIT_USAGE

    assert cli.execute("certify", ["--n", "3"]) == EXIT_USAGE


def test_certify_experiment(cli, capsys):
    code = cli.execute("certify", ["--n", "6", "--trials", "40", "--seed", "2"])
    assert code in (EXIT_OK, EXIT_FAILED)
    names = [result["name"] for result in _report(capsys)["results"]]
    assert names == ["certificate-acceptance", "sum-k-mean", "sum-k-variance"]


def test_spectra(cli, capsys):
    assert cli.execute("spectra", ["--model", HARDCORE_K2, "--seq", "1 0 1"]) == EXIT_OK
    results = {result["name"]: result for result in _report(capsys)["results"]}
    assert results["summary glauber"]["payload"]["operator_norm"] == pytest.approx(0.75)
    assert results["summary scan [0,1]"]["payload"]["operator_norm"] == pytest.approx(0.5)
    assert "summary sequence [1,0,1]" in results
    assert results["glauber-psd"]["verdict"] == "pass"
    assert results["projection site 0"]["verdict"] == "pass"


def test_mix(cli, capsys, tmp_path):
    path = os.path.join(tmp_path, "curves.csv")
    assert cli.execute("mix", ["--model", HARDCORE_K2, "--eps", "0.25", "--csv", path]) == EXIT_OK
    results = _report(capsys)["results"]
    assert [result["payload"]["t_mix"] for result in results] == [3, 2]
    assert [result["payload"]["unit"] for result in results] == ["site-steps", "sweeps"]

    with open(path, newline='') as csv_fh:
        rows = list(csv.DictReader(csv_fh))
    assert (rows[0]["t"], rows[0]["unit"]) == ("0", "site-steps")
    assert float(rows[0]["d_t"]) == pytest.approx(2 / 3)
    assert len(rows) == 4 + 3

    assert cli.execute("mix", ["--model", HARDCORE_K2, "--unit", "sweeps"]) == EXIT_OK
    assert [result["name"] for result in _report(capsys)["results"]] == ["mixing scan [0,1]"]


def test_hardcore(cli, tmp_path):
    reset_logger()
    out = os.path.join(tmp_path, "separation.json")
    path = os.path.join(tmp_path, "separation.csv")
    assert cli.execute("hardcore", ["--n", "2", "3", "--out", out, "--csv", path]) == EXIT_OK
    with open(out) as report_fh:
        report = json.load(report_fh)
    names = [result["name"] for result in report["results"]]
    assert names[:4] == ["separation", "glauber-slope", "scan-slope", "ratio-growth"]
    # Two sizes below n = 4 leave the slope checks informational
    assert [result["verdict"] for result in report["results"][1:4]] == ["info", "info", "info"]
    assert "compact-equivalence n=3" in names
    assert "glauber-tail n=2" in names
    assert report["results"][0]["payload"][0]["t_gd_steps"] == 3

    with open(path) as csv_fh:
        assert csv_fh.readline().strip() == "n,t_gd_steps,t_ss_sweeps,ratio,bound_check"
    assert LOGS['info'][-1].startswith("PASS:")


def test_sim(cli, capsys):
    code = cli.execute("sim", ["--n", "4", "--s", "2", "--trials", "200", "--tmax", "10", "--seed", "7"])
    assert code in (EXIT_OK, EXIT_FAILED)
    results = _report(capsys)["results"]
    assert [result["name"] for result in results] == ["trajectory", "nu-moments", "residue-decomposition"]
    assert results[0]["verdict"] == "pass"
    assert results[0]["payload"]["total_updates"] == 40


def test_out_is_deterministic(cli, tmp_path):
    path = os.path.join(tmp_path, "report.json")
    args = ["--model", "hardcore:complete:n=3,lambda=1", "--suite", "sequence-gap", "--trials", "3",
            "--seed", "5", "--out", path]
    contents = []
    for _ in range(2):
        assert cli.execute("verify", args) == EXIT_OK
        with open(path, "rb") as report_fh:
            contents.append(report_fh.read())
    assert contents[0] == contents[1]


def test_config_file(cli, capsys, tmp_path):
    path = os.path.join(tmp_path, "run.json")
    with open(path, "w") as config_fh:
        json.dump({"model": HARDCORE_K2, "suite": "laplacian", "tolerances": {"projection": 1e-8}}, config_fh)
    assert cli.execute("verify", ["--config", path, "--tol", "verification=1e-6"]) == EXIT_OK
    config = _report(capsys)["config"]
    assert config["tolerances"] == {"projection": 1e-8, "verification": 1e-6}
    assert config["suite"] == "laplacian"

    with open(path, "w") as config_fh:
        config_fh.write("[1, 2")
    assert cli.execute("verify", ["--config", path]) == EXIT_USAGE


@pytest.mark.parametrize("command, args", [
    ("spectra", ["--model", HARDCORE_K2, "--bogus"]),
    ("spectra", ["--model", "potts:complete:n=3"]),
    ("mix", ["--model", HARDCORE_K2, "--eps", "1.5"]),
    ("verify", ["--model", HARDCORE_K2, "--suite", "cor99"]),
    ("verify", ["--model", HARDCORE_K2, "--suite", "sequence-gap", "--trials", "0"]),
    ("sim", ["--n", "4", "--trials", "0"]),
    ("verify", ["--model", HARDCORE_K2, "--tol", "bogus=1"]),
    ("verify", ["--model", "hardcore:complete:n=6,lambda=1", "--suite", "converse"]),
    ("recht-re", ["--n", "1"]),
    ("certify", ["--n", "3", "--seq", "0 'one"]),
    ("teleport", []),
])
def test_usage_errors(cli, capsys, command, args):
    assert cli.execute(command, args) == EXIT_USAGE
    assert capsys.readouterr().out == ""


def test_file_errors(cli, tmp_path):
    assert cli.execute("spectra", ["--model", os.path.join(tmp_path, "missing.json")]) == EXIT_FILE

    path = os.path.join(tmp_path, "model.json")
    with open(path, "w") as model_fh:
        model_fh.write('{"alphabets": [2], "weights": [\n{"state": [5], "w": 1}\n]}')
    reset_logger()
    assert cli.execute("spectra", ["--model", path]) == EXIT_FILE
    assert "line 2" in LOGS['error'][-1]


def test_shell_dispatch(cli, tmp_path):
    out = os.path.join(tmp_path, "sweep.json")
    cli.onecmd(cli.precmd(f"recht-re --n 4 --delta 0.5 --out {out}"))
    assert cli.exit_code == EXIT_OK
    assert os.path.exists(out)

    cli.onecmd(cli.precmd("teleport --now"))
    assert cli.exit_code == EXIT_USAGE


def test_run_subcommand(capsys):
    assert run_subcommand([]) == EXIT_USAGE
    assert "Missing subcommand" in capsys.readouterr().out
    assert run_subcommand(["recht-re", "--n", "4"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["passed"]
