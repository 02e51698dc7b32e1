#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
import csv

import pytest
from click.testing import CliRunner

import hmftools.cli
from hmftools.cli import EXIT_ERROR, EXIT_USAGE, load_config

args = ["--help", "--version"]
commands = ["stability", "sweep-eta", "dynamics", "subdivision"]


def _read_csv(path):
    with open(path, encoding="utf-8") as fp:
        lines = fp.read().splitlines()
    comments = [line for line in lines if line.startswith("#")]
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    return comments, rows


@pytest.mark.parametrize("cli_args", args)
def test_main_help(cli_args):
    runner = CliRunner()
    result = runner.invoke(hmftools.cli.main, cli_args.split())
    assert not result.exception
    assert result.exit_code == 0


@pytest.mark.parametrize("command", commands)
def test_command_help(command):
    runner = CliRunner()
    result = runner.invoke(hmftools.cli.main, [command, "--help"])
    assert result.exit_code == 0
    assert "--omega-s" in result.output


@pytest.mark.parametrize("eta, exit_code", [("0.2", 0), ("0.5", 1), ("0.8", 2)])
def test_stability_exit_codes(eta, exit_code):
    runner = CliRunner()
    result = runner.invoke(hmftools.cli.main, ["stability", "--eta", eta, "--gamma", "2"])
    assert result.exit_code == exit_code
    report = dict(line.split("=", 1) for line in result.output.splitlines())
    assert report["classification"] == {0: "Stable", 1: "Critical", 2: "Unstable"}[exit_code]
    assert len(report["roots"].split(",")) == 3


def test_stability_static_response():
    runner = CliRunner()
    result = runner.invoke(hmftools.cli.main, ["stability", "--eta", "0.25"])
    report = dict(line.split("=", 1) for line in result.output.splitlines())
    assert float(report["chi_static"]) == pytest.approx(2.0)
    assert report["hurwitz_pass"] == "true"


@pytest.mark.parametrize(
    "cli_args",
    [
        ["stability", "--beta", "5", "--temperature", "0.2"],
        ["stability", "--eta", "-1"],
        ["stability", "--no-such-option"],
        ["sweep-eta", "--eta-min", "0.4", "--eta-max", "0.1"],
        ["dynamics", "--sigma-qq", "0.1", "--sigma-pp", "0.1"],
    ],
)
def test_usage_errors(cli_args):
    runner = CliRunner()
    result = runner.invoke(hmftools.cli.main, cli_args)
    assert result.exit_code == EXIT_USAGE


def test_library_error_exit_code():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(hmftools.cli.main, ["dynamics", "--n-modes", "2", "--t-max", "1", "--out", "d.csv"])
        assert result.exit_code == EXIT_ERROR


def test_temperature_option():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main,
            ["sweep-eta", "--temperature", "0.5", "--eta-max", "0.2", "--points", "3", "--out", "t.csv"],
        )
        assert result.exit_code == 0
        comments, _ = _read_csv("t.csv")
        assert "# beta = 2.0" in comments


def test_sweep_eta():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main, ["sweep-eta", "--eta-max", "1.0", "--points", "5", "--verify", "--out", "sweep.csv"]
        )
        assert result.exit_code == 0
        comments, rows = _read_csv("sweep.csv")

        assert comments[0].startswith("# hmftools ")
        assert "# units: Ω_S = ħ = k_B = 1" in comments
        assert "# command: sweep-eta" in comments
        assert "# gamma = 2.0" in comments
        assert list(rows[0].keys()) == ["eta", "a_hyb", "vartheta0", "stable_flag", "a_hyb_quadrature"]
        assert [row["eta"] for row in rows] == ["0.0", "0.25", "0.5", "0.75", "1.0"]

        assert float(rows[0]["a_hyb"]) == 0.0
        assert float(rows[1]["a_hyb"]) < 0.0
        assert float(rows[1]["a_hyb_quadrature"]) == pytest.approx(float(rows[1]["a_hyb"]), rel=1e-6)

        critical = rows[2]
        assert critical["stable_flag"] == "critical"
        assert critical["a_hyb"] == ""
        assert critical["vartheta0"] == ""

        assert rows[3]["stable_flag"] == "unstable"
        assert rows[3]["a_hyb"] != ""
        assert rows[3]["a_hyb_quadrature"] == ""


def test_sweep_eta_counterterm():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main, ["sweep-eta", "--eta-max", "0.8", "--points", "2", "--counterterm", "--out", "c.csv"]
        )
        assert result.exit_code == 0
        _, rows = _read_csv("c.csv")
        assert float(rows[0]["a_hyb_reorg"]) == 0.0
        assert float(rows[1]["a_hyb_reorg"]) > 0.0


def test_sweep_eta_deterministic():
    runner = CliRunner()
    with runner.isolated_filesystem():
        cli_args = ["sweep-eta", "--eta-max", "0.45", "--points", "4"]
        first = runner.invoke(hmftools.cli.main, cli_args + ["--out", "a.csv"])
        second = runner.invoke(hmftools.cli.main, ["--threads", "2"] + cli_args + ["--out", "b.csv"])
        assert first.exit_code == 0 and second.exit_code == 0
        with open("a.csv", "rb") as a, open("b.csv", "rb") as b:
            assert a.read() == b.read()


def test_dynamics_csv():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main, ["dynamics", "--eta", "0.2", "--t-max", "5", "--dt", "0.5", "--out", "dyn.csv"]
        )
        assert result.exit_code == 0
        comments, rows = _read_csv("dyn.csv")
        assert len(rows) == 11
        assert list(rows[0].keys()) == ["t", "q_mean", "p_mean", "sigma_qq", "sigma_pp", "sigma_qp"]
        assert float(rows[0]["q_mean"]) == 1.0
        assert float(rows[-1]["t"]) == pytest.approx(5.0)
        assert "# q0 = 1.0" in comments
        assert not any(c.startswith("# diverged") for c in comments)


def test_dynamics_divergence_marker():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main, ["dynamics", "--eta", "0.8", "--t-max", "60", "--dt", "0.5", "--out", "dyn.csv"]
        )
        assert result.exit_code == 0
        with open("dyn.csv", encoding="utf-8") as fp:
            lines = fp.read().splitlines()
        assert lines[-1].startswith("# diverged")
        _, rows = _read_csv("dyn.csv")
        assert len(rows) < 121


def test_subdivision_csv():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main,
            ["subdivision", "--eta", "0.3", "--eta", "0.6", "--t-min", "0.1", "--t-max", "1", "--points", "2"]
            + ["--out", "sub.csv"],
        )
        assert result.exit_code == 0
        _, rows = _read_csv("sub.csv")
        assert len(rows) == 4
        assert [row["status"] for row in rows] == ["ok", "ok", "unstable", "unstable"]
        assert float(rows[0]["route_disagreement"]) < 1e-6
        assert rows[2]["subdivision"] == ""


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\neta = 0.15, 0.3\n\nt-min = 0.05  # trailing\n", encoding="utf-8")
    assert load_config(str(path)) == {"eta": ["0.15", "0.3"], "t_min": "0.05"}

    path.write_text("not a pair\n", encoding="utf-8")
    with pytest.raises(Exception):
        load_config(str(path))


def test_config_file_defaults():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("unstable.cfg", "w", encoding="utf-8") as fp:
            fp.write("eta = 0.8\ngamma = 2\n")
        result = runner.invoke(hmftools.cli.main, ["--config", "unstable.cfg", "stability"])
        assert result.exit_code == 2

        # explicit flags override the file
        result = runner.invoke(hmftools.cli.main, ["--config", "unstable.cfg", "stability", "--eta", "0.2"])
        assert result.exit_code == 0


def test_config_file_temperature():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("hot.cfg", "w", encoding="utf-8") as fp:
            fp.write("temperature = 0.5\n")
        result = runner.invoke(
            hmftools.cli.main, ["--config", "hot.cfg", "sweep-eta", "--eta-max", "0", "--points", "1", "--out", "h.csv"]
        )
        assert result.exit_code == 0
        comments, _ = _read_csv("h.csv")
        assert "# beta = 2.0" in comments

        # a flag for the other member of the group wins over the file
        result = runner.invoke(
            hmftools.cli.main,
            ["--config", "hot.cfg", "sweep-eta", "--beta", "4", "--eta-max", "0", "--points", "1", "--out", "h.csv"],
        )
        assert result.exit_code == 0
        comments, _ = _read_csv("h.csv")
        assert "# beta = 4.0" in comments


def test_config_file_multiple_values():
    runner = CliRunner()
    with runner.isolated_filesystem():
        with open("sub.cfg", "w", encoding="utf-8") as fp:
            fp.write("eta = 0.3\npoints = 1\nt-min = 0.2\nt-max = 0.2\n")
        result = runner.invoke(hmftools.cli.main, ["--config", "sub.cfg", "subdivision", "--out", "s.csv"])
        assert result.exit_code == 0
        _, rows = _read_csv("s.csv")
        assert len(rows) == 1
        assert rows[0]["eta"] == "0.3"


def test_subdivision_critical_status():
    runner = CliRunner()
    with runner.isolated_filesystem():
        result = runner.invoke(
            hmftools.cli.main,
            ["subdivision", "--eta", "0.5", "--t-min", "0.2", "--t-max", "0.2", "--points", "1", "--out", "c.csv"],
        )
        assert result.exit_code == 0
        _, rows = _read_csv("c.csv")
        assert [row["status"] for row in rows] == ["critical"]
        assert rows[0]["subdivision"] == ""


def test_config_keys_use_flag_names():
    command = hmftools.cli.main.get_command(None, "subdivision")
    defaults = hmftools.cli._defaults_for(command, {"eta": "0.3", "out": "x.csv", "t_min": "0.1"})
    assert defaults == {"etas": ["0.3"], "out_path": "x.csv", "t_min": "0.1"}
