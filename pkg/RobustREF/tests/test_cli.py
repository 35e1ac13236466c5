import pytest
from click.testing import CliRunner

from main import cli


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def losses(write_csv):
    return write_csv("losses.csv", ["loss"], [[1.0], [2.0], [3.0]])


def _body(text):
    lines = text.splitlines()
    return lines[0], lines[1], [line.split(",") for line in lines[2:]]


def test_ref_prints_provenance_and_rows(runner, losses):
    result = runner.invoke(cli, ["ref", "--input", losses, "--eps", "0,0.1", "--seed", "7"])
    assert result.exit_code == 0, result.stderr
    provenance, header, rows = _body(result.stdout)
    assert provenance.startswith("# ")
    assert "seed=7" in provenance
    assert header == "epsilon,z_star,eta_star,value,degenerate_hit"
    assert len(rows) == 2
    assert float(rows[0][1]) == pytest.approx(2.0, abs=1e-9)


def test_negative_tolerance_exits_with_validation_code(runner, losses):
    result = runner.invoke(cli, ["ref", "--input", losses, "--eps=-1"])
    assert result.exit_code == 2
    assert "error" in result.stderr


def test_unsupported_degree_exits_with_validation_code(runner, losses):
    result = runner.invoke(cli, ["ref", "--input", losses, "--score", "vares", "--b", "1.5",
                                 "--alpha", "0.9"])
    assert result.exit_code == 2
    assert "UnsupportedDegree" in result.stderr


def test_missing_input(runner, tmp_path):
    assert runner.invoke(cli, ["ref", "--eps", "0"]).exit_code == 2
    result = runner.invoke(cli, ["ref", "--input", str(tmp_path / "absent.csv")])
    assert result.exit_code == 2


def test_config_file_supplies_defaults(runner, losses, tmp_path):
    config = tmp_path / "ref.env"
    config.write_text(f"input={losses}\neps=0.2\nscore=expectile\ntau=0.7\n", encoding="utf-8")
    result = runner.invoke(cli, ["ref", "--config", str(config)])
    assert result.exit_code == 0, result.stderr
    _, _, rows = _body(result.stdout)
    assert len(rows) == 1
    assert float(rows[0][0]) == 0.2

    overridden = runner.invoke(cli, ["ref", "--config", str(config), "--eps", "0,0.2"])
    assert len(_body(overridden.stdout)[2]) == 2


def test_output_file_is_reproducible(runner, losses, tmp_path):
    target = tmp_path / "out.csv"
    args = ["ref", "--input", losses, "--eps", "0.1,0.3", "--b", "1.5", "--output", str(target)]
    assert runner.invoke(cli, args).exit_code == 0
    first = target.read_bytes()
    assert runner.invoke(cli, args).exit_code == 0
    assert target.read_bytes() == first
    assert first.startswith(b"# ")
    assert b"\r\n" not in first


def test_weights_output(runner, losses, tmp_path):
    target = tmp_path / "weights.csv"
    result = runner.invoke(cli, ["ref", "--input", losses, "--eps", "0.1",
                                 "--weights-output", str(target)])
    assert result.exit_code == 0, result.stderr
    _, header, rows = _body(target.read_text(encoding="utf-8"))
    assert header == "atom,w_0.1"
    assert len(rows) == 3


def test_regress_command(runner, write_csv):
    path = write_csv("line.csv", ["x", "y"], [[x, 1 + 2 * x] for x in range(10)])
    result = runner.invoke(cli, ["regress", "--input", path, "--eps", "0,1"])
    assert result.exit_code == 0, result.stderr
    _, header, rows = _body(result.stdout)
    assert header.startswith("model,epsilon,beta_0,beta_1")
    assert float(rows[1][3]) == pytest.approx(2.0, abs=1e-6)


def test_log_level_flag(runner, losses):
    result = runner.invoke(cli, ["--log-level", "debug", "ref", "--input", losses, "--eps", "0.1"])
    assert result.exit_code == 0, result.stderr


def test_check_rejects_joint_family(runner):
    result = runner.invoke(cli, ["check", "--score", "vares", "--b", "0.5", "--alpha", "0.9"])
    assert result.exit_code == 2


def test_subcommands_registered(runner):
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    for name in ("ref", "murphy", "reinsurance", "regress", "check"):
        assert name in result.stdout


def test_empty_input_exits_with_validation_code(runner, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    result = runner.invoke(cli, ["ref", "--input", str(empty)])
    assert result.exit_code == 2
    assert "EmptyInput" in result.stderr


def test_malformed_input_exits_with_validation_code(runner, tmp_path):
    broken = tmp_path / "broken.csv"
    broken.write_text("loss\n1\n2,3,4\n", encoding="utf-8")
    result = runner.invoke(cli, ["ref", "--input", str(broken)])
    assert result.exit_code == 2
    assert "BadSpec" in result.stderr


def test_joint_family_on_negative_losses(runner, write_csv):
    path = write_csv("neg.csv", ["loss"], [[-float(k)] for k in range(1, 21)])
    result = runner.invoke(cli, ["ref", "--input", path, "--score", "vares", "--b", "0.5",
                                 "--alpha", "0.9", "--eps", "0.3"])
    assert result.exit_code == 2
    assert "DomainError" in result.stderr


def test_provenance_records_config_file(runner, losses, tmp_path):
    first, second = tmp_path / "first.env", tmp_path / "second.env"
    first.write_text("eps=0.1\n", encoding="utf-8")
    second.write_text("eps=0.2\n", encoding="utf-8")
    lines = []
    for config in (first, second):
        result = runner.invoke(cli, ["ref", "--input", losses, "--config", str(config)])
        assert result.exit_code == 0, result.stderr
        lines.append(result.stdout.splitlines()[0])
    assert lines[0] != lines[1]
    assert f"--config={first}" in lines[0]
    assert "--eps=0.1" in lines[0]
