from __future__ import annotations

import pytest

from gan_actor_critic import cli
from gan_actor_critic.harness import read_metrics

TINY = """
[run]
episodes = 2
seeds = 0
solve_min_episodes = 1

[env]
name = pendulum
max_episode_steps = 5

[ddpg]
hidden_sizes = 8
batch_size = 4
warmup_steps = 2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY, encoding="utf-8")
    return path


def test_train_writes_metrics_and_reports_solve(config_file, tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["train", "--config", str(config_file), "--out", str(out), "--deterministic"])
    assert code == 0
    assert "seed 0: solved at episode 1" in capsys.readouterr().out
    assert len(read_metrics(out / "metrics.csv")) == 2
    assert (out / "seed_0.ckpt").exists()


def test_seed_flag_overrides_config(config_file, tmp_path):
    out = tmp_path / "run"
    cli.main(["train", "--config", str(config_file), "--out", str(out), "--seed", "7"])
    assert {row.seed for row in read_metrics(out / "metrics.csv")} == {7}


def test_eval_and_compare_after_training(config_file, tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["train", "--config", str(config_file), "--out", str(out)])
    capsys.readouterr()

    code = cli.main(["eval", "--config", str(config_file), "--checkpoint", str(out / "seed_0.ckpt"), "--episodes", "2"])
    assert code == 0
    assert "mean return over 2 episodes" in capsys.readouterr().out

    assert cli.main(["compare", str(out), str(out)]) == 0
    assert "ties 1" in capsys.readouterr().out


def test_compare_accepts_seed_and_out(config_file, tmp_path, capsys):
    out = tmp_path / "run"
    cli.main(["train", "--config", str(config_file), "--out", str(out)])
    capsys.readouterr()

    report_dir = tmp_path / "report"
    assert cli.main(["compare", str(out), str(out), "--seed", "0", "--out", str(report_dir)]) == 0
    printed = capsys.readouterr().out
    assert (report_dir / "comparison.txt").read_text(encoding="utf-8") == printed

    assert cli.main(["compare", str(out), str(out), "--seed", "9"]) == 1
    assert "Seed 9" in capsys.readouterr().err


def test_deterministic_help_names_what_it_changes(capsys):
    with pytest.raises(SystemExit):
        cli.main(["train", "--help"])
    assert "wall_ms" in capsys.readouterr().out


def test_bridge_command_prints_deviation(tmp_path, capsys):
    code = cli.main(["bridge", "--steps", "2", "--out", str(tmp_path)])
    assert code == 0
    output = capsys.readouterr().out
    assert "max parameter deviation after 2 steps: 0.000e+00" in output
    assert (tmp_path / "bridge_trace.csv").exists()


def test_engine_errors_exit_with_one(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nvariant = tabular\n", encoding="utf-8")
    assert cli.main(["train", "--config", str(bad), "--out", str(tmp_path / "run")]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_command_is_a_usage_error():
    with pytest.raises(SystemExit):
        cli.main([])
