import json

import pytest

from app.core.exceptions import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE
from app.main import build_parser, cli
from app.utils.formatters import JsonlFormatter

SUBCOMMANDS = ["synth", "stats", "pretrain", "finetune", "evaluate", "correct"]

TINY_RUN = {
    "model": {
        "d_model": 16, "n_heads": 2, "n_layers_enc": 1, "n_layers_dec": 1, "d_ff": 32,
        "rpp_rank": 2, "max_text_len": 64, "max_dec_len": 8,
    },
    "train": {"total_steps": 2, "batch_size": 2, "warmup_steps": 0, "checkpoint_every": 0},
    "adv": {"epsilon": 0.01},
}


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(TINY_RUN), encoding="utf-8")
    return path


# ============================================
# USAGE
# ============================================

@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_exits_zero(command, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli([command, "--help"]) == EXIT_OK
    assert "usage" in capsys.readouterr().out.lower()
    assert list(tmp_path.iterdir()) == []


def test_version(capsys):
    assert cli(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("scene-text-vqa ")


def test_unknown_subcommand(capsys):
    assert cli(["train-everything"]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_required_flag():
    assert cli(["synth", "--n", "3"]) == EXIT_USAGE


def test_threshold_range():
    assert cli(["correct", "--in", "a.jsonl", "--out", "b.jsonl", "--threshold", "150"]) == EXIT_USAGE


def test_parser_lists_subcommands():
    help_text = build_parser().format_help()
    assert all(command in help_text for command in SUBCOMMANDS)


# ============================================
# DONNÉES
# ============================================

def test_synth_is_deterministic(tmp_path):
    first, second = tmp_path / "a" / "data.jsonl", tmp_path / "b" / "data.jsonl"
    assert cli(["synth", "--seed", "1", "--n", "100", "--out", str(first)]) == EXIT_OK
    assert cli(["synth", "--seed", "1", "--n", "100", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert sorted(p.name for p in first.parent.iterdir()) == sorted(p.name for p in second.parent.iterdir())
    for name in (p.name for p in first.parent.iterdir()):
        assert (first.parent / name).read_bytes() == (second.parent / name).read_bytes()


def test_stats_report(tmp_path, capsys):
    data = tmp_path / "data.jsonl"
    cli(["synth", "--seed", "3", "--n", "20", "--out", str(data)])
    capsys.readouterr()
    assert cli(["stats", str(data)]) == EXIT_OK
    assert "images_with_text: 100.0%" in capsys.readouterr().out.splitlines()


def test_stats_missing_file(tmp_path):
    assert cli(["stats", str(tmp_path / "absent.jsonl")]) == EXIT_RUNTIME


def test_correct(tmp_path):
    source, target = tmp_path / "answers.jsonl", tmp_path / "corrected.jsonl"
    JsonlFormatter.write_jsonl(source, [
        {"image_id": "a", "answer": "c0ca cola", "scene_tokens": ["coca", "cola"]},
        {"image_id": "b", "answer": "stop", "scene_tokens": [{"text": "stop", "box": [0.1, 0.1, 0.2, 0.2]}]},
        {"image_id": "c", "answer": "zebra", "scene_tokens": ["12", "exit"]},
    ])
    assert cli(["correct", "--in", str(source), "--out", str(target), "--threshold", "80"]) == EXIT_OK

    records = {r["image_id"]: r for r in JsonlFormatter.read_jsonl(target)}
    assert records["a"]["corrected"] == "coca cola" and records["a"]["applied"] is True
    assert records["a"]["score"] == 89
    assert records["b"]["corrected"] == "stop" and records["b"]["applied"] is False
    assert records["c"]["corrected"] == "zebra"


def test_correct_uses_reading_order_of_boxes(tmp_path):
    source, target = tmp_path / "answers.jsonl", tmp_path / "corrected.jsonl"
    JsonlFormatter.write_jsonl(source, [
        {"image_id": "boxed", "answer": "coca col", "scene_tokens": [
            {"text": "cola", "box": [0.5, 0.1, 0.6, 0.2]},
            {"text": "coca", "box": [0.1, 0.1, 0.2, 0.2]},
        ]},
        {"image_id": "bare", "answer": "cola coc", "scene_tokens": ["cola", "coca"]},
    ])
    assert cli(["correct", "--in", str(source), "--out", str(target), "--threshold", "80"]) == EXIT_OK

    records = {r["image_id"]: r for r in JsonlFormatter.read_jsonl(target)}
    assert records["boxed"]["corrected"] == "coca cola" and records["boxed"]["score"] == 89
    assert records["bare"]["corrected"] == "cola coca"


def test_correct_rejects_bad_box(tmp_path):
    source = tmp_path / "answers.jsonl"
    JsonlFormatter.write_jsonl(source, [
        {"image_id": "a", "answer": "stop", "scene_tokens": [{"text": "stop", "box": [0.5, 0.5, 0.2, 0.2]}]},
    ])
    assert cli(["correct", "--in", str(source), "--out", str(tmp_path / "out.jsonl")]) == EXIT_RUNTIME


def test_correct_rejects_bad_record(tmp_path):
    source = tmp_path / "answers.jsonl"
    JsonlFormatter.write_jsonl(source, [{"image_id": "a", "scene_tokens": []}])
    assert cli(["correct", "--in", str(source), "--out", str(tmp_path / "out.jsonl")]) == EXIT_RUNTIME


# ============================================
# ENTRAÎNEMENT ET ÉVALUATION
# ============================================

def test_unknown_config_table(tmp_path):
    data = tmp_path / "data.jsonl"
    cli(["synth", "--seed", "1", "--n", "4", "--out", str(data)])
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"optimizer": {"lr": 1.0}}), encoding="utf-8")
    code = cli(["pretrain", "--data", str(data), "--out", str(tmp_path / "ckpt"), "--config", str(config)])
    assert code == EXIT_RUNTIME
    assert not (tmp_path / "ckpt").exists()


def test_stage_split_mismatch(tmp_path, run_config):
    data = tmp_path / "data.jsonl"
    cli(["synth", "--seed", "1", "--n", "4", "--out", str(data), "--split", "finetune"])
    code = cli(["pretrain", "--data", str(data), "--out", str(tmp_path / "ckpt"), "--config", str(run_config)])
    assert code == EXIT_RUNTIME


def test_pretrain_finetune_evaluate(tmp_path, run_config, capsys):
    pretrain_data, finetune_data, eval_data = (tmp_path / f"{name}.jsonl" for name in ("pre", "ft", "eval"))
    assert cli(["synth", "--seed", "1", "--n", "6", "--out", str(pretrain_data)]) == EXIT_OK
    assert cli(["synth", "--seed", "2", "--n", "6", "--out", str(finetune_data), "--split", "finetune"]) == EXIT_OK
    assert cli(["synth", "--seed", "3", "--n", "5", "--out", str(eval_data), "--split", "eval"]) == EXIT_OK

    pre_dir, ft_dir = tmp_path / "pre", tmp_path / "ft"
    assert cli([
        "pretrain", "--data", str(pretrain_data), "--out", str(pre_dir), "--config", str(run_config),
    ]) == EXIT_OK
    assert (pre_dir / "final.pt").is_file()
    metrics = JsonlFormatter.read_jsonl(pre_dir / "metrics.jsonl")
    assert [m["step"] for m in metrics] == [1, 2]
    assert {"gen", "mlm", "rpp", "adv", "kl"} <= set(metrics[0])

    assert cli([
        "finetune", "--data", str(finetune_data), "--out", str(ft_dir), "--config", str(run_config),
        "--init", str(pre_dir / "final.pt"),
    ]) == EXIT_OK
    finetune_metrics = JsonlFormatter.read_jsonl(ft_dir / "metrics.jsonl")
    assert all("mlm" not in m for m in finetune_metrics)

    summary_path = tmp_path / "eval" / "summary.json"
    capsys.readouterr()
    assert cli([
        "evaluate", "--data", str(eval_data), "--checkpoint", str(ft_dir / "final.pt"),
        "--out", str(summary_path), "--threshold", "80",
    ]) == EXIT_OK
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    assert set(summary) == {"n", "acc_raw", "acc_corrected"}
    assert summary["n"] == 5
    assert json.loads(capsys.readouterr().out) == summary

    records = JsonlFormatter.read_jsonl(tmp_path / "eval" / "summary.records.jsonl")
    assert len(records) == 5
    assert [r["image_id"] for r in records] == sorted(r["image_id"] for r in records)


def test_init_and_resume_are_exclusive(tmp_path, run_config):
    data = tmp_path / "ft.jsonl"
    cli(["synth", "--seed", "2", "--n", "4", "--out", str(data), "--split", "finetune"])
    code = cli([
        "finetune", "--data", str(data), "--config", str(run_config), "--out", str(tmp_path / "ckpt"),
        "--init", "a.pt", "--resume", "b.pt",
    ])
    assert code == EXIT_RUNTIME


def test_evaluate_missing_checkpoint(tmp_path):
    data = tmp_path / "eval.jsonl"
    cli(["synth", "--seed", "3", "--n", "3", "--out", str(data), "--split", "eval"])
    code = cli(["evaluate", "--data", str(data), "--checkpoint", str(tmp_path / "none.pt"),
                "--out", str(tmp_path / "summary.json")])
    assert code == EXIT_RUNTIME
