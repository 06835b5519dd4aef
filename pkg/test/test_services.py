import json

import pytest

from app.core.exceptions import ConfigError
from app.inputs.tokenizer import Vocabulary
from app.models.enums import Modality, Split, Stage
from app.services import dataset_service, evaluation_service, training_service
from app.services.evaluation_service import records_path_for


class TestRunConfig:

    def test_toml(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(
            "[model]\nd_model = 32\nn_heads = 4\n\n"
            "[train]\nlearning_rate = 0.0005\nstage = \"FINETUNE\"\n\n"
            "[adv]\nepsilon = 0.0\ntarget_modality = \"SCENE\"\n",
            encoding="utf-8"
        )
        run = training_service.load_run_config(path, Stage.PRETRAIN)
        assert run.model == {"d_model": 32, "n_heads": 4}
        assert run.train.learning_rate == 0.0005
        assert run.train.stage == Stage.PRETRAIN
        assert not run.adv.enabled and run.adv.target_modality == Modality.SCENE

    def test_defaults_without_file(self):
        run = training_service.load_run_config(None, Stage.FINETUNE)
        assert run.model == {}
        assert run.train.stage == Stage.FINETUNE

    def test_unknown_table(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {}, "scheduler": {}}), encoding="utf-8")
        with pytest.raises(ConfigError):
            training_service.load_run_config(path, Stage.PRETRAIN)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"train": {"learning_rat": 0.1}}), encoding="utf-8")
        with pytest.raises(ConfigError):
            training_service.load_run_config(path, Stage.PRETRAIN)

    def test_section_must_be_table(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"adv": 0.1}), encoding="utf-8")
        with pytest.raises(ConfigError):
            training_service.load_run_config(path, Stage.PRETRAIN)

    @pytest.mark.parametrize("content", ["[1, 2]", "{not json"])
    def test_unreadable(self, tmp_path, content):
        path = tmp_path / "run.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(ConfigError):
            training_service.load_run_config(path, Stage.PRETRAIN)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            training_service.load_run_config(tmp_path / "absent.toml", Stage.PRETRAIN)


class TestResolveModelConfig:

    def test_fills_dataset_values(self, vocab):
        config = training_service.resolve_model_config({"d_model": 16, "n_heads": 2}, vocab, 8)
        assert config.vocab_size == len(vocab) and config.d_feat == 8

    def test_conflicting_vocab_size(self, vocab):
        with pytest.raises(ConfigError):
            training_service.resolve_model_config({"vocab_size": len(vocab) + 3}, vocab, 8)

    def test_conflicting_d_feat(self, vocab):
        with pytest.raises(ConfigError):
            training_service.resolve_model_config({"d_feat": 4}, vocab, 8)

    def test_invalid_heads(self, vocab):
        with pytest.raises(ConfigError):
            training_service.resolve_model_config({"d_model": 10, "n_heads": 4}, vocab, 8)


class TestDatasetService:

    def test_synthesize_and_load(self, tmp_path):
        out = tmp_path / "data.jsonl"
        manifest = dataset_service.synthesize(4, 10, out, Split.EVAL)
        bundle = dataset_service.load(out)
        assert manifest.split == Split.EVAL and manifest.n_samples == 10
        assert len(bundle.samples) == 10
        assert isinstance(bundle.vocab, Vocabulary)

    def test_generator_config_file(self, tmp_path):
        config = tmp_path / "gen.toml"
        config.write_text("d_feat = 6\ntokens_per_image = [2, 2]\n", encoding="utf-8")
        out = tmp_path / "data.jsonl"
        manifest = dataset_service.synthesize(1, 5, out, config_path=config)
        assert manifest.d_feat == 6
        assert all(len(s.scene_tokens) == 2 for s in dataset_service.load(out).samples)

    def test_invalid_generator_config(self, tmp_path):
        config = tmp_path / "gen.json"
        config.write_text(json.dumps({"d_feat": 0}), encoding="utf-8")
        with pytest.raises(ConfigError):
            dataset_service.load_generator_config(config)

    def test_stats(self, tmp_path):
        out = tmp_path / "data.jsonl"
        dataset_service.synthesize(2, 30, out)
        stats = dataset_service.stats(out)
        assert stats.n_images == 30
        assert stats.frac_images_with_text == 1.0


def test_records_path():
    assert records_path_for("out/summary.json").as_posix() == "out/summary.records.jsonl"


def test_correct_counts_applied(tmp_path):
    source = tmp_path / "in.jsonl"
    source.write_text(
        json.dumps({"image_id": "a", "answer": "exlt", "scene_tokens": ["exit"]}) + "\n"
        + json.dumps({"image_id": "b", "answer": "exit", "scene_tokens": ["exit"]}) + "\n",
        encoding="utf-8"
    )
    assert evaluation_service.correct(source, tmp_path / "out.jsonl", threshold=70) == 1
