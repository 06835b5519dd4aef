import pytest
import torch

from app.core.exceptions import CheckpointError, CheckpointSinkError
from app.models.training import AdvConfig, TrainConfig
from app.modeling.checkpoint import build_archive, load_archive, load_checkpoint, save_checkpoint
from app.training import sinks
from app.training.sinks import FINAL_CHECKPOINT, FileCheckpointSink


def test_round_trip(tmp_path, tiny_model, vocab, pretrain_batch):
    train = TrainConfig(seed=4)
    adv = AdvConfig(epsilon=0.2)
    path = save_checkpoint(tmp_path / "ckpt.pt", build_archive(tiny_model, vocab, 7, 1, train_config=train, adv_config=adv))

    loaded = load_checkpoint(path)
    assert loaded.step == 7 and loaded.skipped == 1
    assert loaded.vocab == vocab
    assert loaded.train_config == train and loaded.adv_config == adv
    assert loaded.model.config == tiny_model.config
    for name, tensor in tiny_model.state_dict().items():
        assert torch.equal(tensor, loaded.model.state_dict()[name]), name

    tiny_model.eval()
    loaded.model.eval()
    assert torch.equal(tiny_model.encode(pretrain_batch), loaded.model.encode(pretrain_batch))


def test_archive_layout(tiny_model, vocab):
    archive = build_archive(tiny_model, vocab)
    assert archive["format_version"] == 1
    assert archive["shapes"]["token_embedding.weight"] == [len(vocab), tiny_model.config.d_model]
    assert all(t.dtype == torch.float32 for t in archive["parameters"].values())
    assert archive["vocab"][:5] == ["[PAD]", "[EOS]", "[MASK]", "[SENTINEL]", "[UNK]"]


def test_atomic_write_leaves_no_temp(tmp_path, tiny_model):
    save_checkpoint(tmp_path / "nested" / "a.pt", build_archive(tiny_model))
    assert sorted(p.name for p in (tmp_path / "nested").iterdir()) == ["a.pt"]


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.pt")


def test_corrupt_file(tmp_path):
    path = tmp_path / "broken.pt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_archive(path)


def test_unknown_format(tmp_path):
    path = tmp_path / "other.pt"
    torch.save({"format_version": 99}, path)
    with pytest.raises(CheckpointError):
        load_archive(path)


def test_shape_mismatch(tmp_path, tiny_model, vocab):
    archive = build_archive(tiny_model, vocab)
    archive["parameters"]["final_norm.weight"] = torch.zeros(3)
    path = save_checkpoint(tmp_path / "bad.pt", archive)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_vocab_size_mismatch(tmp_path, tiny_model, vocab):
    archive = build_archive(tiny_model, vocab)
    archive["vocab"] = archive["vocab"][:-1]
    with pytest.raises(CheckpointError):
        load_checkpoint(save_checkpoint(tmp_path / "bad.pt", archive))


class TestFileCheckpointSink:

    def test_step_and_final(self, tmp_path, tiny_model, vocab):
        sink = FileCheckpointSink(tmp_path)
        sink.save(3, build_archive(tiny_model, vocab, 3))
        path = sink.save(6, build_archive(tiny_model, vocab, 6), final=True)
        assert path.name == FINAL_CHECKPOINT
        assert {p.name for p in tmp_path.iterdir()} == {"step-000003.pt", "step-000006.pt", FINAL_CHECKPOINT}
        assert load_checkpoint(path).step == 6

    def test_retries_transient_failures(self, monkeypatch, tmp_path, tiny_model):
        calls = []
        original = sinks.save_checkpoint

        def flaky(path, archive):
            calls.append(path)
            if len(calls) < 3:
                raise OSError("disque plein")
            return original(path, archive)

        monkeypatch.setattr(sinks, "save_checkpoint", flaky)
        path = FileCheckpointSink(tmp_path, retries=3).save(1, build_archive(tiny_model))
        assert path.is_file()
        assert len(calls) == 3

    def test_persistent_failure(self, monkeypatch, tmp_path, tiny_model):
        def broken(path, archive):
            raise OSError("lecture seule")

        monkeypatch.setattr(sinks, "save_checkpoint", broken)
        with pytest.raises(CheckpointSinkError):
            FileCheckpointSink(tmp_path, retries=2).save(1, build_archive(tiny_model))
