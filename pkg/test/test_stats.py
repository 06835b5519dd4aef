import pytest

from app.core.exceptions import EmptyDatasetError
from app.dataset.stats import dataset_stats, ocr_answer_pool
from app.dataset.synthetic import generate_synthetic_dataset
from app.models.sample import GeneratorConfig


def test_all_images_with_text():
    samples = generate_synthetic_dataset(0, 100, GeneratorConfig(d_feat=4))
    stats = dataset_stats(samples)
    assert stats.frac_images_with_text == 1.0
    assert "images_with_text: 100.0%" in stats.report_lines()


def test_answer_in_ocr(make_sample):
    sample = make_sample(question="what is written", answers=["stop"] * 10)
    stats = dataset_stats([sample])
    assert stats.frac_answer_in_ocr == 1.0
    assert stats.n_answer_in_ocr == 1


def test_multi_word_answer_in_ocr(make_sample, make_region):
    sample = make_sample(
        scene_tokens=[
            make_region("cola", [0.5, 0.1, 0.6, 0.2]),
            make_region("coca", [0.1, 0.1, 0.2, 0.2]),
        ],
        answers=["coca cola"] * 10,
    )
    assert "coca cola" in ocr_answer_pool(sample)
    assert dataset_stats([sample]).frac_answer_in_ocr == 1.0


def test_spatial_word_fraction(make_sample):
    sample = make_sample(question="what is on the left shelf", answers=["books"] * 10)
    stats = dataset_stats([sample])
    assert stats.frac_spatial_words == 1.0
    assert stats.frac_answer_in_ocr == 0.0


def test_custom_spatial_words(make_sample):
    sample = make_sample(question="what is on the left shelf")
    assert dataset_stats([sample], spatial_words=["shelf"]).frac_spatial_words == 1.0
    assert dataset_stats([sample], spatial_words=["under"]).frac_spatial_words == 0.0


def test_no_questions(make_sample):
    stats = dataset_stats([make_sample(question=None)])
    assert stats.n_questions == 0
    assert stats.frac_answer_in_ocr == 0.0
    assert stats.frac_spatial_words == 0.0


def test_fractions_bounded(samples):
    stats = dataset_stats(samples)
    for value in (stats.frac_images_with_text, stats.frac_answer_in_ocr, stats.frac_spatial_words):
        assert 0.0 <= value <= 1.0
    assert stats.n_questions <= stats.n_images


def test_empty():
    with pytest.raises(EmptyDatasetError):
        dataset_stats([])
