"""
Tests for the procedural corpus.
"""


from pathlib import Path

import numpy as np
import pytest

from transfer_attack.harness.corpus import (
    CorpusError,
    fake_image_ids,
    load_corpus,
    synthesize_corpus,
    write_corpus,
)
from transfer_attack.image import save_image
from transfer_attack.labels import Label
from transfer_attack.models.classifier import Architecture
from transfer_attack.models.training import (
    TrainingHyperparameters,
    accuracy,
    train_detector,
)


class TestSynthesizeCorpus:
    """
    Tests for `synthesize_corpus`.
    """

    def test_layout(self) -> None:
        """
        Tests counts, ids, labels and pixel range.
        """
        # Act.
        corpus = synthesize_corpus(3, 2, 16, seed=0)

        # Assert.
        assert corpus.images.shape == (5, 16, 16, 3)
        assert corpus.ids == (
            "real_0000",
            "real_0001",
            "real_0002",
            "fake_0000",
            "fake_0001",
        )
        np.testing.assert_array_equal(
            corpus.labels, [Label.REAL] * 3 + [Label.FAKE] * 2
        )
        assert corpus.images.min() >= 0.0 and corpus.images.max() <= 1.0

    def test_deterministic(self) -> None:
        """
        Tests that the same seed gives a bit-identical corpus.
        """
        first = synthesize_corpus(4, 4, 16, seed=7)
        second = synthesize_corpus(4, 4, 16, seed=7)
        np.testing.assert_array_equal(first.images, second.images)

    @pytest.mark.parametrize(
        ("n_real", "n_fake", "size"), [(0, 1, 16), (1, 0, 16), (1, 1, 15)]
    )
    def test_invalid(self, n_real: int, n_fake: int, size: int) -> None:
        """
        Tests that invalid settings are rejected.

        Args:
            n_real: Number of real images.
            n_fake: Number of fake images.
            size: Image size.

        """
        with pytest.raises(CorpusError):
            synthesize_corpus(n_real, n_fake, size, seed=0)

    @pytest.mark.slow
    def test_separable(self) -> None:
        """
        Tests that a trained detector separates a held-out split.
        """
        # Arrange.
        train = synthesize_corpus(48, 48, 32, seed=0)
        held_out = synthesize_corpus(24, 24, 32, seed=1)
        hyper = TrainingHyperparameters(seed=1)

        # Act.
        model = train_detector(train, hyper, Architecture(width=8, pool=2))

        # Assert.
        assert accuracy(model, held_out) >= 0.99


class TestCorpusFiles:
    """
    Tests for writing and loading corpora.
    """

    def test_round_trip(self, tmp_path: Path) -> None:
        """
        Tests that a written corpus reloads within quantization error.

        Args:
            tmp_path: Temporary directory.

        """
        # Arrange.
        corpus = synthesize_corpus(2, 3, 16, seed=0)

        # Act.
        write_corpus(corpus, tmp_path)
        loaded = load_corpus(tmp_path)

        # Assert.
        assert loaded.ids == corpus.ids
        np.testing.assert_array_equal(loaded.labels, corpus.labels)
        error = np.abs(loaded.images - corpus.images).max()
        assert error <= 0.5 / 255.0 + 1e-12
        assert [i for i, _ in fake_image_ids(tmp_path)] == [
            "fake_0000",
            "fake_0001",
            "fake_0002",
        ]

    def test_empty(self, tmp_path: Path) -> None:
        """
        Tests that an empty directory is rejected.

        Args:
            tmp_path: Temporary directory.

        """
        with pytest.raises(CorpusError, match="synth"):
            load_corpus(tmp_path)

    def test_mixed_shapes(self, tmp_path: Path) -> None:
        """
        Tests that images of different sizes are rejected.

        Args:
            tmp_path: Temporary directory.

        """
        # Arrange.
        for label, size in (("real", 16), ("fake", 20)):
            (tmp_path / label).mkdir()
            save_image(np.zeros((size, size, 3)), tmp_path / label / "a.png")

        # Act & assert.
        with pytest.raises(CorpusError, match="shape"):
            load_corpus(tmp_path)
