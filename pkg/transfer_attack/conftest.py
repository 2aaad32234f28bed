"""
Fixtures shared by every test package.
"""


from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from transfer_attack.attacks.config import AttackConfig
from transfer_attack.harness.config import (
    DetectorSpec,
    PathsConfig,
    RunConfig,
    SynthConfig,
    TrainingConfig,
)
from transfer_attack.image import Image
from transfer_attack.models.classifier import Architecture, Classifier

ImageFactory = Callable[..., Image]
ModelFactory = Callable[..., Classifier]


@pytest.fixture
def make_image() -> ImageFactory:
    """
    Returns:
        A function that makes a random image from a seed.

    """

    def _make(seed: int = 0, size: int = 16) -> Image:
        rng = np.random.default_rng(seed)
        return rng.uniform(0.1, 0.9, size=(size, size, 3))

    return _make


@pytest.fixture
def make_model() -> ModelFactory:
    """
    Returns:
        A function that makes a randomly-initialized classifier from a seed.

    """

    def _make(seed: int = 0, width: int = 4, pool: int = 2) -> Classifier:
        rng = np.random.default_rng(seed)
        return Classifier.initialize(Architecture(width=width, pool=pool), rng)

    return _make


@pytest.fixture
def small_config(tmp_path: Path) -> RunConfig:
    """
    Args:
        tmp_path: Temporary directory for every pipeline path.

    Returns:
        A configuration small enough to run the whole pipeline quickly.

    """
    return RunConfig(
        paths=PathsConfig(
            corpus=tmp_path / "corpus",
            models=tmp_path / "models",
            output=tmp_path / "output",
        ),
        synth=SynthConfig(n_real=12, n_fake=8, size=16),
        training=TrainingConfig(epochs=30, batch_size=4),
        surrogates=[
            DetectorSpec(name="surrogate_a", width=4, pool=2, seed=1),
            DetectorSpec(name="surrogate_b", width=3, pool=4, seed=2),
        ],
        targets=[DetectorSpec(name="target_a", width=5, pool=2, seed=101)],
        attack=AttackConfig(iterations=3, bisection_steps=1),
        seed=3,
    )
