"""
Minibatch training for detectors.
"""


from typing import Tuple

import numpy as np
from loguru import logger
from pydantic import validator
from pydantic.dataclasses import dataclass
from scipy.special import log_softmax

from ..labels import Label
from .classifier import Architecture, Classifier
from .losses import softmax


class TrainingDataError(ValueError):
    """
    Raised when a dataset cannot be used for training.
    """


class _ArrayConfig:
    arbitrary_types_allowed = True


@dataclass(frozen=True, config=_ArrayConfig)
class LabeledImageSet:
    """
    A set of images with Fake/Real labels.

    Attributes:
        images: The `(N, H, W, 3)` images.
        labels: The `(N,)` integer labels.
        ids: An identifier for every image.

    """

    images: np.ndarray
    labels: np.ndarray
    ids: Tuple[str, ...]

    @validator("labels")
    def labels_match_images(
        cls, labels: np.ndarray, values: dict
    ) -> np.ndarray:
        assert labels.shape == (
            len(values["images"]),
        ), "Need exactly one label per image."
        return labels

    @validator("ids")
    def ids_match_images(
        cls, ids: Tuple[str, ...], values: dict
    ) -> Tuple[str, ...]:
        assert len(ids) == len(values["images"]), "Need one id per image."
        return ids

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices: np.ndarray) -> "LabeledImageSet":
        """
        Args:
            indices: The indices to keep.

        Returns:
            A dataset containing only those images.

        """
        return LabeledImageSet(
            images=self.images[indices],
            labels=self.labels[indices],
            ids=tuple(self.ids[i] for i in indices),
        )


@dataclass(frozen=True)
class TrainingHyperparameters:
    """
    Attributes:
        learning_rate: The SGD step size.
        epochs: Number of passes over the data.
        batch_size: Minibatch size.
        momentum: Heavy-ball momentum coefficient.
        seed: Seed for initialization and shuffling.

    """

    learning_rate: float = 0.05
    epochs: int = 40
    batch_size: int = 16
    momentum: float = 0.9
    seed: int = 0

    @validator("learning_rate")
    def learning_rate_is_positive(cls, learning_rate: float) -> float:
        assert learning_rate > 0.0, "Learning rate must be positive."
        return learning_rate

    @validator("epochs")
    def epochs_is_non_negative(cls, epochs: int) -> int:
        assert epochs >= 0, "Epochs must be non-negative."
        return epochs

    @validator("batch_size")
    def batch_size_is_positive(cls, batch_size: int) -> int:
        assert batch_size >= 1, "Batch size must be positive."
        return batch_size


def accuracy(model: Classifier, dataset: LabeledImageSet) -> float:
    """
    Args:
        model: The classifier.
        dataset: The labeled images.

    Returns:
        The fraction of images classified correctly.

    """
    if len(dataset) == 0:
        return 0.0
    predictions = np.argmax(model.forward(dataset.images), axis=1)
    return float(np.mean(predictions == dataset.labels))


def train_detector(
    dataset: LabeledImageSet,
    hyper: TrainingHyperparameters = TrainingHyperparameters(),
    architecture: Architecture = Architecture(),
) -> Classifier:
    """
    Trains a detector with minibatch SGD on the mean cross-entropy.

    Args:
        dataset: The training images. Must contain both classes.
        hyper: The training hyperparameters.
        architecture: The architecture to train.

    Returns:
        The trained classifier.

    """
    present = set(np.unique(dataset.labels).tolist())
    if present != {int(label) for label in Label}:
        raise TrainingDataError(
            f"Training needs both classes, got labels {sorted(present)}."
        )

    rng = np.random.default_rng(hyper.seed)
    model = Classifier.initialize(architecture, rng)
    parameters = {
        k: v.astype(np.float64) for k, v in model.parameters.items()
    }
    velocity = {k: np.zeros_like(v) for k, v in parameters.items()}
    one_hot = np.eye(len(Label))[dataset.labels]

    for epoch in range(hyper.epochs):
        order = rng.permutation(len(dataset))
        epoch_loss = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            targets = one_hot[batch]
            logits, _, grads = model.backward(
                dataset.images[batch],
                lambda logits: (softmax(logits) - targets) / len(targets),
            )

            epoch_loss -= float(
                np.sum(log_softmax(logits, axis=1) * targets)
            )
            for name, grad in grads.items():
                velocity[name] = hyper.momentum * velocity[name] - (
                    hyper.learning_rate * grad
                )
                parameters[name] = parameters[name] + velocity[name]
            model = Classifier(architecture, parameters)

        logger.debug(
            "Epoch {}: mean loss {:.4f}.", epoch, epoch_loss / len(dataset)
        )

    logger.info(
        "Trained detector (width {}, pool {}, seed {}) to training "
        "accuracy {:.3f}.",
        architecture.width,
        architecture.pool,
        hyper.seed,
        accuracy(model, dataset),
    )
    return model
