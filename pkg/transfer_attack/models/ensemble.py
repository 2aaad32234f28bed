"""
Weighted ensembles of surrogate classifiers.
"""


from typing import Optional, Sequence, Tuple

import numpy as np

from ..image import GradientField, Image
from .classifier import Classifier
from .losses import LossConfig, input_gradient


class EnsembleError(ValueError):
    """
    Raised for an empty ensemble or invalid ensemble weights.
    """


class SurrogateEnsemble:
    """
    An ordered, immutable set of classifiers with a probability vector of
    per-member gradient weights.
    """

    def __init__(
        self,
        members: Sequence[Classifier],
        weights: Optional[Sequence[float]] = None,
    ):
        """
        Args:
            members: The classifiers, in order.
            weights: Non-negative weights summing to 1. Uniform if not
                provided.

        """
        if len(members) == 0:
            raise EnsembleError("An ensemble needs at least one member.")

        if weights is None:
            weights = np.full(len(members), 1.0 / len(members))
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (len(members),):
            raise EnsembleError(
                f"Expected {len(members)} weights, got {weights.shape}."
            )
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > 1e-9:
            raise EnsembleError(
                f"Weights must be a probability vector, got {weights}."
            )
        weights.flags.writeable = False

        self.__members = tuple(members)
        self.__weights = weights

    @property
    def members(self) -> Tuple[Classifier, ...]:
        return self.__members

    @property
    def weights(self) -> np.ndarray:
        return self.__weights

    def __len__(self) -> int:
        return len(self.__members)

    def with_weights(self, weights: Sequence[float]) -> "SurrogateEnsemble":
        """
        Args:
            weights: The new weights.

        Returns:
            An ensemble with the same members and the new weights.

        """
        return SurrogateEnsemble(self.__members, weights)


def ensemble_gradient(
    ensemble: SurrogateEnsemble,
    x_orig: Image,
    x_adv: Image,
    cfg: LossConfig,
) -> GradientField:
    """
    Computes the weighted sum of every member's total-loss gradient. With
    uniform weights this is the plain ensemble mean.

    Args:
        ensemble: The surrogates.
        x_orig: The unperturbed image.
        x_adv: The perturbed image.
        cfg: The loss configuration.

    Returns:
        The combined gradient with respect to `x_adv`.

    """
    if len(ensemble) == 0:
        raise EnsembleError("Cannot take the gradient of an empty ensemble.")

    combined = np.zeros_like(x_adv, dtype=np.float64)
    for member, weight in zip(ensemble.members, ensemble.weights):
        combined += weight * input_gradient(member, x_orig, x_adv, cfg)
    return combined
