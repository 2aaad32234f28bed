"""
Adversarial candidates produced by the attack streams.
"""


import enum
from typing import Tuple

import numpy as np
from pydantic import validator
from pydantic.dataclasses import dataclass

from ..image import GradientField, Image
from ..imgmath import ssim
from ..labels import Label
from ..models.ensemble import SurrogateEnsemble


@enum.unique
class Stream(str, enum.Enum):
    """
    The attack stream that produced a candidate.
    """

    MNTD_PGD = "MNTD-PGD"
    SG_PGD = "SG-PGD"

    @property
    def slug(self) -> str:
        """
        Returns:
            A lowercase, filename-safe version of the tag.

        """
        return self.value.lower().replace("-", "_")


class _ArrayConfig:
    arbitrary_types_allowed = True


@dataclass(frozen=True, config=_ArrayConfig)
class AdversarialCandidate:
    """
    An adversarial image and how it was made.

    Attributes:
        image: The adversarial image.
        delta: The perturbation, `image - x`.
        epsilon_used: The L-infinity budget the attack ran with.
        stream: The stream that produced it.
        ssim_to_original: SSIM between `image` and the original `x`.
        surrogate_fooled: For every surrogate, whether it predicts Real.

    """

    image: Image
    delta: GradientField
    epsilon_used: float
    stream: Stream
    ssim_to_original: float
    surrogate_fooled: Tuple[bool, ...]

    @validator("delta")
    def delta_matches_image(
        cls, delta: GradientField, values: dict
    ) -> GradientField:
        assert delta.shape == values["image"].shape, "Delta shape mismatch."
        return delta

    @validator("epsilon_used")
    def budget_is_respected(cls, epsilon: float, values: dict) -> float:
        assert (
            np.abs(values["delta"]).max() <= epsilon + 1e-12
        ), "Perturbation exceeds its budget."
        return epsilon

    @property
    def all_surrogates_fooled(self) -> bool:
        return all(self.surrogate_fooled)

    @property
    def original(self) -> Image:
        """
        Returns:
            The image this candidate was derived from.

        """
        return self.image - self.delta


def fooled_bits(
    ensemble: SurrogateEnsemble, image: Image
) -> Tuple[bool, ...]:
    """
    Args:
        ensemble: The classifiers to check.
        image: The image to classify.

    Returns:
        For every member, whether it classifies the image as Real.

    """
    return tuple(
        bool(np.argmax(member.forward(image)) == Label.REAL)
        for member in ensemble.members
    )


def make_candidate(
    x: Image,
    adversarial: Image,
    epsilon: float,
    stream: Stream,
    ensemble: SurrogateEnsemble,
    ssim_window: int,
) -> AdversarialCandidate:
    """
    Packages an adversarial image along with its metadata.

    Args:
        x: The original image.
        adversarial: The adversarial image.
        epsilon: The budget it was made with.
        stream: The stream that made it.
        ensemble: The surrogates to record fooled bits for.
        ssim_window: The SSIM window.

    Returns:
        The candidate.

    """
    return AdversarialCandidate(
        image=adversarial,
        delta=adversarial - x,
        epsilon_used=epsilon,
        stream=stream,
        ssim_to_original=ssim(x, adversarial, ssim_window),
        surrogate_fooled=fooled_bits(ensemble, adversarial),
    )
