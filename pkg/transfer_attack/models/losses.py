"""
Attack losses, their input gradients, and saliency maps.
"""


import numpy as np
from pydantic import validator
from pydantic.dataclasses import dataclass
from scipy.special import log_softmax
from scipy.special import softmax as _softmax

from ..image import GradientField, Image, check_same_shape
from ..imgmath import DEFAULT_SSIM_WINDOW, ssim, ssim_gradient
from ..labels import Label
from .classifier import Classifier

SaliencyMask = np.ndarray
"""
A non-negative array shaped like an image, normalized to a maximum of 1.
"""


@dataclass(frozen=True)
class LossConfig:
    """
    Configures the total attack loss.

    Attributes:
        lambda_ssim: Weight of the `1 - SSIM` regularizer.
        target_label: The class the attack pushes towards.
        ssim_window: Window size for the SSIM term.

    """

    lambda_ssim: float = 0.3
    target_label: Label = Label.REAL
    ssim_window: int = DEFAULT_SSIM_WINDOW

    @validator("lambda_ssim")
    def lambda_is_non_negative(cls, lambda_ssim: float) -> float:
        assert lambda_ssim >= 0.0, "lambda_ssim must be non-negative."
        return lambda_ssim

    @validator("ssim_window")
    def window_is_odd(cls, window: int) -> int:
        assert window >= 1 and window % 2 == 1, "SSIM window must be odd."
        return window


def softmax(logits: np.ndarray) -> np.ndarray:
    """
    Args:
        logits: Logits along the last axis.

    Returns:
        The corresponding probabilities.

    """
    return _softmax(logits, axis=-1)


def loss_misclassification(
    model: Classifier, x: Image, target: Label = Label.REAL
) -> float:
    """
    Computes the cross-entropy of the model's prediction against the attack
    target, so that decreasing it pushes the model towards `target`.

    Args:
        model: The classifier.
        x: The image.
        target: The class the attack wants.

    Returns:
        The loss.

    """
    logits = model.forward(x)
    return float(-log_softmax(logits)[int(target)])


def total_loss(
    model: Classifier, x_orig: Image, x_adv: Image, cfg: LossConfig
) -> float:
    """
    Computes the misclassification loss plus the weighted SSIM penalty.

    Args:
        model: The classifier.
        x_orig: The unperturbed image.
        x_adv: The perturbed image.
        cfg: The loss configuration.

    Returns:
        The total loss.

    """
    check_same_shape(x_orig, x_adv)
    loss = loss_misclassification(model, x_adv, cfg.target_label)
    if cfg.lambda_ssim > 0.0:
        loss += cfg.lambda_ssim * (
            1.0 - ssim(x_orig, x_adv, cfg.ssim_window)
        )
    return loss


def misclassification_gradient(
    model: Classifier, x: Image, target: Label = Label.REAL
) -> GradientField:
    """
    Args:
        model: The classifier.
        x: The image.
        target: The class the attack wants.

    Returns:
        The gradient of `loss_misclassification` with respect to `x`.

    """
    one_hot = np.eye(len(Label))[int(target)]
    _, d_input, _ = model.backward(
        x, lambda logits: softmax(logits) - one_hot
    )
    return d_input


def ssim_loss_gradient(
    x_orig: Image, x_adv: Image, cfg: LossConfig
) -> GradientField:
    """
    Args:
        x_orig: The unperturbed image.
        x_adv: The perturbed image.
        cfg: The loss configuration.

    Returns:
        The gradient of `lambda * (1 - SSIM(x_orig, x_adv))` with respect
        to `x_adv`.

    """
    return -cfg.lambda_ssim * ssim_gradient(x_orig, x_adv, cfg.ssim_window)


def input_gradient(
    model: Classifier, x_orig: Image, x_adv: Image, cfg: LossConfig
) -> GradientField:
    """
    Computes the exact gradient of `total_loss` with respect to `x_adv`.

    Args:
        model: The classifier.
        x_orig: The unperturbed image.
        x_adv: The perturbed image.
        cfg: The loss configuration.

    Returns:
        The gradient.

    """
    check_same_shape(x_orig, x_adv)
    gradient = misclassification_gradient(model, x_adv, cfg.target_label)
    if cfg.lambda_ssim > 0.0:
        gradient = gradient + ssim_loss_gradient(x_orig, x_adv, cfg)
    return gradient


def saliency_map(
    model: Classifier, x: Image, target: Label = Label.REAL
) -> SaliencyMask:
    """
    Computes the absolute misclassification gradient, scaled so that its
    largest entry is 1.

    Args:
        model: The classifier.
        x: The image.
        target: The class the attack wants.

    Returns:
        The mask. It is all zeros if the gradient is identically zero.

    """
    magnitude = np.abs(misclassification_gradient(model, x, target))
    peak = magnitude.max()
    if peak == 0.0:
        return np.zeros_like(magnitude)
    return magnitude / peak
