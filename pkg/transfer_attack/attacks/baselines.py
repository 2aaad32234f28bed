"""
Plain single-surrogate attacks, used as reference points.
"""


import numpy as np

from ..image import Image
from ..imgmath import project_linf
from ..labels import Label
from ..models.classifier import Classifier
from ..models.losses import misclassification_gradient


def fgsm_attack(x: Image, model: Classifier, epsilon: float) -> Image:
    """
    A single targeted signed-gradient step of size `epsilon`.

    Args:
        x: The image to attack.
        model: The surrogate.
        epsilon: The L-infinity budget.

    Returns:
        The adversarial image.

    """
    gradient = misclassification_gradient(model, x, Label.REAL)
    return project_linf(x, x - epsilon * np.sign(gradient), epsilon)


def pgd_attack(
    x: Image,
    model: Classifier,
    epsilon: float,
    alpha: float,
    iterations: int,
) -> Image:
    """
    Targeted projected gradient descent towards the Real class.

    Args:
        x: The image to attack.
        model: The surrogate.
        epsilon: The L-infinity budget.
        alpha: Step size.
        iterations: Number of steps.

    Returns:
        The adversarial image.

    """
    x_adv = x.copy()
    for _ in range(iterations):
        gradient = misclassification_gradient(model, x_adv, Label.REAL)
        x_adv = project_linf(x, x_adv - alpha * np.sign(gradient), epsilon)
    return x_adv
