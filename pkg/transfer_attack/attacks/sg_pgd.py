"""
The imperceptibility stream: PGD whose per-pixel steps are gated by a static
saliency mask.
"""


from typing import Optional

import numpy as np
from loguru import logger

from ..image import Image, check_same_shape
from ..imgmath import project_linf
from ..labels import Label
from ..models.classifier import Classifier
from ..models.ensemble import SurrogateEnsemble
from ..models.losses import (
    SaliencyMask,
    misclassification_gradient,
    saliency_map,
)
from .candidate import AdversarialCandidate, Stream, make_candidate
from .config import AttackConfig
from .mntd_pgd import IterateCallback


def sg_pgd_attack(
    x: Image,
    model: Classifier,
    cfg: AttackConfig,
    epsilon: float,
    *,
    mask: Optional[SaliencyMask] = None,
    record: Optional[SurrogateEnsemble] = None,
    on_iterate: Optional[IterateCallback] = None,
) -> AdversarialCandidate:
    """
    Runs the saliency-guided stream on one image.

    Args:
        x: The image to attack.
        model: The surrogate to attack.
        cfg: The attack configuration.
        epsilon: The L-infinity budget.
        mask: Overrides the saliency mask computed from `x`.
        record: Surrogates whose fooled bits the candidate records. Just
            `model` if not provided.
        on_iterate: Called with every intermediate adversarial image.

    Returns:
        The adversarial candidate.

    """
    if mask is None:
        mask = saliency_map(model, x, Label.REAL)
    check_same_shape(x, mask)
    alpha = cfg.step_size(epsilon)
    logger.debug(
        "SG-PGD mask covers {:.1%} of pixels.", float(np.mean(mask > 0.0))
    )

    x_adv = x.copy()
    if on_iterate is not None:
        on_iterate(x_adv)
    for _ in range(cfg.iterations):
        gradient = misclassification_gradient(model, x_adv, Label.REAL)
        x_adv = project_linf(
            x, x_adv + alpha * np.sign(-gradient) * mask, epsilon
        )
        if on_iterate is not None:
            on_iterate(x_adv)

    if record is None:
        record = SurrogateEnsemble([model])
    return make_candidate(
        x, x_adv, epsilon, Stream.SG_PGD, record, cfg.ssim_window
    )
