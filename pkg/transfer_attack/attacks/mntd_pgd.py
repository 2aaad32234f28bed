"""
The transferability stream: PGD with momentum, a Nesterov look-ahead,
translation-invariant gradient smoothing, input diversity, an SSIM-regularized
loss, and adaptive per-surrogate weighting.
"""


from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic.dataclasses import dataclass
from scipy.special import softmax

from ..image import GradientField, Image, check_same_shape
from ..imgmath import convolve_same, project_linf, sample_diversity
from ..labels import Label
from ..models.ensemble import SurrogateEnsemble, ensemble_gradient
from ..models.losses import LossConfig, ssim_loss_gradient
from ..models.losses import softmax as probabilities
from .candidate import AdversarialCandidate, Stream, make_candidate
from .config import (
    ApwSchedule,
    AttackConfig,
    PreprocessConfig,
    PreprocessPlacement,
)
from .preprocess import preprocess

IterateCallback = Callable[[Image], None]
"""
Called with every intermediate adversarial image.
"""


class _ArrayConfig:
    arbitrary_types_allowed = True


@dataclass(frozen=True, config=_ArrayConfig)
class MomentumState:
    """
    Attributes:
        g: The momentum-accumulated gradient.
        t: Number of steps taken so far.

    """

    g: GradientField
    t: int = 0

    @classmethod
    def zeros_like(cls, image: Image) -> "MomentumState":
        return cls(g=np.zeros_like(image, dtype=np.float64), t=0)


def apw_update(
    ensemble: SurrogateEnsemble, x_adv: Image, temperature: float
) -> np.ndarray:
    """
    Weights surrogates by how confidently they still detect the image as
    Fake, so that the ones hardest to fool contribute the most gradient.

    Args:
        ensemble: The surrogates.
        x_adv: The current adversarial image.
        temperature: Softmax temperature.

    Returns:
        The new weights, summing to 1.

    """
    fake_confidence = np.array(
        [
            probabilities(member.forward(x_adv))[Label.FAKE]
            for member in ensemble.members
        ]
    )
    return softmax(fake_confidence / temperature)


def _step_gradient(
    x_orig: Image,
    lookahead: Image,
    ensemble: SurrogateEnsemble,
    cfg: AttackConfig,
    loss_cfg: LossConfig,
    rng: np.random.Generator,
) -> GradientField:
    """
    Computes the total-loss gradient at the look-ahead point. The
    misclassification term is evaluated on a diversified copy of the
    look-ahead image and mapped back through the transform's adjoint; the
    SSIM term is always evaluated on the look-ahead image itself.
    """
    transform = sample_diversity(
        lookahead.shape,
        cfg.di_probability,
        cfg.di_scale_min,
        cfg.di_scale_max,
        rng,
    )
    if transform.is_identity:
        return ensemble_gradient(ensemble, x_orig, lookahead, loss_cfg)

    diversified = transform.apply(lookahead)
    misclassification_only = LossConfig(
        lambda_ssim=0.0,
        target_label=loss_cfg.target_label,
        ssim_window=loss_cfg.ssim_window,
    )
    gradient = transform.adjoint(
        ensemble_gradient(
            ensemble, diversified, diversified, misclassification_only
        )
    )
    if loss_cfg.lambda_ssim > 0.0:
        gradient = gradient + ssim_loss_gradient(x_orig, lookahead, loss_cfg)
    return gradient


def mntd_step(
    x_orig: Image,
    x_adv: Image,
    state: MomentumState,
    ensemble: SurrogateEnsemble,
    cfg: AttackConfig,
    epsilon: float,
    rng: np.random.Generator,
    *,
    alpha: Optional[float] = None,
) -> Tuple[Image, MomentumState]:
    """
    Takes one step of the momentum stream.

    Args:
        x_orig: The image being attacked, the center of the budget ball.
        x_adv: The current adversarial image.
        state: The momentum state after the previous step.
        ensemble: The weighted surrogates.
        cfg: The attack configuration.
        epsilon: The L-infinity budget.
        rng: The random source for input diversity.
        alpha: Overrides the configured step size.

    Returns:
        The next adversarial image and the updated momentum state.

    """
    check_same_shape(x_orig, x_adv)
    check_same_shape(x_adv, state.g)
    if alpha is None:
        alpha = cfg.step_size(epsilon)

    # Look ahead along the direction the previous momentum would move us.
    lookahead = project_linf(
        x_orig, x_adv - alpha * cfg.mu * np.sign(state.g), epsilon
    )
    gradient = _step_gradient(
        x_orig, lookahead, ensemble, cfg, cfg.loss_config(), rng
    )
    smoothed = convolve_same(gradient, cfg.ti_kernel())

    l1_norm = np.abs(smoothed).sum()
    if l1_norm > 0.0:
        smoothed = smoothed / l1_norm
    momentum = cfg.mu * state.g + smoothed

    # Descend the targeted loss.
    next_adv = project_linf(
        x_orig, x_adv + alpha * np.sign(-momentum), epsilon
    )
    return next_adv, MomentumState(g=momentum, t=state.t + 1)


def _start_point(
    x: Image,
    cfg: AttackConfig,
    epsilon: float,
    pre_cfg: PreprocessConfig,
    rng: np.random.Generator,
) -> Image:
    if cfg.preprocess_placement == PreprocessPlacement.AFTER:
        return x.copy()
    return project_linf(x, preprocess(x, pre_cfg, rng), epsilon)


def mntd_pgd_attack(
    x: Image,
    ensemble: SurrogateEnsemble,
    cfg: AttackConfig,
    epsilon: float,
    pre_cfg: PreprocessConfig = PreprocessConfig(),
    *,
    rng: Optional[np.random.Generator] = None,
    on_iterate: Optional[IterateCallback] = None,
) -> AdversarialCandidate:
    """
    Runs the momentum stream on one image.

    Args:
        x: The image to attack.
        ensemble: The surrogates. Their weights are the starting point for
            adaptive weighting.
        cfg: The attack configuration.
        epsilon: The L-infinity budget.
        pre_cfg: The preprocessing configuration.
        rng: The random source. Seeded from `cfg.seed` if not provided.
        on_iterate: Called with every intermediate adversarial image.

    Returns:
        The adversarial candidate.

    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    x_adv = _start_point(x, cfg, epsilon, pre_cfg, rng)
    if on_iterate is not None:
        on_iterate(x_adv)
    state = MomentumState.zeros_like(x)

    if cfg.apw_schedule != ApwSchedule.OFF:
        ensemble = ensemble.with_weights(
            apw_update(ensemble, x_adv, cfg.apw_temperature)
        )

    refresh_weights = cfg.apw_schedule == ApwSchedule.EVERY_ITERATION
    for iteration in range(cfg.iterations):
        if iteration > 0 and refresh_weights:
            ensemble = ensemble.with_weights(
                apw_update(ensemble, x_adv, cfg.apw_temperature)
            )
        logger.debug(
            "MNTD-PGD iteration {}, surrogate weights {}.",
            iteration,
            ensemble.weights,
        )

        x_adv, state = mntd_step(
            x, x_adv, state, ensemble, cfg, epsilon, rng
        )
        if on_iterate is not None:
            on_iterate(x_adv)

    if cfg.preprocess_placement != PreprocessPlacement.BEFORE:
        x_adv = project_linf(x, preprocess(x_adv, pre_cfg, rng), epsilon)
        if on_iterate is not None:
            on_iterate(x_adv)

    return make_candidate(
        x, x_adv, epsilon, Stream.MNTD_PGD, ensemble, cfg.ssim_window
    )
