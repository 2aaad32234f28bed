"""
Runs both attack streams on a single image.
"""


from typing import Optional, Tuple

import numpy as np
from loguru import logger

from ..image import Image, validate_image
from ..models.ensemble import EnsembleError, SurrogateEnsemble
from .candidate import AdversarialCandidate
from .config import AttackConfig, PreprocessConfig
from .epsilon_search import epsilon_search
from .mntd_pgd import apw_update, mntd_pgd_attack
from .sg_pgd import sg_pgd_attack


def _choose_sg_surrogate(
    ensemble: SurrogateEnsemble,
    cfg: AttackConfig,
    momentum_candidate: AdversarialCandidate,
) -> int:
    """
    Picks the surrogate for the saliency-guided stream. Without an explicit
    index this is the surrogate APW would weight most heavily on the
    momentum stream's output, ties going to the lowest index.
    """
    if cfg.sg_surrogate_index is not None:
        if cfg.sg_surrogate_index >= len(ensemble):
            raise EnsembleError(
                f"SG-PGD surrogate index {cfg.sg_surrogate_index} is out of "
                f"range for {len(ensemble)} surrogates."
            )
        return cfg.sg_surrogate_index

    weights = apw_update(
        ensemble, momentum_candidate.image, cfg.apw_temperature
    )
    return int(np.argmax(weights))


def run_dual_stream(
    x: Image,
    ensemble: SurrogateEnsemble,
    cfg: AttackConfig,
    pre_cfg: PreprocessConfig = PreprocessConfig(),
    *,
    seed: Optional[int] = None,
) -> Tuple[AdversarialCandidate, AdversarialCandidate]:
    """
    Produces the momentum-stream and saliency-guided candidates for one
    image. If the configuration has no fixed budget, the momentum stream's
    budget is searched for, and the saliency-guided stream reuses it.

    Args:
        x: The image to attack.
        ensemble: The surrogates.
        cfg: The attack configuration.
        pre_cfg: The preprocessing configuration.
        seed: Seed for this image's random source. Defaults to `cfg.seed`.

    Returns:
        The MNTD-PGD candidate and the SG-PGD candidate.

    """
    validate_image(x)
    if seed is None:
        seed = cfg.seed

    def attack(epsilon: float) -> AdversarialCandidate:
        # Every attempt sees the same random stream.
        return mntd_pgd_attack(
            x,
            ensemble,
            cfg,
            epsilon,
            pre_cfg,
            rng=np.random.default_rng(seed),
        )

    if cfg.epsilon is not None:
        momentum_candidate = attack(cfg.epsilon)
    else:
        result = epsilon_search(
            x,
            attack,
            lambda candidate: candidate.all_surrogates_fooled,
            cfg.epsilon_grid,
            cfg.bisection_steps,
            variance_reference=cfg.variance_reference,
            scale_min=cfg.grid_scale_min,
            scale_max=cfg.grid_scale_max,
        )
        momentum_candidate = result.best
        logger.debug("Epsilon attempts: {}", result.trace)

    surrogate = _choose_sg_surrogate(ensemble, cfg, momentum_candidate)
    logger.debug("SG-PGD attacks surrogate {}.", surrogate)
    saliency_candidate = sg_pgd_attack(
        x,
        ensemble.members[surrogate],
        cfg,
        momentum_candidate.epsilon_used,
        record=ensemble,
    )
    return momentum_candidate, saliency_candidate
