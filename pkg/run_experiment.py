"""
Script that runs the whole pipeline in one output directory, then compares
the transferability of the selected images against single-surrogate PGD.
"""


import sys
from pathlib import Path
from typing import Callable, Dict

import numpy as np
from loguru import logger

from transfer_attack.attacks.baselines import fgsm_attack, pgd_attack
from transfer_attack.harness.commands import (
    SUMMARY_JSON,
    ExitCode,
    cmd_attack,
    cmd_evaluate,
    cmd_select,
    cmd_synth,
    cmd_train,
)
from transfer_attack.harness.config import ConfigError, RunConfig, load_config
from transfer_attack.harness.corpus import CorpusError, fake_image_ids
from transfer_attack.harness.reports import read_json
from transfer_attack.image import Image, load_image
from transfer_attack.models.classifier import Classifier
from transfer_attack.models.serialization import ModelFileError, load_model
from transfer_attack.models.training import TrainingDataError
from transfer_attack.selection import evaluate, misclassification_rate

# Budget for the baselines when the config does not fix one.
_BASELINE_EPSILON = 8.0 / 255.0

Baseline = Callable[[Image, Classifier, float], Image]

_FATAL_ERRORS = (
    ConfigError,
    CorpusError,
    ModelFileError,
    TrainingDataError,
    OSError,
)


def run_pipeline(config: RunConfig) -> ExitCode:
    """
    Runs every stage in order, stopping at the first fatal one.

    Args:
        config: The run configuration.

    Returns:
        The worst exit status of any stage.

    """
    worst = ExitCode.SUCCESS
    for stage in (cmd_synth, cmd_train, cmd_attack, cmd_select, cmd_evaluate):
        logger.info("Running {}...", stage.__name__)
        try:
            status = stage(config)
        except _FATAL_ERRORS as error:
            logger.error("{} failed: {}", stage.__name__, error)
            status = ExitCode.FATAL
        worst = max(worst, status)
        if status == ExitCode.FATAL:
            break
    return worst


def compare_baselines(config: RunConfig) -> Dict[str, Dict[str, float]]:
    """
    Attacks the first surrogate alone with FGSM and PGD, and measures how
    often the result fools each target.

    Args:
        config: The run configuration, after the pipeline has run.

    Returns:
        Misclassification rate per target, keyed by baseline name.

    """
    surrogate = load_model(
        config.surrogates[0].model_path(config.paths.models)
    )
    targets = [
        load_model(spec.model_path(config.paths.models))
        for spec in config.targets
    ]
    epsilon = config.attack.epsilon
    if epsilon is None:
        epsilon = _BASELINE_EPSILON
    alpha = config.attack.step_size(epsilon)

    baselines: Dict[str, Baseline] = {
        "fgsm": fgsm_attack,
        "pgd": lambda x, m, e: pgd_attack(
            x, m, e, alpha, config.attack.iterations
        ),
    }
    originals = [
        load_image(path) for _, path in fake_image_ids(config.paths.corpus)
    ]
    if not originals:
        return {}

    rates = {}
    for name, attack in baselines.items():
        adversarial = [attack(x, surrogate, epsilon) for x in originals]
        evals = evaluate(adversarial, targets, originals)
        rates[name] = {
            spec.name: misclassification_rate(evals, i)
            for i, spec in enumerate(config.targets)
        }
    return rates


def main() -> int:
    try:
        config = load_config(sys.argv[1] if len(sys.argv) > 1 else None)
    except (ConfigError, OSError) as error:
        logger.error("Cannot load the configuration: {}", error)
        return int(ExitCode.FATAL)

    status = run_pipeline(config)
    if status == ExitCode.FATAL:
        return int(status)

    summary = read_json(Path(config.paths.output) / SUMMARY_JSON)
    for view, aggregates in summary["ablation"].items():
        logger.info(
            "{}: rates {}, average SSIM {}, score {:.4f}",
            view,
            aggregates["misclassification_rate"],
            aggregates["average_ssim"],
            aggregates["score"],
        )
    for name, rates in compare_baselines(config).items():
        logger.info(
            "{} on one surrogate: rates {}, mean {:.1f}%",
            name,
            rates,
            float(np.mean(list(rates.values()))),
        )
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
