"""
The pipeline stages: synth, train, attack, select and evaluate.
"""


import enum
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from ..attacks.candidate import AdversarialCandidate, Stream
from ..attacks.dual_stream import run_dual_stream
from ..image import Image, load_image, save_image
from ..imgmath import ssim
from ..models.classifier import Classifier
from ..models.ensemble import SurrogateEnsemble
from ..models.serialization import load_model, save_model
from ..models.training import LabeledImageSet, accuracy, train_detector
from ..selection import evaluate, select_with_scores
from .config import DetectorSpec, RunConfig, require_paths
from .corpus import (
    fake_image_ids,
    load_corpus,
    synthesize_corpus,
    write_corpus,
)
from .reports import (
    ExperimentReport,
    fooled_column,
    read_json,
    selection_summary,
    write_ablation_csv,
    write_json,
)

TRAINING_SUMMARY = "training_summary.json"
SELECTION_REPORT = "selection_report.json"
REPORT_CSV = "report.csv"
ABLATION_CSV = "ablation.csv"
SUMMARY_JSON = "summary.json"

CLEAN_VIEW = "clean"
SELECTED_VIEW = "selected"


@enum.unique
class ExitCode(enum.IntEnum):
    """
    Process exit statuses.
    """

    SUCCESS = 0
    FATAL = 1
    PARTIAL = 2


def image_seed(global_seed: int, index: int) -> int:
    """
    Args:
        global_seed: The run's seed.
        index: The image's position in the sorted input list.

    Returns:
        The seed for that image's random source, independent of how work is
        scheduled.

    """
    sequence = np.random.SeedSequence([global_seed, index])
    return int(sequence.generate_state(1)[0])


def _load_detectors(
    specs: Sequence[DetectorSpec], models_dir: Path
) -> List[Classifier]:
    paths = [spec.model_path(models_dir) for spec in specs]
    require_paths(paths, "model file")
    return [load_model(path) for path in paths]


def _fake_inputs(config: RunConfig) -> List[Tuple[str, Path]]:
    require_paths([config.paths.corpus], "corpus directory")
    inputs = fake_image_ids(config.paths.corpus)
    if not inputs:
        logger.warning("No fake images in {}.", config.paths.corpus)
    return inputs


def _error_row(image_id: str, error: Exception) -> Dict[str, Any]:
    return dict(image_id=image_id, error=f"{type(error).__name__}: {error}")


def _parallel(config: RunConfig) -> Parallel:
    # Threads share the configured log sink with the caller.
    return Parallel(n_jobs=config.workers, prefer="threads")


def _exit_code(errors: Sequence[Any]) -> ExitCode:
    if errors:
        logger.warning("{} images failed.", len(errors))
        return ExitCode.PARTIAL
    return ExitCode.SUCCESS


def cmd_synth(config: RunConfig) -> ExitCode:
    """
    Writes the procedural corpus.
    """
    corpus = synthesize_corpus(
        config.synth.n_real,
        config.synth.n_fake,
        config.synth.size,
        config.seed,
    )
    write_corpus(corpus, config.paths.corpus)
    return ExitCode.SUCCESS


def _train_one(
    spec: DetectorSpec, config: RunConfig, corpus: LabeledImageSet
) -> Classifier:
    logger.info("Training detector {}.", spec.name)
    return train_detector(
        corpus,
        config.training.hyperparameters(spec.seed),
        spec.architecture,
    )


def cmd_train(config: RunConfig) -> ExitCode:
    """
    Trains every surrogate and target, and writes their model files along
    with a summary of their accuracy on the corpus.
    """
    require_paths([config.paths.corpus], "corpus directory")
    corpus = load_corpus(config.paths.corpus)

    models = _parallel(config)(
        delayed(_train_one)(spec, config, corpus)
        for spec in config.detectors
    )

    config.paths.models.mkdir(parents=True, exist_ok=True)
    surrogate_names = {spec.name for spec in config.surrogates}
    summary = {}
    for spec, model in zip(config.detectors, models):
        save_model(model, spec.model_path(config.paths.models))
        summary[spec.name] = dict(
            role="surrogate" if spec.name in surrogate_names else "target",
            width=spec.width,
            pool=spec.pool,
            seed=spec.seed,
            accuracy=accuracy(model, corpus),
        )
        logger.info(
            "{} accuracy: {:.3f}.", spec.name, summary[spec.name]["accuracy"]
        )

    write_json(summary, config.paths.models / TRAINING_SUMMARY)
    return ExitCode.SUCCESS


def _candidate_record(
    image_id: str, candidate: AdversarialCandidate
) -> Dict[str, Any]:
    return dict(
        stream=candidate.stream.value,
        file=f"{image_id}.{candidate.stream.slug}.png",
        epsilon=candidate.epsilon_used,
        ssim=candidate.ssim_to_original,
        surrogate_fooled=list(candidate.surrogate_fooled),
    )


def _attack_one(
    image_id: str,
    path: Path,
    index: int,
    surrogates: Sequence[Classifier],
    config: RunConfig,
) -> Optional[str]:
    """
    Attacks one image and writes both candidates.

    Returns:
        An error message, or None on success.

    """
    try:
        x = load_image(path)
    except (OSError, ValueError) as error:
        logger.warning("Skipping unreadable image {}: {}", path, error)
        return str(error)

    seed = image_seed(config.seed, index)
    candidates = run_dual_stream(
        x,
        SurrogateEnsemble(surrogates),
        config.attack,
        config.preprocess,
        seed=seed,
    )

    out_dir = config.paths.candidates
    metadata = dict(image_id=image_id, seed=seed, candidates={})
    for candidate in candidates:
        record = _candidate_record(image_id, candidate)
        save_image(candidate.image, out_dir / record["file"])
        metadata["candidates"][candidate.stream.slug] = record
    write_json(metadata, out_dir / f"{image_id}.json")

    logger.info(
        "Attacked {} at epsilon {:.5f}.", image_id, candidates[0].epsilon_used
    )
    return None


def cmd_attack(config: RunConfig) -> ExitCode:
    """
    Runs both attack streams on every fake image.
    """
    inputs = _fake_inputs(config)
    surrogates = _load_detectors(config.surrogates, config.paths.models)
    config.paths.candidates.mkdir(parents=True, exist_ok=True)

    results = _parallel(config)(
        delayed(_attack_one)(image_id, path, index, surrogates, config)
        for index, (image_id, path) in enumerate(inputs)
    )
    errors = [error for error in results if error is not None]
    return _exit_code(errors)


def _reload_candidate(
    x: Image,
    record: Dict[str, Any],
    candidates_dir: Path,
    ssim_window: int,
) -> AdversarialCandidate:
    image = load_image(candidates_dir / record["file"])
    delta = image - x
    return AdversarialCandidate(
        image=image,
        delta=delta,
        # Quantization can move a pixel half a level past the budget.
        epsilon_used=max(record["epsilon"], float(np.abs(delta).max())),
        stream=Stream(record["stream"]),
        ssim_to_original=ssim(x, image, ssim_window),
        surrogate_fooled=tuple(record["surrogate_fooled"]),
    )


def _select_one(
    image_id: str,
    path: Path,
    targets: Sequence[Classifier],
    config: RunConfig,
) -> Dict[str, Any]:
    """
    Selects the final image for one input.

    Returns:
        The selection row, or a row with an `error` key.

    """
    candidates_dir = config.paths.candidates
    window = config.attack.ssim_window
    try:
        x = load_image(path)
        metadata = read_json(candidates_dir / f"{image_id}.json")
        records = metadata["candidates"]
        cand_m = _reload_candidate(
            x, records[Stream.MNTD_PGD.slug], candidates_dir, window
        )
        cand_s = _reload_candidate(
            x, records[Stream.SG_PGD.slug], candidates_dir, window
        )
    except (OSError, KeyError, ValueError) as error:
        logger.warning("Cannot select for {}: {}", image_id, error)
        return _error_row(image_id, error)

    selected, score_m, score_s = select_with_scores(
        cand_m, cand_s, targets, x, window
    )
    record = records[selected.stream.slug]
    row = dict(
        image_id=image_id,
        stream=selected.stream.value,
        epsilon=record["epsilon"],
        ssim=selected.ssim_to_original,
        score_mntd_pgd=score_m,
        score_sg_pgd=score_s,
        score_selected=max(score_m, score_s),
    )
    save_image(selected.image, config.paths.final / f"{image_id}.png")
    write_json(row, config.paths.final / f"{image_id}.json")
    return row


def cmd_select(config: RunConfig) -> ExitCode:
    """
    Picks the better candidate for every image using the held-out targets.
    """
    inputs = _fake_inputs(config)
    require_paths([config.paths.candidates], "candidates directory")
    targets = _load_detectors(config.targets, config.paths.models)
    config.paths.final.mkdir(parents=True, exist_ok=True)

    results = _parallel(config)(
        delayed(_select_one)(image_id, path, targets, config)
        for image_id, path in inputs
    )
    rows = [row for row in results if "error" not in row]
    errors = [row for row in results if "error" in row]

    report = selection_summary(rows)
    report.update(rows=rows, errors=errors)
    write_json(report, config.paths.output / SELECTION_REPORT)
    logger.info("Selected-set score: {:.4f}.", report["scores"]["selected"])
    return _exit_code(errors)


def _view_row(
    image_id: str,
    stream: str,
    epsilon: float,
    x: Image,
    image: Image,
    targets: Sequence[Classifier],
    target_names: Sequence[str],
    ssim_window: int,
) -> Dict[str, Any]:
    (evaluation,) = evaluate([image], targets, [x], ssim_window)
    row = dict(image_id=image_id, stream=stream, epsilon=epsilon)
    row["ssim"] = evaluation.ssim
    for name, fooled in zip(target_names, evaluation.fooled):
        row[fooled_column(name)] = fooled
    return row


def _evaluate_one(
    image_id: str,
    path: Path,
    targets: Sequence[Classifier],
    config: RunConfig,
) -> Dict[str, Any]:
    """
    Evaluates the final image and each stream's candidate for one input.

    Returns:
        A row per view, or an `error` key.

    """
    names = [spec.name for spec in config.targets]
    window = config.attack.ssim_window
    try:
        x = load_image(path)
        final = read_json(config.paths.final / f"{image_id}.json")
        selected = load_image(config.paths.final / f"{image_id}.png")
        records = read_json(config.paths.candidates / f"{image_id}.json")[
            "candidates"
        ]
        streams = {
            stream.slug: load_image(
                config.paths.candidates / records[stream.slug]["file"]
            )
            for stream in Stream
        }
    except (OSError, KeyError, ValueError) as error:
        logger.warning("Cannot evaluate {}: {}", image_id, error)
        return _error_row(image_id, error)

    views = {
        CLEAN_VIEW: _view_row(
            image_id, "none", 0.0, x, x, targets, names, window
        )
    }
    for stream in Stream:
        views[stream.slug] = _view_row(
            image_id,
            stream.value,
            records[stream.slug]["epsilon"],
            x,
            streams[stream.slug],
            targets,
            names,
            window,
        )
    views[SELECTED_VIEW] = _view_row(
        image_id,
        final["stream"],
        final["epsilon"],
        x,
        selected,
        targets,
        names,
        window,
    )
    return dict(image_id=image_id, views=views)


def cmd_evaluate(config: RunConfig) -> ExitCode:
    """
    Evaluates the final images against the targets and writes the report,
    along with the same evaluation for each stream on its own.
    """
    inputs = _fake_inputs(config)
    require_paths([config.paths.final], "final images directory")
    targets = _load_detectors(config.targets, config.paths.models)
    target_names = [spec.name for spec in config.targets]

    results = _parallel(config)(
        delayed(_evaluate_one)(image_id, path, targets, config)
        for image_id, path in inputs
    )
    errors = [result for result in results if "error" in result]
    done = [result for result in results if "error" not in result]

    view_names = [CLEAN_VIEW] + [s.slug for s in Stream] + [SELECTED_VIEW]
    views = {
        view: ExperimentReport.from_records(
            [result["views"][view] for result in done], target_names
        )
        for view in view_names
    }
    selected = views[SELECTED_VIEW]

    config.paths.output.mkdir(parents=True, exist_ok=True)
    if config.report.write_csv:
        selected.write_csv(config.paths.output / REPORT_CSV)
        write_ablation_csv(views, config.paths.output / ABLATION_CSV)
    if config.report.write_summary:
        summary = dict(
            seed=config.seed,
            config=json.loads(config.json(exclude={"paths", "workers"})),
            targets=target_names,
            selected=selected.aggregates(),
            ablation={view: views[view].aggregates() for view in view_names},
            errors=errors,
        )
        write_json(summary, config.paths.output / SUMMARY_JSON)

    for target, rate in selected.aggregates()[
        "misclassification_rate"
    ].items():
        logger.info("Misclassification rate on {}: {}%.", target, rate)
    return _exit_code(errors)
