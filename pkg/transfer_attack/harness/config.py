"""
Run configuration for the experiment harness.
"""


import re
from pathlib import Path
from typing import Iterable, List, Optional, Union

from loguru import logger
from pydantic import BaseModel, Extra, ValidationError, validator

from ..attacks.config import AttackConfig, PreprocessConfig
from ..models.classifier import Architecture
from ..models.training import TrainingHyperparameters

_NAME_PATTERN = re.compile(r"^[A-Za-z0-9_\-]+$")
"""
Detector names double as file names.
"""

MODEL_SUFFIX = ".model"


class ConfigError(Exception):
    """
    Raised for an invalid or unusable run configuration.
    """


class _Section(BaseModel):
    class Config:
        extra = Extra.forbid
        allow_mutation = False


class PathsConfig(_Section):
    """
    Attributes:
        corpus: Directory holding `real/` and `fake/` images.
        models: Directory holding detector files.
        output: Directory that candidates and reports are written to.

    """

    corpus: Path = Path("corpus")
    models: Path = Path("models")
    output: Path = Path("output")

    @property
    def candidates(self) -> Path:
        return self.output / "candidates"

    @property
    def final(self) -> Path:
        return self.output / "final"


class SynthConfig(_Section):
    """
    Attributes:
        n_real: Number of real images to generate.
        n_fake: Number of fake images to generate.
        size: Side length of the images.

    """

    n_real: int = 48
    n_fake: int = 48
    size: int = 32

    @validator("n_real", "n_fake")
    def count_is_positive(cls, count: int) -> int:
        assert count >= 1, "Need at least one image of each class."
        return count

    @validator("size")
    def size_is_large_enough(cls, size: int) -> int:
        assert size >= 16, "Images must be at least 16 pixels on a side."
        return size


class TrainingConfig(_Section):
    """
    Hyperparameters shared by every detector. Seeds come from the detectors.
    """

    learning_rate: float = 0.05
    epochs: int = 40
    batch_size: int = 16
    momentum: float = 0.9

    def hyperparameters(self, seed: int) -> TrainingHyperparameters:
        """
        Args:
            seed: The detector's seed.

        Returns:
            The hyperparameters for training that detector.

        """
        return TrainingHyperparameters(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            momentum=self.momentum,
            seed=seed,
        )


class DetectorSpec(_Section):
    """
    A detector to train.

    Attributes:
        name: Unique name, used for the model file.
        width: Convolutional channel width.
        pool: Pooling window size.
        seed: Training seed.

    """

    name: str
    width: int = 8
    pool: int = 2
    seed: int = 0

    @validator("name")
    def name_is_file_safe(cls, name: str) -> str:
        assert _NAME_PATTERN.match(
            name
        ), "Detector names may only use letters, digits, '_' and '-'."
        return name

    @property
    def architecture(self) -> Architecture:
        return Architecture(width=self.width, pool=self.pool)

    def model_path(self, models_dir: Path) -> Path:
        return models_dir / f"{self.name}{MODEL_SUFFIX}"


def _default_surrogates() -> List[DetectorSpec]:
    return [
        DetectorSpec(name="surrogate_a", width=8, pool=2, seed=1),
        DetectorSpec(name="surrogate_b", width=6, pool=2, seed=2),
        DetectorSpec(name="surrogate_c", width=10, pool=4, seed=3),
    ]


def _default_targets() -> List[DetectorSpec]:
    return [DetectorSpec(name="target_a", width=12, pool=2, seed=101)]


class ReportConfig(_Section):
    """
    Attributes:
        write_csv: Whether to write the per-image tables.
        write_summary: Whether to write the summary document.

    """

    write_csv: bool = True
    write_summary: bool = True


class RunConfig(_Section):
    """
    Everything needed to run the experiment.

    Attributes:
        paths: Input and output locations.
        synth: Corpus synthesis settings.
        training: Detector training settings.
        surrogates: White-box detectors the attacks use.
        targets: Held-out black-box detectors used for selection and
            evaluation.
        attack: Attack hyperparameters.
        preprocess: Preprocessing settings.
        report: Report output settings.
        seed: Global seed. Per-image seeds derive from it.
        workers: Size of the worker pool.

    """

    paths: PathsConfig = PathsConfig()
    synth: SynthConfig = SynthConfig()
    training: TrainingConfig = TrainingConfig()
    surrogates: List[DetectorSpec] = _default_surrogates()
    targets: List[DetectorSpec] = _default_targets()
    attack: AttackConfig = AttackConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    report: ReportConfig = ReportConfig()
    seed: int = 0
    workers: int = 1

    @validator("surrogates", "targets")
    def not_empty(cls, detectors: List[DetectorSpec]) -> List[DetectorSpec]:
        assert len(detectors) >= 1, "Need at least one detector."
        names = [d.name for d in detectors]
        assert len(set(names)) == len(names), "Detector names must be unique."
        return detectors

    @validator("targets")
    def targets_are_held_out(
        cls, targets: List[DetectorSpec], values: dict
    ) -> List[DetectorSpec]:
        surrogate_names = {d.name for d in values.get("surrogates", [])}
        shared = surrogate_names & {d.name for d in targets}
        assert not shared, f"Detectors {sorted(shared)} are also surrogates."
        return targets

    @validator("workers")
    def workers_is_positive(cls, workers: int) -> int:
        assert workers >= 1, "Need at least one worker."
        return workers

    @property
    def detectors(self) -> List[DetectorSpec]:
        return list(self.surrogates) + list(self.targets)


def load_config(
    path: Optional[Union[str, Path]] = None,
    *,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> RunConfig:
    """
    Loads a run configuration from a JSON file.

    Args:
        path: The file to load. If not provided, every value is a default.
        seed: Overrides the configured seed.
        workers: Overrides the configured worker count.

    Returns:
        The validated configuration.

    Raises:
        `ConfigError` if the file cannot be read or is invalid.

    """
    try:
        if path is None:
            config = RunConfig()
        else:
            logger.debug("Loading configuration from {}.", path)
            config = RunConfig.parse_file(path)

        overrides = {}
        if seed is not None:
            overrides["seed"] = seed
        if workers is not None:
            overrides["workers"] = workers
        if overrides:
            config = RunConfig.parse_obj({**config.dict(), **overrides})
    except ValidationError as error:
        raise ConfigError(f"Invalid configuration:\n{error}") from error
    except (OSError, ValueError) as error:
        raise ConfigError(f"Cannot read configuration: {error}") from error

    return config


def require_paths(paths: Iterable[Path], what: str) -> None:
    """
    Checks that input paths exist.

    Args:
        paths: The paths a command reads from.
        what: Describes the paths, for the error message.

    Raises:
        `ConfigError` naming the first missing path.

    """
    for path in paths:
        if not path.exists():
            raise ConfigError(
                f"Missing {what}: {path} does not exist. Run the earlier "
                f"pipeline stages first or fix the configured paths."
            )
