"""
Scores adversarial candidates against held-out classifiers and picks the
better of the two streams for every image.
"""


from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import validator
from pydantic.dataclasses import dataclass

from .attacks.candidate import AdversarialCandidate, Stream
from .image import Image, check_same_shape
from .imgmath import DEFAULT_SSIM_WINDOW, ssim
from .labels import Label
from .models.classifier import Classifier, predict


class SelectionError(ValueError):
    """
    Raised for misaligned batches or candidates from different originals.
    """


class _ArrayConfig:
    arbitrary_types_allowed = True


@dataclass(frozen=True, config=_ArrayConfig)
class CandidateEvaluation:
    """
    How one candidate fared against the held-out classifiers.

    Attributes:
        image: The evaluated image.
        fooled: For every classifier, whether it predicted Real.
        ssim: SSIM between the image and its original.

    """

    image: Image
    fooled: Tuple[bool, ...]
    ssim: float

    @validator("ssim")
    def ssim_in_range(cls, value: float) -> float:
        assert -1.0 <= value <= 1.0 + 1e-12, "SSIM must be in [-1, 1]."
        return value

    @property
    def contributions(self) -> np.ndarray:
        """
        Returns:
            This image's per-classifier score terms.

        """
        return self.ssim * np.array(self.fooled, dtype=np.float64)

    @property
    def fooled_all(self) -> bool:
        return len(self.fooled) > 0 and all(self.fooled)


@dataclass(frozen=True, config=_ArrayConfig)
class ScoreReport:
    """
    A batch score.

    Attributes:
        stream: What was scored, e.g. a stream tag or "selected".
        total: The score.
        contributions: Score terms, one row per image and one column per
            classifier.
        n_images: Number of images scored.

    """

    stream: Optional[str]
    total: float
    contributions: np.ndarray
    n_images: int

    @validator("contributions")
    def rows_match_images(cls, contributions: np.ndarray) -> np.ndarray:
        assert contributions.ndim == 2, "Contributions must be a table."
        return contributions

    @validator("n_images")
    def total_is_consistent(cls, n_images: int, values: dict) -> int:
        contributions = values["contributions"]
        assert contributions.shape[0] == n_images, "One row per image."
        assert (
            abs(values["total"] - contributions.sum()) <= 1e-9
        ), "Total must equal the sum of contributions."
        return n_images


def evaluate(
    candidates: Sequence[Image],
    classifiers: Sequence[Classifier],
    originals: Sequence[Image],
    ssim_window: int = DEFAULT_SSIM_WINDOW,
) -> List[CandidateEvaluation]:
    """
    Evaluates a batch of candidates.

    Args:
        candidates: The adversarial images.
        classifiers: The black-box classifiers.
        originals: The images the candidates came from, aligned by index.
        ssim_window: The SSIM window.

    Returns:
        One evaluation per candidate.

    """
    if len(candidates) != len(originals):
        raise SelectionError(
            f"Got {len(candidates)} candidates but {len(originals)} "
            f"originals."
        )

    evaluations = []
    for candidate, original in zip(candidates, originals):
        check_same_shape(original, candidate)
        evaluations.append(
            CandidateEvaluation(
                image=candidate,
                fooled=tuple(
                    predict(model, candidate) == Label.REAL
                    for model in classifiers
                ),
                ssim=ssim(original, candidate, ssim_window),
            )
        )
    return evaluations


def score(
    evals: Sequence[CandidateEvaluation], stream: Optional[str] = None
) -> ScoreReport:
    """
    Sums SSIM over every image and every classifier it fooled.

    Args:
        evals: The evaluations to score.
        stream: Label for the report.

    Returns:
        The score report.

    """
    if len(evals) == 0:
        contributions = np.zeros((0, 0))
    else:
        contributions = np.stack([e.contributions for e in evals])
    return ScoreReport(
        stream=stream,
        total=float(contributions.sum()),
        contributions=contributions,
        n_images=len(evals),
    )


def select_with_scores(
    cand_m: AdversarialCandidate,
    cand_s: AdversarialCandidate,
    classifiers: Sequence[Classifier],
    original: Image,
    ssim_window: int = DEFAULT_SSIM_WINDOW,
) -> Tuple[AdversarialCandidate, float, float]:
    """
    Picks the higher-scoring candidate for one image. Ties go to the higher
    SSIM, then to the MNTD-PGD candidate.

    Args:
        cand_m: The MNTD-PGD candidate.
        cand_s: The SG-PGD candidate.
        classifiers: The black-box classifiers.
        original: The image both candidates came from.
        ssim_window: The SSIM window.

    Returns:
        The selected candidate and the scores of `cand_m` and `cand_s`.

    """
    for candidate in (cand_m, cand_s):
        if candidate.image.shape != original.shape or not np.allclose(
            candidate.original, original, rtol=0.0, atol=1e-9
        ):
            raise SelectionError(
                f"The {candidate.stream.value} candidate was not derived "
                f"from this original."
            )

    eval_m, eval_s = evaluate(
        [cand_m.image, cand_s.image],
        classifiers,
        [original, original],
        ssim_window,
    )
    score_m = float(eval_m.contributions.sum())
    score_s = float(eval_s.contributions.sum())

    if score_s > score_m:
        selected = cand_s
    elif score_s == score_m and eval_s.ssim > eval_m.ssim:
        selected = cand_s
    else:
        selected = cand_m
    logger.debug(
        "Scores: {} {:.4f}, {} {:.4f}; selected {}.",
        Stream.MNTD_PGD.value,
        score_m,
        Stream.SG_PGD.value,
        score_s,
        selected.stream.value,
    )
    return selected, score_m, score_s


def select(
    cand_m: AdversarialCandidate,
    cand_s: AdversarialCandidate,
    classifiers: Sequence[Classifier],
    original: Image,
    ssim_window: int = DEFAULT_SSIM_WINDOW,
) -> AdversarialCandidate:
    """
    Same as `select_with_scores`, returning only the selected candidate.
    """
    selected, _, _ = select_with_scores(
        cand_m, cand_s, classifiers, original, ssim_window
    )
    return selected


def _check_not_empty(evals: Sequence[CandidateEvaluation]) -> None:
    if len(evals) == 0:
        raise SelectionError("Need at least one evaluation.")


def misclassification_rate(
    evals: Sequence[CandidateEvaluation], classifier_index: int
) -> float:
    """
    Args:
        evals: The evaluations.
        classifier_index: Which classifier to report on.

    Returns:
        The percentage of images that classifier predicted as Real.

    """
    _check_not_empty(evals)
    fooled = sum(e.fooled[classifier_index] for e in evals)
    return 100.0 * fooled / len(evals)


def average_ssim(evals: Sequence[CandidateEvaluation]) -> float:
    """
    Mean SSIM over all images, whether or not they fooled anything.
    """
    _check_not_empty(evals)
    return float(np.mean([e.ssim for e in evals]))


def average_ssim_successful(
    evals: Sequence[CandidateEvaluation],
) -> Optional[float]:
    """
    Mean SSIM over the images that fooled every classifier.

    Returns:
        The mean, or None if no image fooled every classifier.

    """
    successful = [e.ssim for e in evals if e.fooled_all]
    if not successful:
        return None
    return float(np.mean(successful))
