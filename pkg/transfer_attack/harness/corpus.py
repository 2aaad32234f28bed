"""
Procedural Real/Fake corpus, and reading and writing it on disk.
"""


from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from loguru import logger
from scipy import ndimage

from ..image import NUM_CHANNELS, Image, load_image, save_image
from ..labels import Label
from ..models.training import LabeledImageSet

_COARSE_CELLS = 4
"""
Resolution of the random grid that real images are interpolated from.
"""

_FIELD_RANGE = (0.35, 0.65)
"""
Range of the coarse grid values. Fields plus artifacts stay inside [0, 1].
"""

_ARTIFACT_AMPLITUDE = 0.15

_TINT_RANGE = (0.6, 1.0)

_CLASS_DIRS = {Label.REAL: "real", Label.FAKE: "fake"}


class CorpusError(ValueError):
    """
    Raised for invalid synthesis settings or a malformed corpus directory.
    """


def _smooth_field(size: int, rng: np.random.Generator) -> Image:
    """
    A low-frequency color field, interpolated from a coarse random grid.
    """
    coarse = rng.uniform(
        *_FIELD_RANGE, size=(_COARSE_CELLS, _COARSE_CELLS, 3)
    )
    zoom = size / _COARSE_CELLS
    field = ndimage.zoom(coarse, (zoom, zoom, 1), order=3, mode="nearest")
    return np.clip(field[:size, :size], 0.0, 1.0)


def _artifact(size: int, rng: np.random.Generator) -> np.ndarray:
    """
    A generator artifact at the highest spatial frequency: a checkerboard,
    or horizontal or vertical stripes, with a random phase.
    """
    rows, cols = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    kind = rng.integers(3)
    phase = rng.integers(2)
    if kind == 0:
        parity = rows + cols
    elif kind == 1:
        parity = rows
    else:
        parity = cols
    pattern = np.where((parity + phase) % 2 == 0, 1.0, -1.0)
    # Channel tint, so the artifact is not purely grayscale.
    tint = rng.uniform(*_TINT_RANGE, size=NUM_CHANNELS)
    return _ARTIFACT_AMPLITUDE * pattern[:, :, np.newaxis] * tint


def synthesize_corpus(
    n_real: int, n_fake: int, size: int, seed: int
) -> LabeledImageSet:
    """
    Generates a separable Real/Fake corpus. Real images are smooth color
    fields, and fakes are smooth fields plus a high-frequency artifact.

    Args:
        n_real: Number of real images.
        n_fake: Number of fake images.
        size: Side length of every image.
        seed: The random seed.

    Returns:
        The corpus, real images first.

    """
    if n_real < 1 or n_fake < 1:
        raise CorpusError("Need at least one image of each class.")
    if size < 16:
        raise CorpusError(f"Image size must be at least 16, got {size}.")

    rng = np.random.default_rng(seed)
    images = [_smooth_field(size, rng) for _ in range(n_real)]
    for _ in range(n_fake):
        field = _smooth_field(size, rng)
        images.append(np.clip(field + _artifact(size, rng), 0.0, 1.0))

    labels = np.array(
        [Label.REAL] * n_real + [Label.FAKE] * n_fake, dtype=np.int64
    )
    ids = tuple(f"real_{i:04d}" for i in range(n_real)) + tuple(
        f"fake_{i:04d}" for i in range(n_fake)
    )
    return LabeledImageSet(images=np.stack(images), labels=labels, ids=ids)


def write_corpus(corpus: LabeledImageSet, root: Union[str, Path]) -> None:
    """
    Writes a corpus as `real/<id>.png` and `fake/<id>.png`.

    Args:
        corpus: The corpus to write.
        root: The directory to write to.

    """
    root = Path(root)
    for class_dir in _CLASS_DIRS.values():
        (root / class_dir).mkdir(parents=True, exist_ok=True)

    for image, label, image_id in zip(
        corpus.images, corpus.labels, corpus.ids
    ):
        save_image(image, root / _CLASS_DIRS[Label(label)] / f"{image_id}.png")
    logger.info("Wrote {} images to {}.", len(corpus), root)


def list_images(root: Union[str, Path], label: Label) -> List[Path]:
    """
    Args:
        root: The corpus directory.
        label: The class to list.

    Returns:
        The class's image files, sorted by name.

    """
    return sorted((Path(root) / _CLASS_DIRS[label]).glob("*.png"))


def load_corpus(root: Union[str, Path]) -> LabeledImageSet:
    """
    Loads every image in a corpus directory.

    Args:
        root: The corpus directory.

    Returns:
        The corpus, real images first.

    """
    images: List[Image] = []
    labels: List[int] = []
    ids: List[str] = []
    for label in (Label.REAL, Label.FAKE):
        for path in list_images(root, label):
            images.append(load_image(path))
            labels.append(label)
            ids.append(path.stem)

    if not images:
        raise CorpusError(
            f"No images found under {root}. Expected real/*.png and "
            f"fake/*.png; run the synth command to create them."
        )
    shapes = {image.shape for image in images}
    if len(shapes) != 1:
        raise CorpusError(f"Corpus images differ in shape: {shapes}.")

    return LabeledImageSet(
        images=np.stack(images),
        labels=np.array(labels, dtype=np.int64),
        ids=tuple(ids),
    )


def fake_image_ids(root: Union[str, Path]) -> List[Tuple[str, Path]]:
    """
    Args:
        root: The corpus directory.

    Returns:
        The id and path of every fake image, sorted by id.

    """
    return [(path.stem, path) for path in list_images(root, Label.FAKE)]
