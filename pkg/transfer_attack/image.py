"""
Image representation and PNG input/output.

Images are `(height, width, 3)` arrays of 64-bit floats in `[0, 1]`.
Gradient fields share the shape of the image they came from but are
unbounded.
"""


from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image as PilImage

Image = np.ndarray
"""
A `(height, width, 3)` array of unit-interval pixel intensities.
"""

GradientField = np.ndarray
"""
An unbounded real array with the same shape as some `Image`.
"""

NUM_CHANNELS = 3


class ImageError(ValueError):
    """
    Raised when an image or field violates a shape or range precondition.
    """


def validate_image(image: np.ndarray, *, check_range: bool = True) -> Image:
    """
    Checks that an array is a valid image.

    Args:
        image: The array to check.
        check_range: If true, also check that every pixel is in `[0, 1]`.

    Returns:
        The same array, for chaining.

    Raises:
        `ImageError` if the array is not a valid image.

    """
    if image.ndim != 3 or image.shape[2] != NUM_CHANNELS:
        raise ImageError(
            f"Expected an (H, W, {NUM_CHANNELS}) array, got {image.shape}."
        )
    if image.shape[0] < 1 or image.shape[1] < 1:
        raise ImageError(f"Image must be non-empty, got {image.shape}.")
    if check_range and (
        not np.all(np.isfinite(image))
        or image.min() < 0.0
        or image.max() > 1.0
    ):
        raise ImageError("Pixel values must lie in [0, 1].")
    return image


def check_same_shape(a: np.ndarray, b: np.ndarray) -> Tuple[int, ...]:
    """
    Checks that two arrays have the same shape.

    Args:
        a: The first array.
        b: The second array.

    Returns:
        The common shape.

    Raises:
        `ImageError` if the shapes differ.

    """
    if a.shape != b.shape:
        raise ImageError(f"Shape mismatch: {a.shape} vs {b.shape}.")
    return a.shape


def load_image(path: Union[str, Path]) -> Image:
    """
    Loads an 8-bit RGB PNG into the unit-interval representation.

    Args:
        path: The file to read.

    Returns:
        The loaded image.

    """
    with PilImage.open(path) as png:
        pixels = np.asarray(png.convert("RGB"), dtype=np.float64)
    return pixels / 255.0


def quantize(image: Image) -> np.ndarray:
    """
    Converts an image to 8-bit intensities, rounding half up.

    Args:
        image: The image to convert.

    Returns:
        The `uint8` array.

    """
    validate_image(image)
    return np.floor(image * 255.0 + 0.5).astype(np.uint8)


def save_image(image: Image, path: Union[str, Path]) -> None:
    """
    Saves an image as an 8-bit RGB PNG.

    Args:
        image: The image to save.
        path: Where to write it.

    """
    PilImage.fromarray(quantize(image), mode="RGB").save(path, format="PNG")
