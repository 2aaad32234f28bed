"""
Tests for the `image` module.
"""


from pathlib import Path

import numpy as np
import pytest

from transfer_attack.image import (
    ImageError,
    check_same_shape,
    load_image,
    quantize,
    save_image,
    validate_image,
)


class TestValidateImage:
    """
    Tests for `validate_image`.
    """

    @pytest.mark.parametrize("shape", [(8, 8), (8, 8, 4), (0, 8, 3)])
    def test_bad_shape(self, shape) -> None:
        """
        Tests that arrays that are not RGB images are rejected.

        Args:
            shape: The shape to try.

        """
        with pytest.raises(ImageError):
            validate_image(np.zeros(shape))

    @pytest.mark.parametrize("value", [-0.1, 1.1, np.nan])
    def test_out_of_range(self, value: float) -> None:
        """
        Tests that pixels outside of `[0, 1]` are rejected.

        Args:
            value: The bad pixel value.

        """
        # Arrange.
        image = np.full((4, 4, 3), 0.5)
        image[1, 2, 0] = value

        # Act & assert.
        with pytest.raises(ImageError, match="Pixel values"):
            validate_image(image)
        # Range checking can be skipped.
        validate_image(image, check_range=False)


def test_check_same_shape() -> None:
    """
    Tests that `check_same_shape` returns the common shape or raises.
    """
    shape = check_same_shape(np.zeros((2, 3, 3)), np.ones((2, 3, 3)))
    assert shape == (2, 3, 3)
    with pytest.raises(ImageError):
        check_same_shape(np.zeros((2, 3, 3)), np.zeros((3, 2, 3)))


def test_quantize() -> None:
    """
    Tests that intensities round to the nearest level, halves going up.
    """
    # Arrange.
    image = np.array([0.0, 0.6 / 255, 1.49 / 255, 0.5, 1.0]).reshape(1, 5, 1)
    image = np.repeat(image, 3, axis=2)

    # Act.
    levels = quantize(image)

    # Assert.
    assert levels.dtype == np.uint8
    np.testing.assert_array_equal(levels[0, :, 0], [0, 1, 1, 128, 255])


def test_save_and_load(make_image, tmp_path: Path) -> None:
    """
    Tests that saving and reloading stays within one quantization level.

    Args:
        make_image: Fixture for making images.
        tmp_path: Temporary directory.

    """
    # Arrange.
    image = make_image(0)
    path = tmp_path / "image.png"

    # Act.
    save_image(image, path)
    loaded = load_image(path)

    # Assert.
    assert loaded.shape == image.shape
    assert loaded.dtype == np.float64
    assert np.abs(loaded - image).max() <= 0.5 / 255 + 1e-12
    # Loading an already-quantized image is lossless.
    save_image(loaded, path)
    np.testing.assert_array_equal(load_image(path), loaded)
