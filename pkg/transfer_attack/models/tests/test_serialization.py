"""
Tests for the model file format.
"""


import struct
from pathlib import Path

import numpy as np
import pytest

from transfer_attack.models.serialization import (
    FORMAT_VERSION,
    MAGIC,
    ModelFileError,
    ModelFormatError,
    ModelTruncatedError,
    ModelVersionError,
    decode_model,
    encode_model,
    load_model,
    save_model,
)


def test_save_and_load(make_model, make_image, tmp_path: Path) -> None:
    """
    Tests that a saved model reloads with identical parameters and outputs.

    Args:
        make_model: Fixture for making classifiers.
        make_image: Fixture for making images.
        tmp_path: Temporary directory.

    """
    # Arrange.
    model = make_model(0, width=5, pool=4)
    path = tmp_path / "detector.model"

    # Act.
    save_model(model, path)
    loaded = load_model(path)

    # Assert.
    assert loaded.architecture == model.architecture
    for name, value in model.parameters.items():
        np.testing.assert_array_equal(loaded.parameters[name], value)
    image = make_image(0)
    np.testing.assert_array_equal(loaded.forward(image), model.forward(image))


class TestDecodeModel:
    """
    Tests for the error handling in `decode_model`.
    """

    def test_bad_magic(self, make_model) -> None:
        """
        Tests that data without the magic bytes is rejected.

        Args:
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        data = b"XXXX" + encode_model(make_model(0))[len(MAGIC) :]

        # Act & assert.
        with pytest.raises(ModelFormatError, match="magic"):
            decode_model(data)

    def test_unknown_version(self, make_model) -> None:
        """
        Tests that an unsupported version is rejected.

        Args:
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        data = bytearray(encode_model(make_model(0)))
        struct.pack_into("<H", data, len(MAGIC), FORMAT_VERSION + 1)

        # Act & assert.
        with pytest.raises(ModelVersionError):
            decode_model(bytes(data))

    @pytest.mark.parametrize("keep", [2, 8, 100])
    def test_truncated(self, make_model, keep: int) -> None:
        """
        Tests that files ending early are rejected.

        Args:
            make_model: Fixture for making classifiers.
            keep: How many bytes to keep.

        """
        # Arrange.
        data = encode_model(make_model(0))[:keep]

        # Act & assert.
        with pytest.raises(ModelTruncatedError):
            decode_model(data)

    def test_trailing_bytes(self, make_model) -> None:
        """
        Tests that unexpected trailing data is rejected.

        Args:
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        data = encode_model(make_model(0)) + b"\x00"

        # Act & assert.
        with pytest.raises(ModelFormatError, match="trailing"):
            decode_model(data)

    def test_errors_share_a_base(self) -> None:
        """
        Tests that every model file error can be caught together.
        """
        for error in (
            ModelFormatError,
            ModelVersionError,
            ModelTruncatedError,
        ):
            assert issubclass(error, ModelFileError)
