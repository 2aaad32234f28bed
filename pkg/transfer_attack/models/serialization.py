"""
Binary model files.

Layout (little-endian):

    magic    4 bytes   b"TADM"
    version  uint16
    width    uint16
    pool     uint16
    params   float32 arrays, in `PARAMETER_NAMES` order, C-contiguous
"""


import struct
from pathlib import Path
from typing import Union

import numpy as np
from loguru import logger

from .classifier import PARAMETER_NAMES, Architecture, Classifier

MAGIC = b"TADM"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sHHH")
_FLOAT = np.dtype("<f4")


class ModelFileError(Exception):
    """
    Base class for problems with a model file.
    """


class ModelFormatError(ModelFileError):
    """
    Raised when a file is not a model file at all.
    """


class ModelVersionError(ModelFileError):
    """
    Raised when a model file has an unsupported version.
    """


class ModelTruncatedError(ModelFileError):
    """
    Raised when a model file ends early.
    """


def encode_model(model: Classifier) -> bytes:
    """
    Args:
        model: The model to encode.

    Returns:
        The encoded model.

    """
    architecture = model.architecture
    chunks = [
        _HEADER.pack(
            MAGIC, FORMAT_VERSION, architecture.width, architecture.pool
        )
    ]
    parameters = model.parameters
    for name in PARAMETER_NAMES:
        chunks.append(parameters[name].astype(_FLOAT).tobytes(order="C"))
    return b"".join(chunks)


def decode_model(data: bytes) -> Classifier:
    """
    Args:
        data: An encoded model.

    Returns:
        The decoded model.

    """
    if len(data) < _HEADER.size:
        if not MAGIC.startswith(data[: len(MAGIC)]):
            raise ModelFormatError("Not a model file (bad magic bytes).")
        raise ModelTruncatedError("Model file ends inside its header.")

    magic, version, width, pool = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("Not a model file (bad magic bytes).")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"Unsupported model version {version}, expected "
            f"{FORMAT_VERSION}."
        )

    architecture = Architecture(width=width, pool=pool)
    shapes = architecture.parameter_shapes()
    offset = _HEADER.size
    parameters = {}
    for name in PARAMETER_NAMES:
        count = int(np.prod(shapes[name]))
        end = offset + count * _FLOAT.itemsize
        if end > len(data):
            raise ModelTruncatedError(
                f"Model file ends inside parameter {name}."
            )
        parameters[name] = np.frombuffer(
            data, dtype=_FLOAT, count=count, offset=offset
        ).reshape(shapes[name])
        offset = end

    if offset != len(data):
        raise ModelFormatError(
            f"Model file has {len(data) - offset} unexpected trailing bytes."
        )
    return Classifier(architecture, parameters)


def save_model(model: Classifier, path: Union[str, Path]) -> None:
    """
    Writes a model to disk.

    Args:
        model: The model to save.
        path: Where to write it.

    """
    Path(path).write_bytes(encode_model(model))
    logger.debug("Saved model to {}.", path)


def load_model(path: Union[str, Path]) -> Classifier:
    """
    Reads a model from disk.

    Args:
        path: The file to read.

    Returns:
        The loaded model.

    """
    logger.debug("Loading model from {}.", path)
    return decode_model(Path(path).read_bytes())
