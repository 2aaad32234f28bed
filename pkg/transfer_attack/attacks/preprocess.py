"""
Photometric preprocessing that makes attacked images look more natural.
"""


import numpy as np

from ..image import Image
from ..imgmath import adjust_photometric, perlin_noise
from .config import PreprocessConfig


def preprocess(
    x: Image, cfg: PreprocessConfig, rng: np.random.Generator
) -> Image:
    """
    Adjusts contrast and brightness, then adds Perlin noise.

    Args:
        x: The image to preprocess.
        cfg: The preprocessing configuration.
        rng: The random source for the noise lattice.

    Returns:
        The preprocessed image, clamped to `[0, 1]`.

    """
    adjusted = adjust_photometric(x, cfg.contrast, cfg.brightness)
    if cfg.perlin_amplitude == 0.0:
        return adjusted

    noise = perlin_noise(
        x.shape[0],
        x.shape[1],
        cfg.perlin_grid_cells,
        cfg.perlin_amplitude,
        rng,
    )
    return np.clip(adjusted + noise, 0.0, 1.0)
