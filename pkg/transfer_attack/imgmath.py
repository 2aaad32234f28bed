"""
Pixel-space numerical primitives.
"""


import math
from typing import Optional, Tuple

import numpy as np
from pydantic import validator
from pydantic.dataclasses import dataclass
from scipy import ndimage, signal
from scipy.stats import norm

from .image import (
    GradientField,
    Image,
    ImageError,
    check_same_shape,
    validate_image,
)

DEFAULT_SSIM_WINDOW = 7
"""
Side length of the uniform SSIM window, for both the loss and the metric.
"""

SSIM_K1 = 0.01
SSIM_K2 = 0.03
_DYNAMIC_RANGE = 1.0
SSIM_C1 = (SSIM_K1 * _DYNAMIC_RANGE) ** 2
SSIM_C2 = (SSIM_K2 * _DYNAMIC_RANGE) ** 2

# Largest magnitude of unit-gradient 2D Perlin noise is sqrt(1/2).
_PERLIN_NORMALIZER = math.sqrt(2.0)


class _ArrayConfig:
    arbitrary_types_allowed = True


def _check_window(shape: Tuple[int, ...], window: int) -> None:
    if window < 1 or window % 2 == 0:
        raise ImageError(
            f"SSIM window must be odd and positive, got {window}."
        )
    if window > min(shape[0], shape[1]):
        raise ImageError(
            f"SSIM window {window} does not fit in an image of shape {shape}."
        )


def _window_means(values: np.ndarray, window: int) -> np.ndarray:
    """
    Computes the mean of every fully-contained `window`x`window` patch,
    independently per channel.

    Args:
        values: The `(H, W, C)` array to average.
        window: The odd window side length.

    Returns:
        An `(H - window + 1, W - window + 1, C)` array of patch means.

    """
    radius = window // 2
    means = ndimage.uniform_filter(
        values, size=(window, window, 1), mode="reflect"
    )
    return means[
        radius : values.shape[0] - radius, radius : values.shape[1] - radius
    ]


def _ssim_terms(a: Image, b: Image, window: int) -> Tuple[np.ndarray, ...]:
    """
    Computes the per-window statistics shared by `ssim` and `ssim_gradient`.

    Returns:
        The local means of `a` and `b` followed by the four SSIM factors:
        `2 mu_a mu_b + C1`, `2 sigma_ab + C2`, `mu_a^2 + mu_b^2 + C1`, and
        `sigma_a^2 + sigma_b^2 + C2`.

    """
    mu_a = _window_means(a, window)
    mu_b = _window_means(b, window)
    sigma_a = _window_means(a * a, window) - mu_a * mu_a
    sigma_b = _window_means(b * b, window) - mu_b * mu_b
    sigma_ab = _window_means(a * b, window) - mu_a * mu_b

    luminance_num = 2.0 * mu_a * mu_b + SSIM_C1
    structure_num = 2.0 * sigma_ab + SSIM_C2
    luminance_den = mu_a * mu_a + mu_b * mu_b + SSIM_C1
    structure_den = sigma_a + sigma_b + SSIM_C2
    return (
        mu_a,
        mu_b,
        luminance_num,
        structure_num,
        luminance_den,
        structure_den,
    )


def ssim(a: Image, b: Image, window: int = DEFAULT_SSIM_WINDOW) -> float:
    """
    Computes the mean structural similarity between two images, using
    uniform windows evaluated independently on each channel. Window
    variances and covariances are population statistics, normalized by the
    number of pixels in the window.

    Args:
        a: The first image.
        b: The second image.
        window: Odd side length of the sliding window.

    Returns:
        The SSIM, averaged over every fully-contained window and channel.

    """
    check_same_shape(a, b)
    _check_window(a.shape, window)

    _, _, lum_num, struct_num, lum_den, struct_den = _ssim_terms(a, b, window)
    ssim_map = (lum_num * struct_num) / (lum_den * struct_den)
    return float(ssim_map.mean())


def ssim_gradient(
    a: Image, b: Image, window: int = DEFAULT_SSIM_WINDOW
) -> GradientField:
    """
    Computes the exact gradient of `ssim(a, b, window)` with respect to `b`.

    Args:
        a: The reference image.
        b: The image to differentiate with respect to.
        window: Odd side length of the sliding window.

    Returns:
        The gradient, with the same shape as `b`.

    """
    check_same_shape(a, b)
    _check_window(a.shape, window)

    mu_a, mu_b, lum_num, struct_num, lum_den, struct_den = _ssim_terms(
        a, b, window
    )
    denominator = lum_den * struct_den
    ssim_map = lum_num * struct_num / denominator

    # Partial derivatives of each window's SSIM with respect to the local
    # mean of b, the local mean of a*b, and the local mean of b*b.
    d_mean = (
        2.0 * mu_a * (struct_num - lum_num) / denominator
        - ssim_map * (2.0 * mu_b / lum_den - 2.0 * mu_b / struct_den)
    )
    d_cross = 2.0 * lum_num / denominator
    d_square = -ssim_map / struct_den

    # Every window containing a pixel contributes to that pixel's gradient,
    # which is a full convolution with a box of ones.
    box = np.ones((window, window, 1))

    def spread(coefficients: np.ndarray) -> np.ndarray:
        return signal.convolve(coefficients, box, mode="full")

    num_windows = ssim_map.size
    scale = 1.0 / (window * window * num_windows)
    return scale * (
        spread(d_mean) + a * spread(d_cross) + 2.0 * b * spread(d_square)
    )


@dataclass(frozen=True, config=_ArrayConfig)
class GaussianKernel:
    """
    A normalized, isotropic 2D Gaussian kernel.

    Attributes:
        size: Odd side length, in pixels.
        sigma: Standard deviation, in pixels.
        weights: The `size`x`size` weights.

    """

    size: int
    sigma: float
    weights: np.ndarray

    @validator("size")
    def size_is_odd(cls, size: int) -> int:
        assert size >= 1 and size % 2 == 1, "Kernel size must be odd."
        return size

    @validator("sigma")
    def sigma_is_positive(cls, sigma: float) -> float:
        assert sigma > 0.0, "Sigma must be positive."
        return sigma

    @validator("weights")
    def weights_are_normalized(cls, weights: np.ndarray) -> np.ndarray:
        assert abs(weights.sum() - 1.0) <= 1e-9, "Weights must sum to 1."
        return weights


def gaussian_kernel(size: int, sigma: float) -> GaussianKernel:
    """
    Builds a Gaussian smoothing kernel.

    Args:
        size: Odd side length.
        sigma: Standard deviation in pixels.

    Returns:
        The kernel, normalized to sum to 1.

    """
    if size < 1 or size % 2 == 0:
        raise ImageError(f"Kernel size must be odd and positive, got {size}.")

    center = (size - 1) / 2.0
    profile = norm.pdf(np.arange(size) - center, scale=sigma)
    weights = np.outer(profile, profile)
    return GaussianKernel(
        size=size, sigma=sigma, weights=weights / weights.sum()
    )


def convolve_same(
    field: GradientField, kernel: GaussianKernel
) -> GradientField:
    """
    Convolves every channel of a field with a kernel, zero-padding the
    borders so the output keeps the input's shape.

    Args:
        field: The `(H, W, C)` field to smooth.
        kernel: The kernel to apply.

    Returns:
        The smoothed field.

    """
    if kernel.size > min(field.shape[0], field.shape[1]):
        raise ImageError(
            f"Kernel of size {kernel.size} is larger than field "
            f"{field.shape}."
        )
    if kernel.size == 1:
        return field * kernel.weights[0, 0]

    return ndimage.convolve(
        field, kernel.weights[:, :, np.newaxis], mode="constant", cval=0.0
    )


def _interpolation_matrix(source: int, target: int) -> np.ndarray:
    """
    Builds the bilinear (corner-aligned) resampling matrix that maps a
    signal of length `source` to one of length `target`.

    Returns:
        A `(target, source)` matrix.

    """
    matrix = np.zeros((target, source))
    if source == 1 or target == 1:
        matrix[:, 0] = 1.0
        return matrix

    positions = np.linspace(0.0, source - 1, target)
    lower = np.minimum(np.floor(positions).astype(int), source - 2)
    fraction = positions - lower
    rows = np.arange(target)
    matrix[rows, lower] = 1.0 - fraction
    matrix[rows, lower + 1] += fraction
    return matrix


@dataclass(frozen=True, config=_ArrayConfig)
class DiversityTransform:
    """
    A sampled resize-and-pad transform. Being linear, it also exposes its
    adjoint so that gradients taken at the transformed image can be mapped
    back onto the untransformed one.

    Attributes:
        shape: Shape of the images this transform applies to.
        row_matrix: Vertical resampling matrix, or None for the identity.
        col_matrix: Horizontal resampling matrix, or None for the identity.
        top: Row offset of the resized content.
        left: Column offset of the resized content.

    """

    shape: Tuple[int, int, int]
    row_matrix: Optional[np.ndarray] = None
    col_matrix: Optional[np.ndarray] = None
    top: int = 0
    left: int = 0

    @property
    def is_identity(self) -> bool:
        return self.row_matrix is None

    def apply(self, image: Image) -> Image:
        """
        Args:
            image: The image to transform.

        Returns:
            The resized image padded back to its original size with zeros.

        """
        if self.is_identity:
            return image

        resized = np.einsum(
            "ij,jkc,lk->ilc", self.row_matrix, image, self.col_matrix
        )
        output = np.zeros(self.shape)
        output[
            self.top : self.top + resized.shape[0],
            self.left : self.left + resized.shape[1],
        ] = resized
        return output

    def adjoint(self, field: GradientField) -> GradientField:
        """
        Args:
            field: A gradient taken with respect to the transformed image.

        Returns:
            The corresponding gradient with respect to the original image.

        """
        if self.is_identity:
            return field

        cropped = field[
            self.top : self.top + self.row_matrix.shape[0],
            self.left : self.left + self.col_matrix.shape[0],
        ]
        return np.einsum(
            "ij,ilc,lk->jkc", self.row_matrix, cropped, self.col_matrix
        )


def sample_diversity(
    shape: Tuple[int, int, int],
    probability: float,
    scale_min: float,
    scale_max: float,
    rng: np.random.Generator,
) -> DiversityTransform:
    """
    Samples a random input-diversity transform.

    Args:
        shape: Shape of the images to transform.
        probability: Chance of applying a non-trivial transform.
        scale_min: Smallest fraction of the original side length.
        scale_max: Largest fraction of the original side length.
        rng: The random source.

    Returns:
        The sampled transform.

    """
    if not 0.0 < scale_min <= scale_max <= 1.0:
        raise ImageError(
            f"Invalid diversity scale bounds [{scale_min}, {scale_max}]."
        )
    if not 0.0 <= probability <= 1.0:
        raise ImageError(f"Invalid diversity probability {probability}.")

    height, width = shape[0], shape[1]
    if rng.random() >= probability:
        return DiversityTransform(shape=shape)

    scale = rng.uniform(scale_min, scale_max)
    new_height = max(1, int(round(scale * height)))
    new_width = max(1, int(round(scale * width)))
    if new_height == height and new_width == width:
        return DiversityTransform(shape=shape)

    top = int(rng.integers(0, height - new_height + 1))
    left = int(rng.integers(0, width - new_width + 1))
    return DiversityTransform(
        shape=shape,
        row_matrix=_interpolation_matrix(height, new_height),
        col_matrix=_interpolation_matrix(width, new_width),
        top=top,
        left=left,
    )


def input_diversity(
    x: Image,
    probability: float,
    scale_min: float,
    scale_max: float,
    rng: np.random.Generator,
) -> Image:
    """
    With the given probability, shrinks an image by a random factor and pads
    it back to full size at a random offset.

    Args:
        x: The image to transform.
        probability: Chance of transforming at all.
        scale_min: Smallest fraction of the original side length.
        scale_max: Largest fraction of the original side length.
        rng: The random source.

    Returns:
        The transformed image, with the same shape as `x`.

    """
    transform = sample_diversity(
        x.shape, probability, scale_min, scale_max, rng
    )
    return transform.apply(x)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def perlin_noise(
    height: int,
    width: int,
    grid_cells: int,
    amplitude: float,
    rng: np.random.Generator,
) -> GradientField:
    """
    Generates classic 2D gradient noise over a square lattice.

    Args:
        height: Height of the field.
        width: Width of the field.
        grid_cells: Number of lattice cells along each side.
        amplitude: Largest absolute value of the output.
        rng: The random source for lattice gradients.

    Returns:
        A `(height, width, 3)` field with the same noise in every channel.

    """
    if height < 1 or width < 1:
        raise ImageError(f"Invalid noise dimensions {height}x{width}.")
    if grid_cells < 1:
        raise ImageError(f"Need at least one grid cell, got {grid_cells}.")
    if amplitude < 0.0:
        raise ImageError(f"Amplitude must be non-negative, got {amplitude}.")

    angles = rng.uniform(0.0, 2.0 * np.pi, size=(grid_cells + 1,) * 2)
    grad_y = np.sin(angles)
    grad_x = np.cos(angles)

    # Pixel coordinates in lattice units.
    ys = np.arange(height) * grid_cells / height
    xs = np.arange(width) * grid_cells / width
    y0 = np.floor(ys).astype(int)[:, np.newaxis]
    x0 = np.floor(xs).astype(int)[np.newaxis, :]
    fy = ys[:, np.newaxis] - y0
    fx = xs[np.newaxis, :] - x0

    def corner(dy: int, dx: int) -> np.ndarray:
        return grad_y[y0 + dy, x0 + dx] * (fy - dy) + grad_x[
            y0 + dy, x0 + dx
        ] * (fx - dx)

    u = _fade(fx)
    v = _fade(fy)
    top = corner(0, 0) + u * (corner(0, 1) - corner(0, 0))
    bottom = corner(1, 0) + u * (corner(1, 1) - corner(1, 0))
    noise = top + v * (bottom - top)

    noise = np.clip(noise * _PERLIN_NORMALIZER, -1.0, 1.0) * amplitude
    return np.repeat(noise[:, :, np.newaxis], 3, axis=2)


def adjust_photometric(x: Image, contrast: float, brightness: float) -> Image:
    """
    Scales contrast about mid-grey and shifts brightness.

    Args:
        x: The image to adjust.
        contrast: Positive contrast multiplier.
        brightness: Additive brightness offset.

    Returns:
        The adjusted image, clamped to `[0, 1]`.

    """
    if contrast <= 0.0:
        raise ImageError(f"Contrast must be positive, got {contrast}.")
    if contrast == 1.0 and brightness == 0.0:
        return x.copy()
    return np.clip(contrast * (x - 0.5) + 0.5 + brightness, 0.0, 1.0)


def pixel_variance(x: Image) -> float:
    """
    Args:
        x: The image.

    Returns:
        The population variance over every intensity in the image.

    """
    validate_image(x, check_range=False)
    if np.ptp(x) == 0:
        return 0.0
    return float(np.var(x))


def project_linf(x: Image, candidate: Image, epsilon: float) -> Image:
    """
    Projects a candidate onto the L-infinity ball of radius `epsilon` around
    `x`, intersected with the unit pixel range.

    Args:
        x: The center of the ball.
        candidate: The image to project.
        epsilon: The ball radius.

    Returns:
        The projected image.

    """
    check_same_shape(x, candidate)
    if epsilon < 0.0:
        raise ImageError(f"Epsilon must be non-negative, got {epsilon}.")
    return np.clip(
        np.clip(candidate, x - epsilon, x + epsilon), 0.0, 1.0
    )
