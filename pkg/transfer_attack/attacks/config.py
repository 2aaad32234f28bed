"""
Configuration for the attack streams.
"""


import enum
from typing import Optional, Tuple

from pydantic import BaseModel, Extra, validator

from ..imgmath import DEFAULT_SSIM_WINDOW, GaussianKernel, gaussian_kernel
from ..models.losses import LossConfig

_MIN_STEP = 1.0 / 255.0
"""
Smallest default step size, one 8-bit intensity level.
"""


@enum.unique
class ApwSchedule(str, enum.Enum):
    """
    How often surrogate weights are refreshed during an attack.
    """

    EVERY_ITERATION = "every_iteration"
    ONCE = "once"
    OFF = "off"


@enum.unique
class PreprocessPlacement(str, enum.Enum):
    """
    When preprocessing is applied relative to the attack loop.
    """

    BEFORE = "before"
    AFTER = "after"
    BOTH = "both"


class AttackConfig(BaseModel):
    """
    Hyperparameters shared by both attack streams.

    Attributes:
        alpha: Step size. If None, it is `max(epsilon / 8, 1 / 255)`.
        iterations: Number of attack iterations.
        mu: Momentum decay.
        ti_kernel_size: Side length of the gradient smoothing kernel.
        ti_sigma: Standard deviation of the gradient smoothing kernel.
        di_probability: Chance of applying input diversity per iteration.
        di_scale_min: Smallest input-diversity shrink factor.
        di_scale_max: Largest input-diversity shrink factor.
        lambda_ssim: Weight of the SSIM regularizer.
        ssim_window: SSIM window size, for the loss and for metadata.
        epsilon: Fixed L-infinity budget. If None, it is searched for.
        epsilon_grid: Base grid for the epsilon search, ascending.
        variance_reference: Pixel variance at which the grid is unscaled.
        grid_scale_min: Lower clamp on the grid scale factor.
        grid_scale_max: Upper clamp on the grid scale factor.
        bisection_steps: Refinement steps after the grid search.
        apw_temperature: Softmax temperature for surrogate weighting.
        apw_schedule: How often surrogate weights are refreshed.
        preprocess_placement: When preprocessing is applied.
        sg_surrogate_index: Surrogate used by the saliency-guided stream.
            If None, the most heavily weighted surrogate is used.
        seed: Seed for the attack's random source.

    """

    alpha: Optional[float] = None
    iterations: int = 20
    mu: float = 1.0
    ti_kernel_size: int = 5
    ti_sigma: float = 1.5
    di_probability: float = 0.5
    di_scale_min: float = 0.8
    di_scale_max: float = 1.0
    lambda_ssim: float = 0.3
    ssim_window: int = DEFAULT_SSIM_WINDOW
    epsilon: Optional[float] = None
    epsilon_grid: Tuple[float, ...] = tuple(
        v / 255.0 for v in (2, 4, 6, 8, 12, 16, 24, 32)
    )
    variance_reference: float = 0.05
    grid_scale_min: float = 0.5
    grid_scale_max: float = 2.0
    bisection_steps: int = 5
    apw_temperature: float = 0.5
    apw_schedule: ApwSchedule = ApwSchedule.EVERY_ITERATION
    preprocess_placement: PreprocessPlacement = PreprocessPlacement.BEFORE
    sg_surrogate_index: Optional[int] = None
    seed: int = 0

    class Config:
        extra = Extra.forbid
        allow_mutation = False

    @validator("alpha")
    def alpha_is_positive(cls, alpha: Optional[float]) -> Optional[float]:
        assert alpha is None or alpha > 0.0, "alpha must be positive."
        return alpha

    @validator("iterations")
    def iterations_is_positive(cls, iterations: int) -> int:
        assert iterations >= 1, "Need at least one iteration."
        return iterations

    @validator("mu", "lambda_ssim")
    def is_non_negative(cls, value: float) -> float:
        assert value >= 0.0, "Must be non-negative."
        return value

    @validator("ti_kernel_size", "ssim_window")
    def is_odd(cls, size: int) -> int:
        assert size >= 1 and size % 2 == 1, "Must be odd and positive."
        return size

    @validator("ti_sigma", "variance_reference", "apw_temperature")
    def is_positive(cls, value: float) -> float:
        assert value > 0.0, "Must be positive."
        return value

    @validator("di_probability")
    def probability_in_range(cls, probability: float) -> float:
        assert 0.0 <= probability <= 1.0, "Probability must be in [0, 1]."
        return probability

    @validator("di_scale_max")
    def di_bounds_are_valid(cls, scale_max: float, values: dict) -> float:
        scale_min = values.get("di_scale_min", 0.0)
        assert (
            0.0 < scale_min <= scale_max <= 1.0
        ), "Need 0 < di_scale_min <= di_scale_max <= 1."
        return scale_max

    @validator("epsilon")
    def epsilon_is_non_negative(
        cls, epsilon: Optional[float]
    ) -> Optional[float]:
        assert epsilon is None or epsilon >= 0.0, "Epsilon must be >= 0."
        return epsilon

    @validator("epsilon_grid")
    def grid_is_ascending(cls, grid: Tuple[float, ...]) -> Tuple[float, ...]:
        assert len(grid) > 0, "Epsilon grid must not be empty."
        assert all(
            a < b for a, b in zip(grid, grid[1:])
        ), "Epsilon grid must be strictly ascending."
        return grid

    @validator("grid_scale_max")
    def grid_scale_is_valid(cls, scale_max: float, values: dict) -> float:
        scale_min = values.get("grid_scale_min", 0.0)
        assert (
            0.0 < scale_min <= scale_max
        ), "Need 0 < grid_scale_min <= grid_scale_max."
        return scale_max

    @validator("bisection_steps")
    def bisection_is_non_negative(cls, steps: int) -> int:
        assert steps >= 0, "Bisection steps must be non-negative."
        return steps

    @validator("sg_surrogate_index")
    def index_is_non_negative(cls, index: Optional[int]) -> Optional[int]:
        assert index is None or index >= 0, "Index must be non-negative."
        return index

    def step_size(self, epsilon: float) -> float:
        """
        Args:
            epsilon: The budget of the attack being run.

        Returns:
            The step size to use for that budget.

        """
        if self.alpha is not None:
            return self.alpha
        return max(epsilon / 8.0, _MIN_STEP)

    def loss_config(self) -> LossConfig:
        """
        Returns:
            The total-loss configuration these hyperparameters imply.

        """
        return LossConfig(
            lambda_ssim=self.lambda_ssim, ssim_window=self.ssim_window
        )

    def ti_kernel(self) -> GaussianKernel:
        """
        Returns:
            The gradient smoothing kernel.

        """
        return gaussian_kernel(self.ti_kernel_size, self.ti_sigma)


class PreprocessConfig(BaseModel):
    """
    Photometric preprocessing applied by the momentum stream.

    Attributes:
        contrast: Contrast multiplier about mid-grey.
        brightness: Additive brightness offset.
        perlin_grid_cells: Lattice cells per side for the Perlin noise.
        perlin_amplitude: Peak absolute value of the Perlin noise.

    """

    contrast: float = 0.9
    brightness: float = 0.0
    perlin_grid_cells: int = 8
    perlin_amplitude: float = 2.0 / 255.0

    class Config:
        extra = Extra.forbid
        allow_mutation = False

    @validator("contrast")
    def contrast_is_positive(cls, contrast: float) -> float:
        assert contrast > 0.0, "Contrast must be positive."
        return contrast

    @validator("perlin_grid_cells")
    def grid_cells_is_positive(cls, cells: int) -> int:
        assert cells >= 1, "Need at least one grid cell."
        return cells

    @validator("perlin_amplitude")
    def amplitude_is_non_negative(cls, amplitude: float) -> float:
        assert amplitude >= 0.0, "Amplitude must be non-negative."
        return amplitude

    @classmethod
    def identity(cls) -> "PreprocessConfig":
        """
        Returns:
            A configuration that leaves images unchanged.

        """
        return cls(contrast=1.0, brightness=0.0, perlin_amplitude=0.0)
