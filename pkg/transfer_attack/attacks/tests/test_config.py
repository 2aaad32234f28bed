"""
Tests for attack configuration.
"""


import pytest
from pydantic import ValidationError

from transfer_attack.attacks.config import (
    ApwSchedule,
    AttackConfig,
    PreprocessConfig,
)


class TestAttackConfig:
    """
    Tests for the `AttackConfig` class.
    """

    def test_defaults(self) -> None:
        """
        Tests the documented defaults.
        """
        # Act.
        cfg = AttackConfig()

        # Assert.
        assert cfg.iterations == 20
        assert cfg.mu == 1.0
        assert (cfg.ti_kernel_size, cfg.ti_sigma) == (5, 1.5)
        assert cfg.di_probability == 0.5
        assert cfg.epsilon_grid[0] == pytest.approx(2.0 / 255.0)
        assert cfg.epsilon_grid[-1] == pytest.approx(32.0 / 255.0)
        assert cfg.bisection_steps == 5
        assert cfg.apw_schedule == ApwSchedule.EVERY_ITERATION

    @pytest.mark.parametrize(
        ("epsilon", "expected"),
        [
            (16.0 / 255.0, 2.0 / 255.0),
            (2.0 / 255.0, 1.0 / 255.0),
            (0.0, 1.0 / 255.0),
        ],
    )
    def test_step_size(self, epsilon: float, expected: float) -> None:
        """
        Tests that the default step size is epsilon / 8, but never below
        one intensity level.

        Args:
            epsilon: The budget.
            expected: The expected step size.

        """
        assert AttackConfig().step_size(epsilon) == pytest.approx(expected)

    def test_explicit_step_size(self) -> None:
        """
        Tests that a configured step size overrides the default.
        """
        assert AttackConfig(alpha=0.01).step_size(0.5) == 0.01

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(alpha=0.0),
            dict(iterations=0),
            dict(mu=-0.1),
            dict(ti_kernel_size=4),
            dict(di_probability=1.5),
            dict(di_scale_min=0.9, di_scale_max=0.8),
            dict(epsilon=-0.01),
            dict(epsilon_grid=()),
            dict(epsilon_grid=(0.2, 0.1)),
            dict(grid_scale_min=2.0, grid_scale_max=1.0),
            dict(apw_temperature=0.0),
            dict(sg_surrogate_index=-1),
            dict(apw_schedule="sometimes"),
            dict(unknown_field=1),
        ],
    )
    def test_invalid(self, overrides: dict) -> None:
        """
        Tests that invalid values are rejected.

        Args:
            overrides: The invalid settings.

        """
        with pytest.raises(ValidationError):
            AttackConfig(**overrides)

    def test_immutable(self) -> None:
        """
        Tests that configurations cannot be changed after creation.
        """
        cfg = AttackConfig()
        with pytest.raises(TypeError):
            cfg.iterations = 5

    def test_derived(self) -> None:
        """
        Tests the loss configuration and kernel derived from the settings.
        """
        # Arrange.
        cfg = AttackConfig(lambda_ssim=0.7, ssim_window=5, ti_kernel_size=3)

        # Act.
        loss_cfg = cfg.loss_config()
        kernel = cfg.ti_kernel()

        # Assert.
        assert loss_cfg.lambda_ssim == 0.7
        assert loss_cfg.ssim_window == 5
        assert kernel.weights.shape == (3, 3)


class TestPreprocessConfig:
    """
    Tests for the `PreprocessConfig` class.
    """

    def test_identity(self) -> None:
        """
        Tests the identity configuration.
        """
        cfg = PreprocessConfig.identity()
        assert (cfg.contrast, cfg.brightness, cfg.perlin_amplitude) == (
            1.0,
            0.0,
            0.0,
        )

    @pytest.mark.parametrize(
        "overrides",
        [
            dict(contrast=0.0),
            dict(perlin_grid_cells=0),
            dict(perlin_amplitude=-1.0),
        ],
    )
    def test_invalid(self, overrides: dict) -> None:
        """
        Tests that invalid values are rejected.

        Args:
            overrides: The invalid settings.

        """
        with pytest.raises(ValidationError):
            PreprocessConfig(**overrides)
