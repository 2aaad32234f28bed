"""
Tests for the momentum attack stream.
"""


from typing import List

import numpy as np
import pytest

from transfer_attack.attacks.baselines import pgd_attack
from transfer_attack.attacks.candidate import Stream
from transfer_attack.attacks.config import (
    ApwSchedule,
    AttackConfig,
    PreprocessConfig,
    PreprocessPlacement,
)
from transfer_attack.attacks.mntd_pgd import (
    MomentumState,
    apw_update,
    mntd_pgd_attack,
    mntd_step,
)
from transfer_attack.models.ensemble import SurrogateEnsemble

_PLAIN_PGD = dict(
    mu=0.0,
    ti_kernel_size=1,
    di_probability=0.0,
    lambda_ssim=0.0,
    preprocess_placement=PreprocessPlacement.BEFORE,
)
"""
Settings that switch off every enhancement over plain PGD.
"""


class TestApwUpdate:
    """
    Tests for `apw_update`.
    """

    @pytest.mark.parametrize("seed", range(3))
    def test_probability_vector(self, make_image, make_model, seed) -> None:
        """
        Tests that the weights form a probability vector.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.
            seed: The random seed to use for testing.

        """
        # Arrange.
        ensemble = SurrogateEnsemble([make_model(seed + i) for i in range(3)])

        # Act.
        weights = apw_update(ensemble, make_image(seed), 0.5)

        # Assert.
        assert weights.shape == (3,)
        assert np.all(weights >= 0.0)
        assert weights.sum() == pytest.approx(1.0)

    def test_uniform_for_identical_members(
        self, make_image, make_model
    ) -> None:
        """
        Tests that identical surrogates get identical weights.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        model = make_model(0)
        ensemble = SurrogateEnsemble([model, model, model, model])

        # Act.
        weights = apw_update(ensemble, make_image(0), 0.5)

        # Assert.
        np.testing.assert_allclose(weights, 0.25)

    def test_single_member(self, make_image, make_model) -> None:
        """
        Tests that a single surrogate always gets all the weight.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        ensemble = SurrogateEnsemble([make_model(0)])
        weights = apw_update(ensemble, make_image(0), 0.5)
        np.testing.assert_array_equal(weights, [1.0])

    def test_equivariance(self, make_image, make_model) -> None:
        """
        Tests that permuting the surrogates permutes their weights.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        models = [make_model(i) for i in range(4)]
        permutation = [2, 0, 3, 1]
        image = make_image(1)

        # Act.
        weights = apw_update(SurrogateEnsemble(models), image, 0.5)
        permuted = apw_update(
            SurrogateEnsemble([models[i] for i in permutation]), image, 0.5
        )

        # Assert.
        np.testing.assert_allclose(permuted, weights[permutation])

    def test_harder_surrogate_weighs_more(
        self, mocker, make_image, make_model
    ) -> None:
        """
        Tests that the surrogate more confident in Fake gets more weight.

        Args:
            mocker: The fixture to use for mocking.
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        mocker.patch(
            "transfer_attack.attacks.mntd_pgd.probabilities",
            side_effect=[np.array([0.9, 0.1]), np.array([0.1, 0.9])],
        )
        ensemble = SurrogateEnsemble([make_model(0), make_model(1)])

        # Act.
        weights = apw_update(ensemble, make_image(0), 1.0)

        # Assert.
        expected = np.exp([0.9, 0.1]) / np.exp([0.9, 0.1]).sum()
        np.testing.assert_allclose(weights, expected)
        assert weights[0] > weights[1]


class TestMntdStep:
    """
    Tests for `mntd_step`.
    """

    @pytest.mark.parametrize("seed", range(3))
    def test_stays_in_budget(self, make_image, make_model, seed) -> None:
        """
        Tests that a step stays inside the budget and the pixel range, and
        advances the step counter.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.
            seed: The random seed to use for testing.

        """
        # Arrange.
        x = make_image(seed)
        ensemble = SurrogateEnsemble([make_model(seed), make_model(seed + 5)])
        cfg = AttackConfig(ti_kernel_size=3, di_probability=1.0)
        epsilon = 4.0 / 255.0
        rng = np.random.default_rng(seed)

        # Act.
        x_adv, state = mntd_step(
            x, x, MomentumState.zeros_like(x), ensemble, cfg, epsilon, rng
        )

        # Assert.
        assert np.abs(x_adv - x).max() <= epsilon + 1e-12
        assert x_adv.min() >= 0.0 and x_adv.max() <= 1.0
        assert state.t == 1
        assert state.g.shape == x.shape

    def test_zero_step_size(self, make_image, make_model) -> None:
        """
        Tests that a zero step size leaves the image where it is.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        x = make_image(0)
        x_adv = np.clip(x + 1.0 / 255.0, 0.0, 1.0)
        ensemble = SurrogateEnsemble([make_model(0)])

        # Act.
        next_adv, state = mntd_step(
            x,
            x_adv,
            MomentumState.zeros_like(x),
            ensemble,
            AttackConfig(),
            8.0 / 255.0,
            np.random.default_rng(0),
            alpha=0.0,
        )

        # Assert.
        np.testing.assert_array_equal(next_adv, x_adv)
        assert state.t == 1


class TestMntdPgdAttack:
    """
    Tests for `mntd_pgd_attack`.
    """

    @pytest.mark.parametrize("seed", range(10))
    def test_collapses_to_pgd(self, make_image, make_model, seed) -> None:
        """
        Tests that with every enhancement disabled, each iterate is
        bit-identical to plain targeted PGD.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.
            seed: The random seed to use for testing.

        """
        # Arrange.
        x = make_image(seed)
        model = make_model(seed)
        epsilon = 8.0 / 255.0
        cfg = AttackConfig(iterations=5, seed=seed, **_PLAIN_PGD)
        iterates: List[np.ndarray] = []

        # Act.
        candidate = mntd_pgd_attack(
            x,
            SurrogateEnsemble([model]),
            cfg,
            epsilon,
            PreprocessConfig.identity(),
            on_iterate=iterates.append,
        )

        # Assert.
        assert len(iterates) == cfg.iterations + 1
        alpha = cfg.step_size(epsilon)
        for steps, iterate in enumerate(iterates):
            expected = pgd_attack(x, model, epsilon, alpha, steps)
            np.testing.assert_array_equal(iterate, expected)
        np.testing.assert_array_equal(candidate.image, iterates[-1])

    def test_zero_budget(self, make_image, make_model) -> None:
        """
        Tests that a zero budget returns the original image.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        x = make_image(0)
        ensemble = SurrogateEnsemble([make_model(0), make_model(1)])

        # Act.
        candidate = mntd_pgd_attack(x, ensemble, AttackConfig(), 0.0)

        # Assert.
        np.testing.assert_array_equal(candidate.image, x)
        assert candidate.epsilon_used == 0.0
        assert candidate.ssim_to_original == 1.0

    @pytest.mark.parametrize("levels", [2, 4, 8, 16])
    @pytest.mark.parametrize("placement", list(PreprocessPlacement))
    def test_every_iterate_in_budget(
        self, make_image, make_model, levels: int, placement
    ) -> None:
        """
        Tests that every intermediate image respects the budget and the
        pixel range, whatever the preprocessing placement.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.
            levels: The budget, in 8-bit intensity levels.
            placement: When preprocessing is applied.

        """
        # Arrange.
        x = make_image(levels)
        ensemble = SurrogateEnsemble([make_model(0), make_model(1)])
        epsilon = levels / 255.0
        cfg = AttackConfig(iterations=4, preprocess_placement=placement)
        pre_cfg = PreprocessConfig(contrast=0.8, perlin_amplitude=0.1)
        iterates: List[np.ndarray] = []

        # Act.
        candidate = mntd_pgd_attack(
            x, ensemble, cfg, epsilon, pre_cfg, on_iterate=iterates.append
        )

        # Assert.
        for iterate in iterates:
            assert np.abs(iterate - x).max() <= epsilon + 1e-12
            assert iterate.min() >= 0.0 and iterate.max() <= 1.0
        assert np.abs(candidate.delta).max() <= epsilon + 1e-12

    def test_deterministic(self, make_image, make_model) -> None:
        """
        Tests that the same seed gives the same candidate.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        x = make_image(0)
        ensemble = SurrogateEnsemble([make_model(0), make_model(1)])
        cfg = AttackConfig(iterations=5, di_probability=0.7, seed=11)

        # Act.
        first = mntd_pgd_attack(x, ensemble, cfg, 8.0 / 255.0)
        second = mntd_pgd_attack(x, ensemble, cfg, 8.0 / 255.0)

        # Assert.
        np.testing.assert_array_equal(first.image, second.image)
        assert first.surrogate_fooled == second.surrogate_fooled

    @pytest.mark.parametrize(
        "placement", [PreprocessPlacement.AFTER, PreprocessPlacement.BOTH]
    )
    def test_identity_preprocessing_placement(
        self, make_image, make_model, placement
    ) -> None:
        """
        Tests that placement makes no difference when preprocessing does
        nothing.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.
            placement: The placement to compare against `BEFORE`.

        """
        # Arrange.
        x = make_image(2)
        ensemble = SurrogateEnsemble([make_model(2), make_model(3)])
        before = AttackConfig(iterations=3)
        other = AttackConfig(iterations=3, preprocess_placement=placement)
        identity = PreprocessConfig.identity()

        # Act.
        expected = mntd_pgd_attack(x, ensemble, before, 0.05, identity)
        actual = mntd_pgd_attack(x, ensemble, other, 0.05, identity)

        # Assert.
        np.testing.assert_array_equal(actual.image, expected.image)

    def test_metadata(self, make_image, make_model) -> None:
        """
        Tests the recorded stream, fooled bits and SSIM.

        Args:
            make_image: Fixture for making images.
            make_model: Fixture for making classifiers.

        """
        # Arrange.
        x = make_image(0)
        ensemble = SurrogateEnsemble([make_model(i) for i in range(3)])
        cfg = AttackConfig(iterations=3, apw_schedule=ApwSchedule.ONCE)

        # Act.
        candidate = mntd_pgd_attack(x, ensemble, cfg, 4.0 / 255.0)

        # Assert.
        assert candidate.stream == Stream.MNTD_PGD
        assert len(candidate.surrogate_fooled) == 3
        assert 0.0 < candidate.ssim_to_original <= 1.0
        np.testing.assert_allclose(candidate.original, x, atol=1e-12)
