"""Tests for BYOL pre-training and encoder transfer."""

from unittest.mock import Mock

import numpy as np
import pytest
from prometheus_client import REGISTRY

from app.exceptions import ConfigurationError, DegenerateInputException, DimensionMismatchException
from app.models.byol import ByolState
from app.models.network import Activation, DenseBlock
from app.schemas.dataset_schema import SyntheticConfig
from app.schemas.training_schema import AugmentSpec, ByolConfig
from app.services.classifier_service import ClassifierService
from app.services.dataset_service import DatasetService
from app.services.pretrain_service import PretrainService
from app.utils.dense_ops import block_forward
from tests.testing_utils import finite_difference_block_gradients, make_archive


def _constant_block(value: float, shapes: list[tuple[int, int]]) -> DenseBlock:
    return DenseBlock(
        input_dim=shapes[0][0],
        weights=tuple(np.full(shape, value) for shape in shapes),
        biases=tuple(np.full(shape[1], value) for shape in shapes),
    )


def _state(online: float, target: float, tau: float) -> ByolState:
    encoder_shapes = [(3, 2)]
    projector_shapes = [(2, 4), (4, 2)]
    return ByolState(
        online_encoder=_constant_block(online, encoder_shapes),
        online_projector=_constant_block(online, projector_shapes),
        online_predictor=_constant_block(online, projector_shapes),
        target_encoder=_constant_block(target, encoder_shapes),
        target_projector=_constant_block(target, projector_shapes),
        tau=tau,
    )


class TestAugment:
    """Test vector-data augmentation."""

    def test_no_noise_and_no_masking_is_the_identity(self, pretrain_service: PretrainService, rng):
        x = rng.standard_normal((4, 3))

        augmented = pretrain_service.augment(x, AugmentSpec(noise_std=0.0, mask_prob=0.0), rng)

        np.testing.assert_array_equal(augmented, x)

    def test_masked_coordinates_are_zeroed(self, pretrain_service: PretrainService):
        rigged = Mock(spec=np.random.Generator)
        rigged.standard_normal.return_value = np.ones((2, 3))
        rigged.random.return_value = np.zeros((2, 3))

        augmented = pretrain_service.augment(np.full((2, 3), 5.0), AugmentSpec(noise_std=1.0, mask_prob=0.5), rigged)

        np.testing.assert_array_equal(augmented, np.zeros((2, 3)))

    def test_unmasked_coordinates_get_scaled_noise(self, pretrain_service: PretrainService):
        rigged = Mock(spec=np.random.Generator)
        rigged.standard_normal.return_value = np.ones((1, 2))
        rigged.random.return_value = np.ones((1, 2))

        augmented = pretrain_service.augment(np.array([[1.0, 2.0]]), AugmentSpec(noise_std=0.5, mask_prob=0.5), rigged)

        np.testing.assert_array_equal(augmented, [[1.5, 2.5]])

    def test_same_seed_same_views(self, pretrain_service: PretrainService, rng):
        x = rng.standard_normal((5, 4))
        spec = AugmentSpec(noise_std=0.3, mask_prob=0.2)

        first = pretrain_service.augment(x, spec, np.random.default_rng(3))
        second = pretrain_service.augment(x, spec, np.random.default_rng(3))

        np.testing.assert_array_equal(first, second)


class TestByolLoss:
    """Test the normalized BYOL regression loss."""

    def test_parallel_vectors_cost_nothing(self, pretrain_service: PretrainService):
        assert pretrain_service.byol_loss([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(0.0, abs=1e-12)

    def test_antiparallel_vectors_cost_four(self, pretrain_service: PretrainService):
        assert pretrain_service.byol_loss([1.0, -1.0], [-3.0, 3.0]) == pytest.approx(4.0, abs=1e-12)

    def test_orthogonal_vectors_cost_two(self, pretrain_service: PretrainService):
        assert pretrain_service.byol_loss([1.0, 0.0], [0.0, 5.0]) == pytest.approx(2.0, abs=1e-12)

    def test_equals_two_minus_twice_the_cosine(self, pretrain_service: PretrainService, rng):
        for _ in range(1000):
            u = rng.standard_normal(6)
            v = rng.standard_normal(6)
            cos = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))

            assert pretrain_service.byol_loss(u, v) == pytest.approx(2.0 - 2.0 * cos, abs=1e-9)

    def test_invariant_to_positive_scaling(self, pretrain_service: PretrainService, rng):
        u = rng.standard_normal(4)
        v = rng.standard_normal(4)

        assert pretrain_service.byol_loss(7.5 * u, 0.01 * v) == pytest.approx(pretrain_service.byol_loss(u, v))

    def test_zero_vector_rejected(self, pretrain_service: PretrainService):
        with pytest.raises(DegenerateInputException):
            pretrain_service.byol_loss([0.0, 0.0], [1.0, 0.0])


class TestEmaUpdate:
    """Test the exponential moving average of the target twins."""

    def test_tau_one_keeps_the_target(self, pretrain_service: PretrainService):
        state = _state(online=4.0, target=2.0, tau=1.0)

        updated = pretrain_service.ema_update(state)

        np.testing.assert_array_equal(updated.target_encoder.weights[0], state.target_encoder.weights[0])
        np.testing.assert_array_equal(updated.target_projector.biases[1], state.target_projector.biases[1])

    def test_tau_zero_copies_the_online_blocks(self, pretrain_service: PretrainService):
        updated = pretrain_service.ema_update(_state(online=4.0, target=2.0, tau=0.0))

        np.testing.assert_array_equal(updated.target_encoder.weights[0], np.full((3, 2), 4.0))
        np.testing.assert_array_equal(updated.target_projector.weights[1], np.full((4, 2), 4.0))

    def test_half_blends_the_midpoint(self, pretrain_service: PretrainService):
        updated = pretrain_service.ema_update(_state(online=4.0, target=2.0, tau=0.5))

        np.testing.assert_array_equal(updated.target_encoder.weights[0], np.full((3, 2), 3.0))

    def test_two_updates_equal_one_with_tau_squared(self, pretrain_service: PretrainService):
        twice = pretrain_service.ema_update(pretrain_service.ema_update(_state(online=4.0, target=2.0, tau=0.9)))
        once = pretrain_service.ema_update(_state(online=4.0, target=2.0, tau=0.81))

        np.testing.assert_allclose(twice.target_encoder.weights[0], once.target_encoder.weights[0], rtol=1e-12)

    def test_online_blocks_are_not_touched(self, pretrain_service: PretrainService):
        state = _state(online=4.0, target=2.0, tau=0.5)

        updated = pretrain_service.ema_update(state)

        assert updated.online_encoder is state.online_encoder
        assert updated.online_predictor is state.online_predictor

    def test_mismatched_twin_shapes_rejected(self):
        with pytest.raises(DimensionMismatchException):
            ByolState(
                online_encoder=_constant_block(1.0, [(3, 2)]),
                online_projector=_constant_block(1.0, [(2, 2)]),
                online_predictor=_constant_block(1.0, [(2, 2)]),
                target_encoder=_constant_block(1.0, [(3, 5)]),
                target_projector=_constant_block(1.0, [(2, 2)]),
                tau=0.5,
            )


class TestPretrain:
    """Test the BYOL training loop."""

    @pytest.fixture
    def unlabeled(self, dataset_service: DatasetService):
        config = SyntheticConfig(
            num_classes=3, feature_dim=8, num_samples=200, class_priors=[0.5, 0.4, 0.3], noise_std=0.3, seed=2
        )
        return dataset_service.generate_synthetic(config)

    def test_zero_learning_rate_keeps_the_initial_encoder(self, pretrain_service: PretrainService):
        archive = make_archive([[0.5, -1.0, 2.0]], [[1]])
        config = ByolConfig(hidden_sizes=[4], epochs=1, batch_size=1, learning_rate=0.0, seed=6)

        result = pretrain_service.pretrain(archive, config)

        initial = pretrain_service.init_state(3, config, np.random.default_rng(6)).online_encoder
        np.testing.assert_array_equal(result.encoder.weights[0], initial.weights[0])
        np.testing.assert_array_equal(result.encoder.biases[0], initial.biases[0])

    def test_same_seed_same_encoder_and_losses(self, pretrain_service: PretrainService, unlabeled):
        config = ByolConfig(hidden_sizes=[6], epochs=2, batch_size=50, seed=1)

        first = pretrain_service.pretrain(unlabeled, config)
        second = pretrain_service.pretrain(unlabeled, config)

        assert first.epoch_losses == second.epoch_losses
        np.testing.assert_array_equal(first.encoder.weights[0], second.encoder.weights[0])

    def test_loss_decreases(self, pretrain_service: PretrainService, unlabeled):
        config = ByolConfig(hidden_sizes=[8], epochs=30, batch_size=50, learning_rate=0.05, seed=0)

        result = pretrain_service.pretrain(unlabeled, config)

        assert len(result.epoch_losses) == 30
        assert result.epoch_losses[-1] < result.epoch_losses[0]

    def test_target_with_tau_one_never_moves(self, pretrain_service: PretrainService, unlabeled):
        config = ByolConfig(hidden_sizes=[5], epochs=2, batch_size=40, tau=1.0, seed=3)

        result = pretrain_service.pretrain(unlabeled, config)

        initial = pretrain_service.init_state(unlabeled.d, config, np.random.default_rng(3))
        assert result.state is not None
        np.testing.assert_array_equal(result.state.target_encoder.weights[0], initial.online_encoder.weights[0])
        assert not np.array_equal(result.state.online_encoder.weights[0], initial.online_encoder.weights[0])

    def test_momentum_changes_the_trajectory(self, pretrain_service: PretrainService, unlabeled):
        plain = pretrain_service.pretrain(unlabeled, ByolConfig(hidden_sizes=[5], epochs=2, batch_size=40))
        heavy = pretrain_service.pretrain(unlabeled, ByolConfig(hidden_sizes=[5], epochs=2, batch_size=40, momentum=0.9))

        assert not np.array_equal(plain.encoder.weights[0], heavy.encoder.weights[0])

    def test_epochs_are_counted(self, pretrain_service: PretrainService, unlabeled):
        before = REGISTRY.get_sample_value("ssl_pretrain_epochs_total") or 0.0

        pretrain_service.pretrain(unlabeled, ByolConfig(hidden_sizes=[4], epochs=3, batch_size=100))

        assert REGISTRY.get_sample_value("ssl_pretrain_epochs_total") == before + 3

    def test_empty_archive_rejected(self, pretrain_service: PretrainService):
        empty = make_archive(np.zeros((0, 3)), np.zeros((0, 1)))

        with pytest.raises(ConfigurationError):
            pretrain_service.pretrain(empty, ByolConfig(hidden_sizes=[4], epochs=1))

    @pytest.mark.parametrize("seed", range(3))
    def test_online_gradients_match_finite_differences(self, pretrain_service: PretrainService, seed: int):
        rng = np.random.default_rng(seed)
        config = ByolConfig(hidden_sizes=[4], activation=Activation.TANH)
        online = pretrain_service.init_state(3, config, rng)
        target = pretrain_service.init_state(3, config, rng)
        state = ByolState(
            online_encoder=online.online_encoder,
            online_projector=online.online_projector,
            online_predictor=online.online_predictor,
            target_encoder=target.online_encoder,
            target_projector=target.online_projector,
            tau=config.tau,
        )
        view_a = rng.standard_normal((5, 3))
        view_b = rng.standard_normal((5, 3))

        _, grads_enc, grads_proj, grads_pred = pretrain_service._batch_loss_and_grads(state, view_a, view_b)

        def loss(encoder: DenseBlock, projector: DenseBlock, predictor: DenseBlock) -> float:
            return pretrain_service._batch_loss_and_grads(state.with_online(encoder, projector, predictor), view_a, view_b)[0]

        cases = [
            (grads_enc, state.online_encoder, lambda block: loss(block, state.online_projector, state.online_predictor)),
            (grads_proj, state.online_projector, lambda block: loss(state.online_encoder, block, state.online_predictor)),
            (grads_pred, state.online_predictor, lambda block: loss(state.online_encoder, state.online_projector, block)),
        ]
        for analytic, block, block_loss in cases:
            numeric_w, numeric_b = finite_difference_block_gradients(block_loss, block)
            for layer in range(block.num_layers):
                np.testing.assert_allclose(analytic.weights[layer], numeric_w[layer], rtol=1e-5, atol=1e-8)
                np.testing.assert_allclose(analytic.biases[layer], numeric_b[layer], rtol=1e-5, atol=1e-8)


class TestTransfer:
    """Test building a classifier on a pre-trained encoder."""

    def test_encoder_output_becomes_the_penultimate_feature(
        self, pretrain_service: PretrainService, classifier_service: ClassifierService, rng
    ):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder
        x = rng.standard_normal((3, 4))

        params = pretrain_service.transfer(encoder, 5, seed=0)

        assert params.encoder is encoder
        assert params.head_weight.shape == (6, 5)
        np.testing.assert_array_equal(classifier_service.forward(params, x).penultimate, block_forward(encoder, x)[0])

    def test_zero_head_predicts_one_half(
        self, pretrain_service: PretrainService, classifier_service: ClassifierService, rng
    ):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder
        params = pretrain_service.transfer(encoder, 2, seed=0)
        params = params.with_head(np.zeros((6, 2)), np.zeros(2))

        np.testing.assert_array_equal(classifier_service.forward(params, rng.standard_normal(4)).probs, [0.5, 0.5])

    def test_different_seeds_share_the_encoder_but_not_the_head(self, pretrain_service: PretrainService, rng):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder

        first = pretrain_service.transfer(encoder, 3, seed=1)
        second = pretrain_service.transfer(encoder, 3, seed=2)

        assert first.encoder is second.encoder
        assert not np.array_equal(first.head_weight, second.head_weight)

    def test_zero_classes_rejected(self, pretrain_service: PretrainService, rng):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder

        with pytest.raises(ConfigurationError):
            pretrain_service.transfer(encoder, 0, seed=0)

    def test_matching_widths_are_accepted(self, pretrain_service: PretrainService, rng):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6, 3]), rng).online_encoder

        params = pretrain_service.transfer(encoder, 2, seed=0, input_dim=4, hidden_sizes=[6, 3])

        assert params.head_weight.shape == (3, 2)

    def test_other_input_width_rejected(self, pretrain_service: PretrainService, rng):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder

        with pytest.raises(DimensionMismatchException, match="input width"):
            pretrain_service.transfer(encoder, 2, seed=0, input_dim=5)

    @pytest.mark.parametrize("hidden_sizes", [[8], [6, 6], []])
    def test_other_hidden_widths_rejected(self, pretrain_service: PretrainService, rng, hidden_sizes: list[int]):
        encoder = pretrain_service.init_state(4, ByolConfig(hidden_sizes=[6]), rng).online_encoder

        with pytest.raises(DimensionMismatchException, match="hidden widths"):
            pretrain_service.transfer(encoder, 2, seed=0, input_dim=4, hidden_sizes=hidden_sizes)
