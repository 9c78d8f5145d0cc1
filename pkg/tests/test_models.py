import numpy as np
import pytest
import torch

from dataio.windows import SignalSource
from models.auth_model import build_auth_model
from models.config import ModelConfig
from models.hybrid_model import (
    ChannelScaler,
    TrainedModel,
    build_classifier_head,
    build_cnn_branch,
    build_model,
    count_parameters,
    predict_proba,
)
from nnlib.layers import LayerShapeError


def _branch_params(channels: int) -> int:
    # conv1 + LN, depthwise + LN, conv3 + LN
    return 32 * 10 + 64 + 64 * channels + 128 + 128 * 64 * 10 + 256


def _head_params(d: int, n_classes: int = 12) -> int:
    attention = 4 * d * d + 4 * d
    dilated = (d * 32 * 3 + 32) + (32 * 32 * 3 + 32)
    dense = 32 * 20 * n_classes + n_classes
    return attention + dilated + dense


@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)


class TestConfig:
    def test_derived_sizes(self):
        cfg = ModelConfig()
        assert cfg.conv1_kernel == (1, 10)
        assert cfg.feature_len == 20
        assert cfg.window_steps == 5
        assert cfg.feature_dim == 256 and cfg.n_channels == 7
        assert ModelConfig(signal_source="hbc").feature_dim == 128
        assert ModelConfig(signal_source="imu").n_channels == 6

    def test_rejects_indivisible_windows(self):
        with pytest.raises(ValueError):
            ModelConfig(n_attention_windows=3)

    def test_dict_round_trip(self):
        cfg = ModelConfig(signal_source=SignalSource.IMU, dropout=0.2)
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg


class TestShapes:
    @pytest.mark.parametrize("source,channels", [("hbc", 1), ("imu", 6), ("combined", 7)])
    def test_forward_shapes(self, source, channels):
        cfg = ModelConfig(signal_source=source)
        model = build_model(cfg).eval()
        x = torch.randn(3, 1, channels, 80)
        assert model.features(x).shape == (3, cfg.feature_dim, 20)
        p = model(x)
        assert p.shape == (3, 12)
        np.testing.assert_allclose(p.sum(dim=1).detach().numpy(), 1.0, rtol=1e-5)

    def test_branch_output(self):
        branch = build_cnn_branch(ModelConfig(), 6).eval()
        assert branch(torch.randn(2, 1, 6, 80)).shape == (2, 128, 20)

    def test_branch_rejects_other_channel_counts(self):
        with pytest.raises(ValueError):
            build_cnn_branch(ModelConfig(), 3)

    def test_head_accepts_features_only(self):
        head = build_classifier_head(ModelConfig(signal_source="hbc")).eval()
        assert head(torch.randn(2, 128, 20)).shape == (2, 12)
        with pytest.raises(LayerShapeError):
            head(torch.randn(2, 128, 18))

    def test_wrong_channel_count(self):
        model = build_model(ModelConfig(signal_source="imu"))
        with pytest.raises(LayerShapeError):
            model(torch.randn(2, 1, 7, 80))

    def test_three_dim_input_is_accepted(self):
        model = build_model(ModelConfig(signal_source="hbc")).eval()
        assert model(torch.randn(4, 1, 80)).shape == (4, 12)

    def test_unshared_windows(self):
        cfg = ModelConfig(signal_source="hbc", share_window_weights=False)
        model = build_model(cfg).eval()
        assert model(torch.randn(2, 1, 1, 80)).shape == (2, 12)
        assert len(model.head.blocks) == 4

    def test_shared_windows_commute_with_window_order(self):
        head = build_classifier_head(ModelConfig(signal_source="hbc")).eval().double()
        feat = torch.randn(2, 128, 20, dtype=torch.float64)
        perm = [2, 0, 3, 1]

        def by_window(t):
            return t.reshape(t.shape[0], t.shape[1], 4, 5)

        shuffled = by_window(feat)[:, :, perm].reshape(2, 128, 20)
        with torch.no_grad():
            out = by_window(head.window_features(feat))
            out_shuffled = by_window(head.window_features(shuffled))
        assert out.shape == (2, 32, 4, 5)
        np.testing.assert_allclose(out_shuffled.numpy(), out[:, :, perm].numpy(), atol=1e-10)

    @pytest.mark.parametrize("rows", [slice(0, 1), slice(1, 7)])
    def test_combined_model_with_a_silent_modality(self, rows):
        model = build_model(ModelConfig(signal_source="combined")).eval()
        x = torch.randn(6, 1, 7, 80)
        x[:, :, rows] = 0.0
        with torch.no_grad():
            p = model(x)
        assert torch.isfinite(p).all()
        assert (p >= 0).all()
        np.testing.assert_allclose(p.sum(dim=1).numpy(), 1.0, rtol=1e-5)

    def test_auth_model(self):
        cfg = ModelConfig(signal_source="imu", n_classes=10)
        model = build_auth_model(cfg).eval()
        assert model(torch.randn(5, 1, 6, 80)).shape == (5, 10)
        assert count_parameters(model) == _branch_params(6) + 128 * 20 * 10 + 10


class TestParameterCounts:
    @pytest.mark.parametrize("source", ["hbc", "imu", "combined"])
    def test_counts_follow_layer_sizes(self, source):
        cfg = ModelConfig(signal_source=source)
        branches = sum(_branch_params(c) for _, c in cfg.branches)
        assert count_parameters(build_model(cfg)) == branches + _head_params(cfg.feature_dim)

    def test_hbc_total(self):
        assert count_parameters(build_model(ModelConfig(signal_source="hbc"))) == 82752 + 89164


class TestChannelScaler:
    def test_standardizes_each_channel(self):
        rng = np.random.default_rng(1)
        X = np.stack([rng.normal(1650.0, 3.0, (50, 80)), rng.normal(0.0, 0.5, (50, 80))], axis=1)
        scaler = ChannelScaler(2).fit(X)
        y = scaler(torch.as_tensor(X, dtype=torch.float32).unsqueeze(1)).numpy()
        np.testing.assert_allclose(y[:, 0].mean(axis=(0, 2)), 0.0, atol=1e-3)
        np.testing.assert_allclose(y[:, 0].std(axis=(0, 2)), 1.0, atol=1e-3)

    def test_constant_channel_passes_centered(self):
        scaler = ChannelScaler(1).fit(np.full((4, 1, 80), 7.0))
        assert float(scaler.scale[0]) == 1.0
        assert float(scaler(torch.full((1, 1, 1, 80), 7.0)).abs().max()) == 0.0

    def test_statistics_are_saved_with_the_model(self):
        model = build_model(ModelConfig(signal_source="hbc"))
        model.backbone.scaler.fit(np.full((3, 1, 80), 1650.0) + np.arange(80))
        assert "backbone.scaler.mean" in model.state_dict()


class TestTrainedModel:
    def test_checkpoint_round_trip(self, tmp_path):
        cfg = ModelConfig(signal_source="hbc")
        model = build_model(cfg).eval()
        model.backbone.scaler.fit(np.random.default_rng(0).normal(1650.0, 2.0, (8, 1, 80)))
        trained = TrainedModel(config=cfg, model=model, fold="S3", epochs_run=12, best_epoch=7, seed=5)
        path = trained.save(tmp_path / "fold.pt")
        back = TrainedModel.load(path)
        assert back.fold == "S3" and back.epochs_run == 12 and back.best_epoch == 7
        x = np.random.default_rng(2).normal(1650.0, 2.0, (6, 1, 80)).astype(np.float32)
        np.testing.assert_allclose(back.predict_proba(x), trained.predict_proba(x), rtol=1e-6)

    def test_auth_checkpoint_restores_kind(self, tmp_path):
        cfg = ModelConfig(signal_source="hbc", n_classes=4)
        trained = TrainedModel(config=cfg, model=build_auth_model(cfg))
        back = TrainedModel.load(trained.save(tmp_path / "auth.pt"))
        assert back.kind == "authentication"
        assert back.config.n_classes == 4

    def test_predict_proba_batches(self):
        model = build_model(ModelConfig(signal_source="hbc"))
        x = np.random.default_rng(3).normal(size=(7, 1, 80))
        full = predict_proba(model, x, batch_size=100)
        chunked = predict_proba(model, x, batch_size=3)
        np.testing.assert_allclose(full, chunked, rtol=1e-5, atol=1e-7)
        assert model.training
