"""Run-config document: precedence, strictness, and conversion to the
internal dataclasses."""

import json

import pytest

from dialectid.config import CONFIG_ENV_VAR, RunConfig, load_run_config
from dialectid.errors import ConfigurationError


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestDefaults:
    def test_built_in_defaults(self):
        cfg = load_run_config(None)
        assert cfg.features.n_ceps == 80
        assert cfg.training.epochs_total == 100
        assert cfg.inference.cohort_size == 500
        assert cfg.inference.combine_weight == 0.5

    def test_sections_convert_to_dataclasses(self):
        cfg = RunConfig()
        assert cfg.features.to_mfcc_config().fft_size == 512
        assert cfg.training.to_train_config().batch_size == 32
        assert cfg.augmentation.to_policy().noise_enabled

    def test_model_config_for_both_architectures(self):
        cfg = RunConfig()
        resnet = cfg.model_config_for("resnet34", n_classes=5, in_dim=80)
        ecapa = cfg.model_config_for("ecapa", n_classes=17, in_dim=1024)
        assert resnet.embed_dim == 256 and resnet.n_classes == 5
        assert ecapa.embed_dim == 192 and ecapa.in_dim == 1024

    def test_unknown_architecture_rejected(self):
        with pytest.raises(ConfigurationError, match="architecture"):
            RunConfig().model_config_for("transformer", 2, 80)


class TestLoading:
    def test_explicit_path_overrides(self, tmp_path):
        path = write_config(tmp_path, {"training": {"batch_size": 8}})
        cfg = load_run_config(path)
        assert cfg.training.batch_size == 8
        assert cfg.training.epochs_total == 100  # untouched default

    def test_env_var_used_when_no_path(self, tmp_path, monkeypatch):
        path = write_config(tmp_path, {"inference": {"cohort_size": 7}})
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        assert load_run_config(None).inference.cohort_size == 7

    def test_explicit_path_beats_env_var(self, tmp_path, monkeypatch):
        env_path = write_config(tmp_path, {"inference": {"cohort_size": 7}}, "env.json")
        arg_path = write_config(tmp_path, {"inference": {"cohort_size": 9}}, "arg.json")
        monkeypatch.setenv(CONFIG_ENV_VAR, str(env_path))
        assert load_run_config(arg_path).inference.cohort_size == 9

    def test_empty_env_var_means_defaults(self, monkeypatch):
        monkeypatch.setenv(CONFIG_ENV_VAR, "")
        assert load_run_config(None).training.batch_size == 32

    def test_missing_file_reported(self, tmp_path):
        with pytest.raises(ConfigurationError, match="cannot read"):
            load_run_config(tmp_path / "nope.json")

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="not valid JSON"):
            load_run_config(path)


class TestStrictness:
    def test_unknown_section_rejected(self, tmp_path):
        path = write_config(tmp_path, {"featurez": {}})
        with pytest.raises(ConfigurationError, match="featurez"):
            load_run_config(path)

    def test_unknown_key_named_with_section(self, tmp_path):
        path = write_config(tmp_path, {"training": {"batchsize": 8}})
        with pytest.raises(ConfigurationError, match="training.batchsize"):
            load_run_config(path)

    def test_wrong_type_reported(self, tmp_path):
        path = write_config(tmp_path, {"features": {"fft_size": "big"}})
        with pytest.raises(ConfigurationError, match="features.fft_size"):
            load_run_config(path)

    def test_internal_invariants_surface_at_load(self, tmp_path):
        """Values pydantic accepts but the dataclasses reject must fail
        at load time, not later inside a command."""
        path = write_config(tmp_path, {"training": {"batch_size": 1}})
        with pytest.raises(ConfigurationError):
            load_run_config(path)

    def test_feature_invariants_surface_at_load(self, tmp_path):
        path = write_config(tmp_path, {"features": {"fft_size": 128}})
        with pytest.raises(ConfigurationError):
            load_run_config(path)
