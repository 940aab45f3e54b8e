import pytest

from app.core.errors import ConfigError
from app.schemas import LossSpec, RunConfig, SamplerConfig, TrainConfig, flatten, unflatten


class TestDefaults:
    def test_pointwise_defaults(self):
        cfg = RunConfig()
        assert cfg.loss.kind == "sg"
        assert (cfg.loss.lam, cfg.lr) == (128.0, 0.01)
        assert (cfg.sampler.b, cfg.sampler.k, cfg.sampler.s) == (512, 10, 4)
        assert cfg.eval.M == 50

    def test_mse_defaults(self):
        cfg = RunConfig.from_flat({"loss.kind": "mse"})
        assert (cfg.loss.lam, cfg.lr) == (8.0, 0.001)

    def test_explicit_lr_wins(self):
        assert RunConfig.from_flat({"optimizer.lr": "0.5"}).lr == 0.5

    def test_hinge_margin_default(self):
        assert LossSpec(kind="hinge-pair").gamma == 0.1

    def test_seed_reaches_sampler(self):
        assert RunConfig.from_flat({"seed": "7"}).sampler.seed == 7
        assert RunConfig.from_flat({"seed": "7", "sampler.seed": "2"}).sampler.seed == 2


class TestValidation:
    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_flat({"sampler.bogus": "1"})
        assert info.value.key == "sampler.bogus"
        assert "unknown key" in str(info.value)

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_flat({"model.dim": "zero"})
        assert info.value.key == "model.dim"
        assert info.value.exit_code == 2

    @pytest.mark.parametrize("flat,key", [
        ({"model.dim": "0"}, "model.dim"),
        ({"sampler.b": "-1"}, "sampler"),
        ({"train.epochs": "0"}, "train.epochs"),
        ({"noise.bogus": "1"}, "noise.bogus"),
    ])
    def test_section_errors_keep_prefix(self, flat, key):
        with pytest.raises(ConfigError) as info:
            RunConfig.from_flat(flat)
        assert info.value.key == key

    def test_nested_dict_construction_keeps_prefix(self):
        with pytest.raises(ConfigError) as info:
            TrainConfig(sampler={"strategy": "bogus"})
        assert info.value.key == "sampler.strategy"

    def test_direct_section_construction_names_field(self):
        with pytest.raises(ConfigError) as info:
            SamplerConfig(bogus=1)
        assert info.value.key == "bogus"

    def test_s_must_divide_b(self):
        with pytest.raises(ConfigError):
            SamplerConfig(strategy="stratified", b=10, s=4)
        SamplerConfig(strategy="negative", b=10, s=4)

    def test_negative_k_for_drawn_negatives(self):
        with pytest.raises(ConfigError):
            SamplerConfig(strategy="iid", k=0)
        SamplerConfig(strategy="neg-sharing", k=0)


class TestFlatKeys:
    def test_unflatten(self):
        assert unflatten({"a.b": "1", "a.c": "2", "d": "3", "e": ""}) == {"a": {"b": "1", "c": "2"}, "d": "3"}

    @pytest.mark.parametrize("flat", [{"a..b": "1"}, {"a": "1", "a.b": "2"}, {"a.b": "1", "a": "2"}])
    def test_malformed(self, flat):
        with pytest.raises(ConfigError):
            unflatten(flat)

    def test_flatten_is_sorted_and_reloadable(self):
        cfg = RunConfig.from_flat({"sampler.strategy": "neg-sharing", "train.epochs": "3"})
        flat = cfg.flatten()
        assert list(flat) == sorted(flat)
        assert flat["sampler.strategy"] == "neg-sharing"
        assert RunConfig.from_flat(flat) == cfg

    def test_flatten_nested(self):
        assert flatten({"x": {"y": 1, "z": None}}) == {"x.y": "1", "x.z": ""}


def test_with_overrides_keeps_other_fields():
    cfg = TrainConfig(sampler={"b": 64, "k": 3})
    other = cfg.with_overrides(sampler={"strategy": "iid"}, seed=9)
    assert (other.sampler.strategy, other.sampler.b, other.sampler.k) == ("iid", 64, 3)
    assert other.seed == 9
    assert cfg.sampler.strategy == "negative"


def test_train_config_drops_data_sections():
    cfg = RunConfig.from_flat({"data.links": "x.tsv", "model.dim": "4"})
    train_cfg = cfg.train_config()
    assert type(train_cfg) is TrainConfig
    assert train_cfg.model.dim == 4
