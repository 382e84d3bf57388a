import pytest
from pydantic import ValidationError

from src.config.config_file import (
    build_sensor_config,
    build_train_config,
    format_train_config,
    parse_config_text,
    read_config_file,
)
from src.models.schemas import SensorConfig, TrainConfig
from src.utils.mode_resolver import CANONICAL_MODES, get_mode_resolver


class TestModeResolver:
    @pytest.mark.parametrize("mode", CANONICAL_MODES)
    def test_canonical_modes_resolve_to_themselves(self, mode):
        assert get_mode_resolver().resolve(mode) == mode

    @pytest.mark.parametrize(
        "text, expected",
        [
            ("BF+RA", "baseline+bf+ra"),
            ("baseline + ra + bf", "baseline+bf+ra"),
            ("full", "baseline+bf+ra"),
            ("black-first", "baseline+bf"),
            ("reference-aware", "baseline+ra"),
            ("plain", "baseline"),
        ],
    )
    def test_aliases(self, text, expected):
        assert get_mode_resolver().resolve(text) == expected

    def test_fuzzy_typo(self):
        assert get_mode_resolver().resolve("baselin+bf") == "baseline+bf"
        assert get_mode_resolver().resolve("blackfirst+ra") == "baseline+bf+ra"

    @pytest.mark.parametrize("text", ["baseline+xa", "baseline+rf", "baseline+bf+rx", "b+ra"])
    def test_misspelled_flags_are_rejected(self, text):
        assert get_mode_resolver().resolve(text) is None

    def test_unknown_mode(self):
        assert get_mode_resolver().resolve("holography") is None
        with pytest.raises(ValueError):
            get_mode_resolver().require("")

    def test_train_config_resolves_mode(self):
        assert TrainConfig(mode="ra+bf").mode == "baseline+bf+ra"
        with pytest.raises(ValidationError):
            TrainConfig(mode="holography")


class TestSchemas:
    def test_sensor_defaults(self):
        cfg = SensorConfig()
        assert (cfg.tau, cfg.epsilon, cfg.sigma_w, cfg.sigma_z) == (0.30, 0.01, 0.175, 0.04)
        assert not cfg.noiseless

    def test_sensor_rejects_non_positive_threshold(self):
        with pytest.raises(ValidationError):
            SensorConfig(tau=0.0)

    def test_train_flags(self):
        cfg = TrainConfig(mode="baseline+bf")
        assert cfg.black_first and not cfg.reference_aware

    def test_train_rejects_bad_values(self):
        with pytest.raises(ValidationError):
            TrainConfig(n_patterns=1)
        with pytest.raises(ValidationError):
            TrainConfig(s_growth=0.5)
        with pytest.raises(ValidationError):
            TrainConfig(val_fraction=1.0)


class TestConfigFile:
    def test_parse_skips_comments_and_blanks(self):
        text = "# training\nN = 6\n\nmode=bf  # black first\ntau=0.25\n"
        assert parse_config_text(text) == {"N": "6", "mode": "bf", "tau": "0.25"}

    def test_parse_errors_name_the_line(self):
        with pytest.raises(ValueError, match=":2:"):
            parse_config_text("N=4\njust words\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_config_text("colour=blue\n")

    def test_read_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_config_file(tmp_path / "missing.txt")

    def test_overrides_win_and_none_is_unset(self):
        cfg = build_train_config({"N": "6", "epochs": "9", "tau": "0.2"}, {"N": 3, "epochs": None})
        assert cfg.n_patterns == 3
        assert cfg.epochs == 9
        assert cfg.sensor.tau == 0.2

    def test_sensor_config_from_file_values(self):
        cfg = build_sensor_config({"noiseless": "yes", "seed": "4"}, {"sigma_w": 0.1})
        assert cfg.noiseless
        assert cfg.seed == 4
        assert cfg.sigma_w == 0.1
        with pytest.raises(ValueError):
            build_sensor_config({"noiseless": "maybe"})

    def test_format_then_parse(self, tmp_path):
        cfg = TrainConfig(
            n_patterns=5, epochs=7, mode="baseline+ra", lr=3e-3, seed=2,
            sensor=SensorConfig(tau=0.25, noiseless=True, seed=2),
        )
        path = tmp_path / "config.txt"
        path.write_text(format_train_config(cfg))
        assert build_train_config(read_config_file(path)) == cfg
