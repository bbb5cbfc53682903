import logging

import pytest
from pythonjsonlogger import jsonlogger

from src.config import DevelopmentConfig, ProductionConfig, TestingConfig, get_config
from src.utils.logger import TEXT_FORMAT, setup_logging


class TestConfig:
    def test_testing_values(self, config):
        assert config.ENV == "test"
        assert config.TESTING
        assert config.THREADS == 1
        config.validate_required_config()

    def test_invalid_values(self, config):
        config.THREADS = 0
        config.LOG_FORMAT = "xml"
        with pytest.raises(ValueError) as info:
            config.validate_required_config()
        assert "MGARCH_THREADS" in str(info.value)
        assert "LOG_FORMAT" in str(info.value)

    def test_runtime_info(self, config):
        info = config.get_runtime_info()
        assert info["env"] == "test"
        assert info["threads"] == 1
        assert info["log_sq_floor"] == config.LOG_SQ_FLOOR

    @pytest.mark.parametrize(
        "env, cls",
        [
            ("dev", DevelopmentConfig),
            ("development", DevelopmentConfig),
            ("test", TestingConfig),
            ("Testing", TestingConfig),
            ("prod", ProductionConfig),
            ("staging", ProductionConfig),
        ],
    )
    def test_get_config(self, env, cls):
        assert type(get_config(env)) is cls


class TestLogging:
    def test_json_format(self, config):
        setup_logging(config, level="warning", fmt="json")
        root = logging.getLogger()
        assert root.level == logging.WARNING
        assert isinstance(root.handlers[0].formatter, jsonlogger.JsonFormatter)

    def test_text_format_from_config(self, config):
        config.LOG_LEVEL = "DEBUG"
        setup_logging(config)
        root = logging.getLogger()
        assert root.level == logging.DEBUG
        assert root.handlers[0].formatter._fmt == TEXT_FORMAT
