# src/config.py
"""Runtime configuration for estimation and backtesting runs."""
import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration, populated from the environment."""

    # Environment
    ENV: str = os.getenv("ENV", "prod")
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"
    TESTING: bool = False

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "text")

    # Output
    OUTPUT_DIR: str = os.getenv("MGARCH_OUTPUT_DIR", "./runs")

    # Parallelism
    THREADS: int = int(os.getenv("MGARCH_THREADS", "1"))

    # Numerical safeguards
    LOG_SQ_FLOOR: float = float(os.getenv("MGARCH_LOG_SQ_FLOOR", "1e-8"))
    PARAM_MARGIN: float = float(os.getenv("MGARCH_PARAM_MARGIN", "1e-6"))
    EIG_FLOOR: float = float(os.getenv("MGARCH_EIG_FLOOR", "1e-6"))
    PD_PENALTY: float = float(os.getenv("MGARCH_PD_PENALTY", "1e3"))
    GRADIENT_CHUNK_BUDGET: int = int(float(os.getenv("MGARCH_CHUNK_BUDGET", "4e6")))

    # Optimizer
    MAX_ITER: int = int(os.getenv("MGARCH_MAX_ITER", "500"))
    GRAD_TOL: float = float(os.getenv("MGARCH_GRAD_TOL", "1e-6"))
    STARTS_SIMULATION: int = int(os.getenv("MGARCH_STARTS_SIMULATION", "5"))
    STARTS_EMPIRICAL: int = int(os.getenv("MGARCH_STARTS_EMPIRICAL", "20"))

    # Optional default seed for commands run without --seed in scripted setups
    DEFAULT_SEED: Optional[str] = os.getenv("MGARCH_SEED")

    def validate_required_config(self):
        """Validate that every numeric setting is usable."""
        invalid = []

        if self.LOG_FORMAT not in ("text", "json"):
            invalid.append("LOG_FORMAT (text or json)")
        if self.THREADS < 1:
            invalid.append("MGARCH_THREADS (>= 1)")
        if self.LOG_SQ_FLOOR <= 0:
            invalid.append("MGARCH_LOG_SQ_FLOOR (> 0)")
        if not 0 < self.PARAM_MARGIN < 0.5:
            invalid.append("MGARCH_PARAM_MARGIN (0 < margin < 0.5)")
        if self.EIG_FLOOR <= 0:
            invalid.append("MGARCH_EIG_FLOOR (> 0)")
        if self.PD_PENALTY < 0:
            invalid.append("MGARCH_PD_PENALTY (>= 0)")
        if self.MAX_ITER < 1:
            invalid.append("MGARCH_MAX_ITER (>= 1)")
        if self.GRAD_TOL <= 0:
            invalid.append("MGARCH_GRAD_TOL (> 0)")
        if self.STARTS_SIMULATION < 1 or self.STARTS_EMPIRICAL < 1:
            invalid.append("MGARCH_STARTS_* (>= 1)")
        if self.GRADIENT_CHUNK_BUDGET < 1:
            invalid.append("MGARCH_CHUNK_BUDGET (>= 1)")

        if invalid:
            raise ValueError(f"Invalid configuration values: {', '.join(invalid)}")

    def get_runtime_info(self) -> dict:
        """Resolved settings, recorded in every run manifest."""
        return {
            "env": self.ENV,
            "log_level": self.LOG_LEVEL,
            "log_format": self.LOG_FORMAT,
            "output_dir": self.OUTPUT_DIR,
            "threads": self.THREADS,
            "log_sq_floor": self.LOG_SQ_FLOOR,
            "param_margin": self.PARAM_MARGIN,
            "eig_floor": self.EIG_FLOOR,
            "pd_penalty": self.PD_PENALTY,
            "max_iter": self.MAX_ITER,
            "grad_tol": self.GRAD_TOL,
            "gradient_chunk_budget": self.GRADIENT_CHUNK_BUDGET,
        }


class DevelopmentConfig(Config):
    """Development configuration."""

    DEBUG = True
    ENV = "dev"
    LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG")


class TestingConfig(Config):
    """Testing configuration."""

    TESTING = True
    ENV = "test"
    DEBUG = True
    THREADS = 1
    OUTPUT_DIR = os.getenv("MGARCH_TEST_OUTPUT_DIR", "./runs-test")


class ProductionConfig(Config):
    """Production configuration."""

    DEBUG = False
    ENV = "prod"

    def __init__(self):
        super().__init__()
        try:
            self.validate_required_config()
        except ValueError as e:
            print(f"⚠️ Configuration Warning: {str(e)}")


def get_config(env: Optional[str] = None) -> Config:
    """Get configuration based on environment."""
    if env is None:
        env = os.getenv("ENV", "prod")

    configs = {
        "dev": DevelopmentConfig,
        "development": DevelopmentConfig,
        "test": TestingConfig,
        "testing": TestingConfig,
        "prod": ProductionConfig,
        "production": ProductionConfig,
    }

    config_class = configs.get(env.lower(), ProductionConfig)
    return config_class()
