import os
from dotenv import load_dotenv

# Load .env variables (optional; every setting has a default)
load_dotenv()


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Base configuration shared across environments."""
    LOG_DIR = os.getenv("PNPMM_LOG_DIR", "logs")
    LOG_LEVEL = os.getenv("PNPMM_LOG_LEVEL", "INFO").upper()
    LOG_FILE = "pnpmm.log"
    LOG_TO_FILE = _flag("PNPMM_LOG_TO_FILE", "1")
    OUTPUT_DIR = os.getenv("PNPMM_OUTPUT_DIR", "runs")
    SEED = int(os.getenv("PNPMM_SEED", "0"))
    PEAK = float(os.getenv("PNPMM_PEAK", "1.0"))


class DevConfig(Config):
    """Local runs: file + console logging."""
    LOG_LEVEL = os.getenv("PNPMM_LOG_LEVEL", "DEBUG").upper()


class ProdConfig(Config):
    """Batch runs"""


class TestConfig(Config):
    """Test suite: console only, quiet."""
    LOG_TO_FILE = False
    LOG_LEVEL = "WARNING"


CONFIGS = {"development": DevConfig, "production": ProdConfig, "test": TestConfig}


def get_config() -> type[Config]:
    """Configuration class selected by PNPMM_ENV (default: production)."""
    return CONFIGS.get(os.getenv("PNPMM_ENV", "production").strip().lower(), ProdConfig)
