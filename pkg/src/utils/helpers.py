import logging
import os
from pathlib import Path

import yaml

REPORTS_DIR = Path(__file__).parent.parent.parent / "reports"
OUTPUT_DIR_ENV = "SPECTRA_OUTPUT_DIR"


def get_config():
    """config/config.yaml, or the sample when it is missing."""
    config_path = Path(__file__).parent.parent.parent / "config/config.yaml"
    if not config_path.exists():
        logging.warning("config.yaml not found, using config.yaml.sample")
        config_path = Path(__file__).parent.parent.parent / "config/config.yaml.sample"
    with open(config_path, "r") as f:
        return yaml.safe_load(f) or {}


def get_output_dir(config=None):
    """SPECTRA_OUTPUT_DIR, else run_settings.output_dir, else reports/ at the repo root."""
    env_dir = os.environ.get(OUTPUT_DIR_ENV)
    if env_dir:
        return Path(env_dir)
    configured = (config or {}).get("run_settings", {}).get("output_dir")
    return Path(configured) if configured else REPORTS_DIR
