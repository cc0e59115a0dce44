from __future__ import annotations

import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parents[3]
APP_DIR = BASE_DIR / "app" / "gap_lab"
CONFIG_DIR = BASE_DIR / "config"

LAB_CONFIG_PATH = CONFIG_DIR / "lab.yaml"
DEFAULT_OUTPUT_DIR = BASE_DIR / "out"

CONFIG_ENV = "GAP_LAB_CONFIG"
OUTPUT_DIR_ENV = "GAP_LAB_OUTPUT_DIR"


def lab_config_path() -> Path:
    override = os.getenv(CONFIG_ENV, "").strip()
    return Path(override) if override else LAB_CONFIG_PATH


def output_dir() -> Path:
    override = os.getenv(OUTPUT_DIR_ENV, "").strip()
    return Path(override) if override else DEFAULT_OUTPUT_DIR
