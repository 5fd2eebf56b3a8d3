# utils.py
# Utility functions for configuration management and logging setup.
# Вспомогательные функции для управления конфигурацией и настройки логирования.

import json
import logging
import os

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
SOLVER_CONFIG_FILE = os.path.join(BASE_DIR, "solver_config.json")
PRESET_FILES = {
    "nsfnet": os.path.join(BASE_DIR, "nsfnet_preset.json"),
}
LOG_LEVEL_ENV = "QCC_LOG_LEVEL"

logger = logging.getLogger(__name__)

DEFAULT_SOLVER_CONFIG = {
    "tolerances": {
        "feasibility": 1e-7,
        "integrality": 1e-6,
        "mip_gap": 1e-6,
        "pivot": 1e-9,
        "optimality": 1e-9,
    },
    "simplex": {"refactor_interval": 50, "bland_after_degenerate": 1000, "max_iterations": 200000},
    "branch_and_bound": {"node_limit": 200000},
    "benders": {"epsilon_pairs": 0.05, "epsilon_qubits": 0.05, "max_iterations": 200, "workers": 1},
    "purification": {"slack": 1e-9, "max_pairs": 60},
    "gate_times": {"H": 2e-5, "CROT": 5e-5, "SWAP": 1.5e-4},
    "experiments": {"seed": 1, "float_format": "%.6f", "schema_version": 1, "workers": 1},
}

# --- LOADERS ---

def _merge(defaults, loaded):
    # Section-wise merge: keys missing from the file keep their defaults.
    # Послойное слияние: отсутствующие в файле ключи берутся из значений по умолчанию.
    merged = {}
    for key, value in defaults.items():
        if isinstance(value, dict):
            merged[key] = _merge(value, loaded.get(key, {}) if isinstance(loaded, dict) else {})
        elif isinstance(loaded, dict) and key in loaded:
            merged[key] = loaded[key]
        else:
            merged[key] = value
    return merged


def load_solver_config(path=None):
    # Loads solver settings from the local JSON file.
    # Загружает настройки решателя из локального JSON-файла.
    # Returns: dict with the same sections as DEFAULT_SOLVER_CONFIG.
    path = path or SOLVER_CONFIG_FILE
    if os.path.isfile(path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            data.pop("_description", None)
            return _merge(DEFAULT_SOLVER_CONFIG, data)
        except (OSError, ValueError) as e:
            logger.warning("Cannot read %s, using defaults: %s", path, e)

    return _merge(DEFAULT_SOLVER_CONFIG, {})


def load_preset(name="nsfnet"):
    # Loads a bundled instance preset by name.
    # Загружает встроенный пресет экземпляра по имени.
    # Raises KeyError for unknown names; I/O problems propagate as OSError/ValueError.
    path = PRESET_FILES[name]
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    data.pop("_description", None)
    return data


def configure_logging(default="WARNING"):
    # Sets the root log level from QCC_LOG_LEVEL (verbosity only).
    # Устанавливает уровень логирования из переменной QCC_LOG_LEVEL.
    level_name = os.environ.get(LOG_LEVEL_ENV, default).upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = getattr(logging, default)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return level
