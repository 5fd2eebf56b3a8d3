# modules/data_loader.py
# Loading of instance and scenario files.
# Загрузка файлов экземпляра и сценариев.

import logging
import os

from modules.errors import ScenarioError
from modules.instance import load_instance
from modules.scenarios import parse_scenarios

logger = logging.getLogger(__name__)


def read_text(path):
    # Reads a text file, trying UTF-8 first and Latin-1 as a fallback.
    # Читает текстовый файл: сначала UTF-8, затем Latin-1.
    if not os.path.isfile(path):
        raise FileNotFoundError(f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except UnicodeDecodeError:
        logger.warning("%s is not UTF-8, reading as Latin-1", path)
        with open(path, "r", encoding="latin-1") as f:
            return f.read()


def load_instance_files(topology_path, costs_path, requests_path):
    # Parses the three instance files into a validated Instance.
    # Разбирает три файла экземпляра в проверенный Instance.
    instance = load_instance(read_text(topology_path), read_text(costs_path), read_text(requests_path))
    logger.info(
        "Loaded instance: %d nodes, %d links, %d requests",
        len(instance.topology.nodes), len(instance.topology.links), len(instance.requests),
    )
    return instance


def load_scenario_file(path, instance=None):
    # Builds the scenario space from a `values` file; checks coverage of the instance circuits.
    # Строит пространство сценариев из файла `values` и проверяет покрытие схем экземпляра.
    space = parse_scenarios(read_text(path))
    if instance is not None:
        missing = sorted(set(instance.circuit_keys()) - set(space.value_sets))
        if missing:
            listed = ", ".join(f"{r}/{c}" for r, c in missing)
            raise ScenarioError(f"scenario file has no values for {listed}")
    return space
