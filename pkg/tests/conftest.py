# tests/conftest.py
# Shared fixtures and the hypothesis profile.
# Общие фикстуры и профиль hypothesis.

import pytest
from hypothesis import settings as hypothesis_settings

from modules.settings import SolverSettings
from tests.factories import path_instance, single_request_space, two_node_instance

hypothesis_settings.register_profile("planner", derandomize=True, deadline=None, max_examples=50)
hypothesis_settings.load_profile("planner")


@pytest.fixture
def solver_settings():
    return SolverSettings()


@pytest.fixture
def path3():
    return path_instance()


@pytest.fixture
def path3_space():
    return single_request_space()


@pytest.fixture
def two_node():
    return two_node_instance()


@pytest.fixture
def topology_text():
    return (
        "# three nodes\n"
        "node 1 ecc=5 scs=151\n"
        "node 2 ecc=5 scs=151\n"
        "node 3\n"
        "link 1 2 f=0.9 fts=0.8 rcap=9 ocap=60\n"
        "arc 2 3 f=0.55 fts=0.8 rcap=9 ocap=60\n"
    )


@pytest.fixture
def costs_text():
    return (
        "paircost * * r=10 u=1 o=200\n"
        "paircost 3 r1 r=12 u=1 o=250\n"
        "qubitcost * * r=1.68 u=0.1 o=7 pwt=10\n"
    )


@pytest.fixture
def requests_text():
    return (
        "provider p1 machines=m1:30,m2:20\n"
        "request r1 src=1 dst=3 circuits=c1\n"
        "exe c1 p1 m1 r1 t=0.005\n"
        "exe c1 p1 m2 r1 t=0.004\n"
    )


@pytest.fixture
def scenario_text():
    return "values r1 c1 f=0.7,0.9 q=10 e=0.001\n"


@pytest.fixture
def instance_files(tmp_path, topology_text, costs_text, requests_text, scenario_text):
    paths = {}
    for name, text in (
        ("topology", topology_text),
        ("costs", costs_text),
        ("requests", requests_text),
        ("scenarios", scenario_text),
    ):
        path = tmp_path / f"{name}.txt"
        path.write_text(text, encoding="utf-8")
        paths[name] = str(path)
    return paths
