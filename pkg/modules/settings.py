# modules/settings.py
# Typed views over solver_config.json.
# Типизированное представление настроек из solver_config.json.

from dataclasses import dataclass, field

from modules.errors import PlannerError
from utils import load_solver_config


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    integrality: float = 1e-6
    mip_gap: float = 1e-6
    pivot: float = 1e-9
    optimality: float = 1e-9


@dataclass(frozen=True)
class SimplexSettings:
    refactor_interval: int = 50
    bland_after_degenerate: int = 1000
    max_iterations: int = 200000


@dataclass(frozen=True)
class BendersConfig:
    # Convergence settings of the decomposition loop.
    # Параметры сходимости цикла декомпозиции.
    epsilon_pairs: float = 0.05
    epsilon_qubits: float = 0.05
    max_iterations: int = 200
    workers: int = 1

    def __post_init__(self):
        if self.epsilon_pairs <= 0 or self.epsilon_qubits <= 0:
            raise PlannerError("Benders tolerances must be positive")
        if self.max_iterations < 1:
            raise PlannerError("max_iterations must be at least 1")
        if self.workers < 1:
            raise PlannerError("workers must be at least 1")


@dataclass(frozen=True)
class SolverSettings:
    tolerances: Tolerances = field(default_factory=Tolerances)
    simplex: SimplexSettings = field(default_factory=SimplexSettings)
    node_limit: int = 200000
    benders: BendersConfig = field(default_factory=BendersConfig)
    purification_slack: float = 1e-9
    max_pairs: int = 60
    gate_times: dict = field(default_factory=lambda: {"H": 2e-5, "CROT": 5e-5, "SWAP": 1.5e-4})
    seed: int = 1
    float_format: str = "%.6f"
    schema_version: int = 1
    workers: int = 1


def load_settings(path=None):
    # Builds SolverSettings from the JSON config (defaults fill the gaps).
    # Создаёт SolverSettings из JSON-конфигурации.
    raw = load_solver_config(path)
    tol = raw["tolerances"]
    simplex = raw["simplex"]
    benders = raw["benders"]
    experiments = raw["experiments"]
    return SolverSettings(
        tolerances=Tolerances(
            feasibility=float(tol["feasibility"]),
            integrality=float(tol["integrality"]),
            mip_gap=float(tol["mip_gap"]),
            pivot=float(tol["pivot"]),
            optimality=float(tol["optimality"]),
        ),
        simplex=SimplexSettings(
            refactor_interval=int(simplex["refactor_interval"]),
            bland_after_degenerate=int(simplex["bland_after_degenerate"]),
            max_iterations=int(simplex["max_iterations"]),
        ),
        node_limit=int(raw["branch_and_bound"]["node_limit"]),
        benders=BendersConfig(
            epsilon_pairs=float(benders["epsilon_pairs"]),
            epsilon_qubits=float(benders["epsilon_qubits"]),
            max_iterations=int(benders["max_iterations"]),
            workers=int(benders["workers"]),
        ),
        purification_slack=float(raw["purification"]["slack"]),
        max_pairs=int(raw["purification"]["max_pairs"]),
        gate_times={k: float(v) for k, v in raw["gate_times"].items()},
        seed=int(experiments["seed"]),
        float_format=str(experiments["float_format"]),
        schema_version=int(experiments["schema_version"]),
        workers=int(experiments["workers"]),
    )
