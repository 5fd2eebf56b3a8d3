# modules/qft.py
# QFT circuit structure: qubit counts, gate counts, depth and execution-time estimates.
# Структура схемы КПФ: число кубитов, число вентилей, глубина и оценка времени выполнения.

from collections import Counter
from dataclasses import dataclass

from modules.errors import CircuitError

GATE_KINDS = ("H", "CROT", "SWAP")
DEFAULT_GATE_TIMES = {"H": 2e-5, "CROT": 5e-5, "SWAP": 1.5e-4}


@dataclass(frozen=True)
class CircuitProfile:
    qubits: int
    hadamard_count: int
    controlled_rotation_count: int
    swap_count: int
    depth: int = 0
    estimated_time: float = 0.0

    def counts(self):
        return {
            "H": self.hadamard_count,
            "CROT": self.controlled_rotation_count,
            "SWAP": self.swap_count,
        }


def qubits_for_number(n):
    # Number of qubits needed to encode n in binary (1 for n in {0, 1}).
    # Число кубитов для двоичного представления n (1 для n из {0, 1}).
    if n < 0:
        raise CircuitError(f"encoded number must be non-negative, got {n}")
    return max(1, int(n).bit_length())


def build_qft_circuit(l):
    # Gate list of the textbook QFT on l qubits, in application order.
    # Список вентилей стандартного КПФ на l кубитах в порядке применения.
    #
    # Qubit j gets a Hadamard followed by controlled rotations R_2..R_{l-j}
    # controlled by every later qubit; the qubit order is reversed by swaps at the end.
    if l < 1:
        raise CircuitError(f"QFT needs at least one qubit, got {l}")
    gates = []
    for target in range(l):
        gates.append(("H", (target,)))
        for control in range(target + 1, l):
            order = control - target + 1
            gates.append(("CROT", (control, target), order))
    for q in range(l // 2):
        gates.append(("SWAP", (q, l - 1 - q)))
    return gates


def circuit_depth(gates, qubits):
    # ASAP layering: each gate starts after the last gate on any of its qubits.
    ready = [0] * qubits
    for gate in gates:
        wires = gate[1]
        layer = max(ready[w] for w in wires) + 1
        for w in wires:
            ready[w] = layer
    return max(ready) if ready else 0


def qft_gate_counts(l):
    # Counts gates of the constructed circuit: H = l, CROT = l(l-1)/2, SWAP = floor(l/2).
    # Подсчёт вентилей построенной схемы.
    gates = build_qft_circuit(l)
    counts = Counter(gate[0] for gate in gates)
    return CircuitProfile(
        qubits=l,
        hadamard_count=counts["H"],
        controlled_rotation_count=counts["CROT"],
        swap_count=counts["SWAP"],
        depth=circuit_depth(gates, l),
    )


def estimate_execution_time(profile, per_gate_times=None):
    # Linear per-gate-kind time model: sum over kinds of count * time.
    # Линейная модель времени: сумма по типам вентилей (количество * время).
    times = dict(DEFAULT_GATE_TIMES if per_gate_times is None else per_gate_times)
    for kind, value in times.items():
        if value < 0:
            raise CircuitError(f"gate time for {kind} must be non-negative, got {value}")
    counts = profile.counts()
    return float(sum(counts[kind] * times.get(kind, 0.0) for kind in GATE_KINDS))


def circuit_profile(l, per_gate_times=None):
    profile = qft_gate_counts(l)
    return CircuitProfile(
        qubits=profile.qubits,
        hadamard_count=profile.hadamard_count,
        controlled_rotation_count=profile.controlled_rotation_count,
        swap_count=profile.swap_count,
        depth=profile.depth,
        estimated_time=estimate_execution_time(profile, per_gate_times),
    )


def profile_for_number(n, per_gate_times=None):
    # Profile of the QFT that processes the encoded number n.
    return circuit_profile(qubits_for_number(n), per_gate_times)
