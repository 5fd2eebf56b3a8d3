# modules/purification.py
# Entanglement purification: pairwise formula, equal-fidelity chains and the inverse pair count.
# Очистка запутанности: попарная формула, цепочки одинаковой точности и обратная задача.

from dataclasses import dataclass

from modules.errors import FidelityDomainError

SLACK = 1e-9


@dataclass(frozen=True)
class PurificationChain:
    base_fidelity: float
    pair_count: int
    achieved: float

    @property
    def rounds(self):
        return self.pair_count - 1


def _check_fidelity(name, value):
    # Fidelities live in (0, 1]; exactly 1.0 is a perfect pair.
    # Точность лежит в (0, 1]; 1.0 означает идеальную пару.
    if not (0.0 < value <= 1.0):
        raise FidelityDomainError(f"{name} must be in (0, 1], got {value}")


def purify_pair(b1, b2):
    # Fidelity of one pair obtained by purifying two pairs of fidelities b1 and b2.
    # Точность пары, полученной очисткой двух пар с точностями b1 и b2.
    _check_fidelity("b1", b1)
    _check_fidelity("b2", b2)
    agree = b1 * b2
    return agree / (agree + (1.0 - b1) * (1.0 - b2))


def purify_chain(base, pair_count):
    # Folds purify_pair over pair_count pairs of equal fidelity (pair_count - 1 rounds).
    # Последовательно применяет purify_pair к pair_count парам одинаковой точности.
    _check_fidelity("base", base)
    if pair_count < 1:
        raise FidelityDomainError(f"pair_count must be >= 1, got {pair_count}")
    achieved = base
    for _ in range(pair_count - 1):
        achieved = purify_pair(achieved, base)
    return achieved


def purification_chain(base, pair_count):
    return PurificationChain(base, pair_count, purify_chain(base, pair_count))


def min_pairs_for_target(base, target, max_pairs, slack=SLACK):
    # Smallest pair count k <= max_pairs whose chain reaches target, or None.
    # Наименьшее число пар k <= max_pairs, достигающее целевой точности, иначе None.
    #
    # Linear scan: at or below 0.5 purification never improves, so only k=1 can succeed.
    # Линейный перебор: при точности <= 0.5 очистка не помогает, подходит только k=1.
    _check_fidelity("base", base)
    _check_fidelity("target", target)
    if max_pairs < 1:
        raise FidelityDomainError(f"max_pairs must be >= 1, got {max_pairs}")

    if base + slack >= target:
        return 1
    if base <= 0.5:
        return None

    achieved = base
    for k in range(2, max_pairs + 1):
        achieved = purify_pair(achieved, base)
        if achieved + slack >= target:
            return k
    return None
