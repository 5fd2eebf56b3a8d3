# modules/errors.py
# Exception hierarchy shared by parsing, modelling and solving.
# Иерархия исключений для разбора, моделирования и решения.


class PlannerError(Exception):
    # Base class for every error raised by the planner.
    # Базовый класс для всех ошибок планировщика.
    pass


class InstanceError(PlannerError):
    # Invalid instance text or data. Carries the offending line when known.
    # Некорректные данные экземпляра. Содержит номер строки, если он известен.

    def __init__(self, message, line=None, kind=None):
        self.message = message
        self.line = line
        self.kind = kind
        prefix = ""
        if kind:
            prefix += f"{kind} "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(f"{prefix}{message}")


class ScenarioError(PlannerError):
    pass


class FidelityDomainError(PlannerError, ValueError):
    pass


class CircuitError(PlannerError, ValueError):
    pass


class ProgramError(PlannerError):
    # Malformed LinearProgram (unknown variable, bad bounds, non-finite data).
    pass


class SolverError(PlannerError):
    # Raised by callers that need an optimum and got something else.
    # Вызывается, когда требуется оптимум, а решатель вернул иной статус.

    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class InfeasibleModelError(PlannerError):
    # No source-to-destination path survives the per-link pair-count check.
    # Ни один путь от источника к получателю не проходит проверку числа пар.

    def __init__(self, request, blocking_links):
        self.request = request
        self.blocking_links = list(blocking_links)
        links = ", ".join(f"{i}->{j}" for i, j in self.blocking_links) or "none"
        super().__init__(f"request {request}: no feasible route (blocking links: {links})")


class SolutionError(PlannerError):
    pass


class BendersError(PlannerError):

    def __init__(self, message, scenario=None):
        self.scenario = scenario
        if scenario is not None:
            message = f"{message} (scenario {scenario})"
        super().__init__(message)
