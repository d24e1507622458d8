"""Exception hierarchy. ``exit_code`` is what the CLI returns for each family."""

from __future__ import annotations


class LcedError(Exception):
    exit_code = 1

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self)}


class CaseError(LcedError, ValueError):
    """Invalid or unreadable case data."""

    exit_code = 1

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        self.file = file
        self.line = line
        where = ""
        if file is not None:
            where = f"{file}:{line}: " if line is not None else f"{file}: "
        super().__init__(where + message)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(file=self.file, line=self.line)
        return d


class InfeasibleError(LcedError):
    exit_code = 2


class InfeasiblePeriodsError(InfeasibleError):
    def __init__(self, periods: list[int]):
        self.periods = sorted(periods)
        super().__init__(f"infeasible dispatch in period(s) {self.periods}")

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["periods"] = self.periods
        return d


class NotOptimalError(InfeasibleError):
    """A solution was decoded although the LP did not reach optimality."""

    def __init__(self, status: str, period: int | None = None):
        self.status = status
        self.period = period
        super().__init__(f"LP status {status!r}" + (f" in period {period}" if period is not None else ""))


class NumericalError(LcedError):
    """Singular basis that refactorization cannot repair, or similar breakdown."""

    exit_code = 3


class RegionLimitError(NumericalError):
    def __init__(self, limit: int):
        super().__init__(f"more than {limit} critical regions; input looks pathological")


class NonConvergenceError(LcedError):
    exit_code = 4
