"""
Exception hierarchy shared by all scorelab modules.
"""

from typing import Optional


class ScoreLabError(RuntimeError):
    """Base class; `exit_code` is what the CLI returns when this escapes a run."""

    exit_code = 3


class SpecificationError(ScoreLabError):
    exit_code = 2


class SchemaError(SpecificationError):
    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
        token: Optional[str] = None,
    ) -> None:
        where = []
        if row is not None:
            where.append(f"row={row}")
        if column is not None:
            where.append(f"column={column}")
        if token is not None:
            where.append(f"token={token!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column
        self.token = token


class DomainError(ScoreLabError):
    pass


class CapabilityError(ScoreLabError):
    pass


class SingularMatrixError(ScoreLabError):
    pass


class NotPositiveDefiniteError(SingularMatrixError):
    def __init__(self, pivot: int, message: str = "") -> None:
        super().__init__(message or f"Matrix is not positive definite (non-positive pivot at index {pivot})")
        self.pivot = int(pivot)


class DegeneracyError(ScoreLabError):
    pass


class DivergenceError(ScoreLabError):
    pass


class ImproperPriorError(ScoreLabError):
    pass


class ImproperPosteriorError(ScoreLabError):
    pass


class RankDeficiencyError(ScoreLabError):
    def __init__(self, row: int, message: str = "") -> None:
        super().__init__(message or f"Design rank stalls at row {row}")
        self.row = int(row)


class ComponentError(ScoreLabError):
    def __init__(self, index: int, cause: BaseException) -> None:
        super().__init__(f"Component {index} failed: {cause}")
        self.index = int(index)
        self.cause = cause
        self.exit_code = exit_code_for(cause)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ScoreLabError):
        return int(exc.exit_code)
    return 3
