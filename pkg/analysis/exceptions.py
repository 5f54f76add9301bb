from debates.exceptions import ConformityLabError


class UndefinedMetricError(ConformityLabError):
    """A conformity metric was requested over an empty (or fully excluded) transcript set."""


class StatisticsInputError(ConformityLabError):
    """Input violates a precondition of a statistical procedure."""


class ExpectedFrequencyError(StatisticsInputError):
    pass


class DegenerateInputError(StatisticsInputError):
    """Zero-variance or otherwise degenerate sample."""


class NumericalError(ConformityLabError):
    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f'{message} (residual {residual:.3e})')
