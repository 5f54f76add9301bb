from typing import Any, Dict, List, Optional, Tuple


class ConformityLabError(Exception):
    """Base class for every error raised by the debate and analysis apps."""


class ConfigValidationError(ConformityLabError):
    """
    Raised when a configuration violates one or more invariants.

    `issues` holds every violation as (dotted field path, message).
    """

    def __init__(self, issues: List[Tuple[str, str]]):
        self.issues = list(issues)
        lines = [f'{path}: {message}' for path, message in self.issues]
        super().__init__('Invalid configuration:\n  ' + '\n  '.join(lines))


class ConfigurationError(ConformityLabError):
    """Raised at startup for problems such as missing credentials or unknown scripts."""


class GridConfigurationError(ConformityLabError):
    pass


class ScriptError(ConformityLabError):
    def __init__(self, key: str, message: str = ''):
        self.key = key
        super().__init__(message or f'No scripted line for key {key}')


class BackendError(ConformityLabError):
    """Provider call failed; `attempt_log` records every attempt made."""

    def __init__(self, message: str, attempt_log: Optional[List[Dict[str, Any]]] = None):
        self.attempt_log = list(attempt_log or [])
        super().__init__(message)


class BackendTransportError(BackendError):
    """Retry budget exhausted on transport errors, HTTP 429 or HTTP 5xx."""


class BackendRequestError(BackendError):
    """Non-retryable provider rejection (4xx validation errors)."""


class VerdictParseError(ConformityLabError):
    pass


class DebateFailedError(ConformityLabError):
    def __init__(self, run_id: str, stage: str, turn_index: Optional[int], error: str,
                 attempts: Optional[List[Dict[str, Any]]] = None):
        self.run_id = run_id
        self.stage = stage
        self.turn_index = turn_index
        self.error = error
        self.attempts = list(attempts or [])
        super().__init__(f'Debate {run_id} failed at {stage} (turn {turn_index}): {error}')


class StoreError(ConformityLabError):
    pass


class StoreIntegrityError(StoreError):
    pass
