from django.core.management.base import BaseCommand, CommandError

from debates.exceptions import (
    ConfigValidationError,
    ConfigurationError,
    ConformityLabError,
    GridConfigurationError,
)

VALIDATION_EXIT = 1
EXECUTION_EXIT = 2

VALIDATION_ERRORS = (ConfigValidationError, ConfigurationError, GridConfigurationError)


class ConformityCommand(BaseCommand):
    """
    Base for the experiment commands.

    Subclasses implement `run_command`; validation problems exit with 1,
    any other ConformityLabError with 2.
    """

    def run_command(self, *args, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run_command(*args, **options)
        except VALIDATION_ERRORS as exc:
            raise CommandError(str(exc), returncode=VALIDATION_EXIT) from exc
        except ConformityLabError as exc:
            raise CommandError(str(exc), returncode=EXECUTION_EXIT) from exc
