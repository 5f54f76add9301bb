from django.conf import settings

from analysis.services.reporting import AnalysisSpec, Grouping, analyze
from analysis.services.stats import Correction
from debates.exceptions import ConfigValidationError
from debates.management.base import ConformityCommand
from debates.services.store import TranscriptStore


class Command(ConformityCommand):
    help = "Analyse a transcript store: conformity table, chi-square, ANOVA, Welch / Games-Howell, power."

    def add_arguments(self, parser):
        parser.add_argument('--input', help='Run output directory (defaults to CONFORMITY_OUTPUT_DIR).')
        parser.add_argument('--alpha', type=float, help='Significance level (defaults to CONFORMITY_DEFAULT_ALPHA).')
        parser.add_argument('--correction', choices=[c.value for c in Correction], default=Correction.YATES.value,
                            help='Chi-square continuity correction.')
        parser.add_argument('--grouping', choices=[g.value for g in Grouping], default=Grouping.BY_SCENARIO.value,
                            help='Grouping of the conformity table.')
        parser.add_argument('--force', action='store_true',
                            help='Run chi-square tests even when an expected count is below 5.')

    def run_command(self, *args, **options):
        alpha = options['alpha'] if options['alpha'] is not None else settings.CONFORMITY_DEFAULT_ALPHA
        if not 0.0 < alpha < 1.0:
            raise ConfigValidationError([('alpha', f'must lie strictly between 0 and 1, got {alpha}')])

        store = TranscriptStore(options['input'] or settings.CONFORMITY_OUTPUT_DIR)
        if not store.exists():
            raise ConfigValidationError([('input', f'no transcripts found at {store.transcripts_path}')])

        spec = AnalysisSpec(
            grouping=Grouping(options['grouping']),
            alpha=alpha,
            correction=Correction(options['correction']),
            force=options['force'],
        )
        bundle = analyze(store.load_transcripts(), spec)
        self.stdout.write(bundle.render(), ending='')
