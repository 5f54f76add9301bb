from django.conf import settings

from analysis.services.reporting import (
    export_transcripts,
    ratio_sweep_report,
    report_topic_distribution,
    write_figure_data,
)
from debates.exceptions import ConfigValidationError
from debates.management.base import ConformityCommand
from debates.services.store import TranscriptStore


class Command(ConformityCommand):
    help = "Print the topic distribution and ratio sweep; optionally write figure data and readable transcripts."

    def add_arguments(self, parser):
        parser.add_argument('--input', help='Run output directory (defaults to CONFORMITY_OUTPUT_DIR).')
        parser.add_argument('--figures', help='Directory for figure-data CSV files.')
        parser.add_argument('--transcripts', help='Directory for one plain-text file per debate.')
        parser.add_argument('--rebuild-summary', action='store_true',
                            help='Regenerate summary.csv from transcripts.jsonl first.')

    def run_command(self, *args, **options):
        store = TranscriptStore(options['input'] or settings.CONFORMITY_OUTPUT_DIR)
        if not store.exists():
            raise ConfigValidationError([('input', f'no transcripts found at {store.transcripts_path}')])

        if options['rebuild_summary']:
            frame = store.rebuild_summary()
            self.stdout.write(f"Rebuilt {store.summary_path} ({len(frame)} rows)")

        transcripts = store.load_transcripts()

        self.stdout.write("TOPIC DISTRIBUTION (debates per per-debate CR bucket)")
        self.stdout.write(report_topic_distribution(transcripts).to_string(index=False))

        sweep = ratio_sweep_report(transcripts)
        if not sweep.empty:
            self.stdout.write("")
            self.stdout.write("RATIO SWEEP (majority-side CR, 99% Wilson interval)")
            self.stdout.write(sweep.to_string(index=False, float_format=lambda value: f'{value:.4f}'))

        if options['figures']:
            written = write_figure_data(transcripts, options['figures'])
            self.stdout.write(f"Wrote {len(written)} figure-data files to {options['figures']}")
        if options['transcripts']:
            written = export_transcripts(transcripts, options['transcripts'])
            self.stdout.write(f"Exported {len(written)} transcripts to {options['transcripts']}")
