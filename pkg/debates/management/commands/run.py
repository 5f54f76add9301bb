from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from debates.domain import Experiment, Framing
from debates.management.base import EXECUTION_EXIT, ConformityCommand
from debates.services.backends import BackendPolicy, build_backends
from debates.services.config_loader import load_experiment_file
from debates.services.grids import build_grid
from debates.services.runner import run_grid
from debates.services.store import TranscriptStore


class Command(ConformityCommand):
    help = "Run the Experiment A or B debate grid and append transcripts to the output directory."

    def add_arguments(self, parser):
        parser.add_argument('experiment', choices=['a', 'b', 'A', 'B'])
        parser.add_argument('--config', required=True, help='Experiment configuration JSON file.')
        parser.add_argument('--reps', type=int, help='Repetitions per cell (overrides the config).')
        parser.add_argument('--seed', type=int, help='Master seed (overrides the config).')
        parser.add_argument('--concurrency', type=int, help='Debates in flight (overrides the config).')
        parser.add_argument('--resume', action='store_true', help='Skip run ids already stored.')
        parser.add_argument('--framing', choices=[f.value for f in Framing], help='Topic framing.')
        parser.add_argument('--output', help='Output directory (overrides the config and settings).')

    def run_command(self, *args, **options):
        experiment_settings = load_experiment_file(options['config'])
        run = experiment_settings.run
        experiment = Experiment(options['experiment'].upper())

        grid = build_grid(
            experiment_settings,
            experiment,
            reps=options['reps'],
            master_seed=options['seed'],
            framing=Framing(options['framing']) if options['framing'] else None,
        )

        specs = [experiment_settings.neutral_model]
        for config in grid:
            specs.extend([config.pairing.large, config.pairing.small])
        backend = build_backends(
            specs,
            scripts=experiment_settings.scripts,
            policy=BackendPolicy.from_settings(),
            audit_path=settings.CONFORMITY_AUDIT_LOG,
        )

        output_dir = options['output'] or run.output_dir or settings.CONFORMITY_OUTPUT_DIR
        store = TranscriptStore(Path(output_dir))
        concurrency = options['concurrency'] or run.concurrency

        report = run_grid(grid, backend, concurrency, store, resume=options['resume'])

        self.stdout.write(
            f"Experiment {experiment.value}: {report.done} done, {report.failed} failed, "
            f"{report.skipped} skipped ({len(grid)} in grid)"
        )
        self.stdout.write(f"Transcripts: {store.transcripts_path}")
        if report.failed:
            self.stderr.write(f"Failures logged to {store.failures_path}")
            raise CommandError(f"{report.failed} debates failed", returncode=EXECUTION_EXIT)
