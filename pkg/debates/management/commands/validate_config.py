from debates.domain import Experiment
from debates.management.base import ConformityCommand
from debates.services.config_loader import load_experiment_file
from debates.services.grids import build_grid
from debates.services.validation import validate_grid


class Command(ConformityCommand):
    help = "Validate an experiment configuration file and report the grid sizes it produces."

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment configuration JSON file.')

    def run_command(self, *args, **options):
        experiment_settings = load_experiment_file(options['config'])
        self.stdout.write(
            f"{len(experiment_settings.topics)} topics, {len(experiment_settings.scenarios)} Experiment A scenarios, "
            f"{len(experiment_settings.pairings)} pairings, "
            f"{len(experiment_settings.experiment_b_models)} Experiment B models"
        )
        if experiment_settings.pairings:
            grid = validate_grid(build_grid(experiment_settings, Experiment.A))
            self.stdout.write(f"Experiment A grid: {len(grid)} debates")
        if experiment_settings.experiment_b_models:
            grid = validate_grid(build_grid(experiment_settings, Experiment.B))
            self.stdout.write(f"Experiment B grid: {len(grid)} debates")
        self.stdout.write(self.style.SUCCESS("Configuration OK"))
