from django.conf import settings

from debates.exceptions import ConfigValidationError
from debates.management.base import ConformityCommand
from debates.services.backends import BackendPolicy, build_backends
from debates.services.bias_probe import bias_probe, probe_table
from debates.services.config_loader import load_experiment_file


class Command(ConformityCommand):
    help = "Probe the neutral model's baseline leaning on each topic (Pros / Cons / No response)."

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Experiment configuration JSON file.')
        parser.add_argument('--topic', action='append', dest='topics',
                            help='Topic id to probe; repeat for several. Defaults to every topic.')
        parser.add_argument('--n', type=int, default=100, help='Trials per topic.')

    def run_command(self, *args, **options):
        experiment_settings = load_experiment_file(options['config'])
        topic_ids = options['topics'] or [topic.id for topic in experiment_settings.topics]
        try:
            topics = [experiment_settings.topic(topic_id) for topic_id in topic_ids]
        except KeyError as exc:
            raise ConfigValidationError([('topic', f'unknown topic id {exc.args[0]}')])

        neutral = experiment_settings.neutral_model
        backend = build_backends(
            [neutral],
            scripts=experiment_settings.scripts,
            policy=BackendPolicy.from_settings(),
            audit_path=settings.CONFORMITY_AUDIT_LOG,
        )
        results = [bias_probe(topic, neutral, options['n'], backend) for topic in topics]
        table = probe_table(results, {topic.id: topic.title or topic.id for topic in topics})
        self.stdout.write(f"Neutral model {neutral.model_id}, {options['n']} trials per topic")
        self.stdout.write(table.to_string(index=False))
