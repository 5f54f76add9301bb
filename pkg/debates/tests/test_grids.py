from django.test import SimpleTestCase

from debates.domain import Experiment, Framing, Topic
from debates.exceptions import GridConfigurationError
from debates.services.grids import build_experiment_a_grid, build_experiment_b_grid, build_grid
from debates.services.validation import validate_grid
from debates.tests.factories import UBI, experiment_settings, scripted_pairing, scripted_spec

TOPICS = tuple(
    Topic(f't{i}', f'Topic {i}', f'Statement {i}.', f'Reframed statement {i}.') for i in range(1, 6)
)
PAIRINGS = tuple(scripted_pairing(name) for name in ('gpt', 'claude', 'qwen', 'llama'))
B_MODELS = (scripted_spec('gpt-3.5-turbo'), scripted_spec('gpt-4o-mini'))


def full_scale(**kwargs):
    return experiment_settings(topics=TOPICS, pairings=PAIRINGS, experiment_b_models=B_MODELS, reps=10, **kwargs)


class GridSizeTests(SimpleTestCase):

    def test_experiment_a_full_scale(self):
        grid = build_experiment_a_grid(full_scale())
        self.assertEqual(len(grid), 2000)
        self.assertEqual(len({config.run_id for config in grid}), 2000)

    def test_experiment_b_full_scale(self):
        grid = build_experiment_b_grid(full_scale())
        self.assertEqual(len(grid), 600)
        self.assertTrue(all(config.pairing.is_homogeneous for config in grid))
        self.assertTrue(all(config.experiment is Experiment.B for config in grid))

    def test_reps_override(self):
        self.assertEqual(len(build_grid(full_scale(), Experiment.A, reps=1)), 200)

    def test_grid_validates(self):
        grid = build_experiment_a_grid(experiment_settings(reps=2))
        self.assertEqual(len(validate_grid(grid)), 20)


class GridDeterminismTests(SimpleTestCase):

    def test_same_settings_same_grid(self):
        first = build_experiment_a_grid(full_scale())
        second = build_experiment_a_grid(full_scale())
        self.assertEqual([c.run_id for c in first], [c.run_id for c in second])
        self.assertEqual([c.seed for c in first], [c.seed for c in second])

    def test_master_seed_changes_seeds_not_run_ids(self):
        first = build_experiment_a_grid(experiment_settings(reps=3))
        second = build_experiment_a_grid(experiment_settings(reps=3), master_seed=99)
        self.assertEqual([c.run_id for c in first], [c.run_id for c in second])
        self.assertNotEqual([c.seed for c in first], [c.seed for c in second])

    def test_order_is_scenario_topic_pairing_rep(self):
        grid = build_experiment_a_grid(experiment_settings(topics=(UBI,), reps=2))
        self.assertEqual([(c.scenario.id, c.rep_index) for c in grid[:4]], [('a', 0), ('a', 1), ('b', 0), ('b', 1)])


class GridErrorTests(SimpleTestCase):

    def test_reversed_framing_needs_reframed_topics(self):
        plain = Topic('plain', 'Plain', 'A statement.')
        with self.assertRaises(GridConfigurationError):
            build_experiment_a_grid(experiment_settings(topics=(plain,)), framing=Framing.REVERSED)

    def test_reversed_grid_has_distinct_run_ids(self):
        original = build_experiment_a_grid(experiment_settings())
        reversed_grid = build_experiment_a_grid(experiment_settings(), framing=Framing.REVERSED)
        self.assertFalse({c.run_id for c in original} & {c.run_id for c in reversed_grid})

    def test_empty_inputs(self):
        with self.assertRaises(GridConfigurationError):
            build_experiment_b_grid(experiment_settings())
        with self.assertRaises(GridConfigurationError):
            build_experiment_a_grid(experiment_settings(), reps=0)
