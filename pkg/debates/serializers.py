from rest_framework import serializers

from debates.domain import (
    DEFAULT_MAX_TURNS,
    DEFAULT_SLOTS_PER_SIDE,
    DEFAULT_TEMPERATURE,
    Experiment,
    ExpectedConformity,
    Framing,
    HYPOTHESES,
    ProviderKind,
    SizeClass,
)


MAX_SEED = 2 ** 64 - 1


def model_spec_errors(data):
    if data.get('provider_kind') == ProviderKind.SCRIPTED.value and not data.get('script'):
        return {'script': 'scripted models require a script reference.'}
    return {}


def framing_errors(data):
    if data.get('framing') != Framing.REVERSED.value:
        return {}
    topic = data.get('topic') or {}
    if topic.get('reframed_opponent_statement'):
        return {}
    return {
        'topic': {
            'reframed_opponent_statement': (
                f"reversed framing requested but topic '{topic.get('id')}' "
                f"has no reframed statement"
            )
        }
    }


class ModelSpecSerializer(serializers.Serializer):
    """Serializer for one chat model: provider dialect, model id and sampling limits."""
    provider_kind = serializers.ChoiceField(choices=[kind.value for kind in ProviderKind])
    model_id = serializers.CharField()
    size_class = serializers.ChoiceField(choices=[size.value for size in SizeClass])
    temperature = serializers.FloatField(required=False, default=DEFAULT_TEMPERATURE)
    max_tokens = serializers.IntegerField(required=False, allow_null=True, default=None)
    base_url = serializers.CharField(required=False, allow_null=True, default=None)
    api_key_env = serializers.CharField(required=False, allow_null=True, default=None)
    script = serializers.CharField(required=False, allow_null=True, default=None)

    def validate_temperature(self, value):
        if value < 0 or value > 2:
            raise serializers.ValidationError("temperature must be between 0 and 2")
        return value

    def validate_max_tokens(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("max_tokens must be positive")
        return value

    def validate(self, data):
        errors = model_spec_errors(data)
        if errors:
            raise serializers.ValidationError(errors)
        return data


class TopicSerializer(serializers.Serializer):
    id = serializers.CharField()
    title = serializers.CharField(required=False, allow_blank=True, default='')
    proponent_statement = serializers.CharField()
    reframed_opponent_statement = serializers.CharField(
        required=False, allow_null=True, allow_blank=True, default=None
    )
    category = serializers.CharField(required=False, allow_blank=True, default='')


class ScenarioSerializer(serializers.Serializer):
    id = serializers.CharField()
    proponent_count = serializers.IntegerField()
    proponent_size = serializers.ChoiceField(choices=[size.value for size in SizeClass])
    opponent_count = serializers.IntegerField()
    opponent_size = serializers.ChoiceField(choices=[size.value for size in SizeClass])
    expected_conformity = serializers.ChoiceField(
        choices=[value.value for value in ExpectedConformity],
        required=False,
        default=ExpectedConformity.UNDETERMINED.value,
    )
    related_hypotheses = serializers.ListField(
        child=serializers.ChoiceField(choices=list(HYPOTHESES)), required=False, default=list
    )

    def validate_proponent_count(self, value):
        if value <= 0:
            raise serializers.ValidationError("counts must be positive")
        return value

    def validate_opponent_count(self, value):
        if value <= 0:
            raise serializers.ValidationError("counts must be positive")
        return value


class ProviderPairingSerializer(serializers.Serializer):
    id = serializers.CharField()
    large = ModelSpecSerializer()
    small = ModelSpecSerializer()

    def validate(self, data):
        if data['large']['size_class'] != SizeClass.LARGE.value:
            raise serializers.ValidationError({'large': {'size_class': 'large model must be size class Large.'}})
        if data['small']['size_class'] != SizeClass.SMALL.value:
            raise serializers.ValidationError({'small': {'size_class': 'small model must be size class Small.'}})
        return data


class DebateConfigSerializer(serializers.Serializer):
    """Serializer for a single fully-resolved debate configuration."""
    experiment = serializers.ChoiceField(choices=[value.value for value in Experiment])
    scenario = ScenarioSerializer()
    topic = TopicSerializer()
    framing = serializers.ChoiceField(choices=[value.value for value in Framing])
    pairing = serializers.DictField()
    neutral_model = ModelSpecSerializer()
    rep_index = serializers.IntegerField(min_value=0)
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED)
    max_turns = serializers.IntegerField(min_value=1, required=False, default=DEFAULT_MAX_TURNS)
    slots_per_side_per_turn = serializers.IntegerField(min_value=1, required=False, default=DEFAULT_SLOTS_PER_SIDE)

    def validate_pairing(self, value):
        # Experiment B pairings are homogeneous, so both tiers may carry the same size class
        errors = {}
        for tier in ('large', 'small'):
            spec = ModelSpecSerializer(data=value.get(tier))
            if not spec.is_valid():
                errors[tier] = spec.errors
        if not value.get('id'):
            errors['id'] = ['This field is required.']
        if errors:
            raise serializers.ValidationError(errors)
        return value

    def validate(self, data):
        errors = framing_errors(data)
        if errors:
            raise serializers.ValidationError(errors)
        return data

    @staticmethod
    def cross_field_errors(data):
        """
        Object-level checks of a raw config dictionary, nested like `errors`.
        DRF skips validate() once any field fails; these run regardless.
        """
        errors = framing_errors(data)
        neutral = model_spec_errors(data.get('neutral_model') or {})
        if neutral:
            errors['neutral_model'] = neutral
        pairing = data.get('pairing') or {}
        tiers = {tier: model_spec_errors(pairing.get(tier) or {}) for tier in ('large', 'small')}
        tiers = {tier: found for tier, found in tiers.items() if found}
        if tiers:
            errors['pairing'] = tiers
        return errors


class RunParametersSerializer(serializers.Serializer):
    reps = serializers.IntegerField(min_value=1, required=False, default=10)
    master_seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, required=False, default=0)
    concurrency = serializers.IntegerField(min_value=1, required=False, default=4)
    output_dir = serializers.CharField(required=False, allow_null=True, default=None)
    framing = serializers.ChoiceField(
        choices=[value.value for value in Framing], required=False, default=Framing.ORIGINAL.value
    )
    max_turns = serializers.IntegerField(min_value=1, required=False, default=DEFAULT_MAX_TURNS)
    slots_per_side_per_turn = serializers.IntegerField(min_value=1, required=False, default=DEFAULT_SLOTS_PER_SIDE)


class ExperimentConfigSerializer(serializers.Serializer):
    """
    Serializer for the experiment configuration file.

    scenarios / experiment_b_scenarios fall back to the built-in tables when absent.
    """
    topics = TopicSerializer(many=True)
    scenarios = ScenarioSerializer(many=True, required=False)
    experiment_b_scenarios = ScenarioSerializer(many=True, required=False)
    pairings = ProviderPairingSerializer(many=True, required=False, default=list)
    experiment_b_models = ModelSpecSerializer(many=True, required=False, default=list)
    neutral_model = ModelSpecSerializer()
    scripts = serializers.DictField(child=serializers.DictField(), required=False, default=dict)
    run = RunParametersSerializer(required=False)

    def validate_topics(self, value):
        if not value:
            raise serializers.ValidationError("at least one topic is required")
        return value

    def validate(self, data):
        for field_name in ('topics', 'scenarios', 'experiment_b_scenarios', 'pairings'):
            ids = [item['id'] for item in data.get(field_name) or []]
            duplicates = sorted({item_id for item_id in ids if ids.count(item_id) > 1})
            if duplicates:
                raise serializers.ValidationError({
                    field_name: f"duplicate ids: {', '.join(duplicates)}"
                })

        script_names = set((data.get('scripts') or {}).keys())
        referenced = [data['neutral_model']] + list(data.get('experiment_b_models') or [])
        for pairing in data.get('pairings') or []:
            referenced.extend([pairing['large'], pairing['small']])
        missing = sorted({
            spec['script'] for spec in referenced
            if spec.get('provider_kind') == ProviderKind.SCRIPTED.value and spec['script'] not in script_names
        })
        if missing:
            raise serializers.ValidationError({
                'scripts': f"unknown scripts referenced: {', '.join(missing)}"
            })
        return data
