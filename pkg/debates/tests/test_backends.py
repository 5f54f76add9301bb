import json
import tempfile
from pathlib import Path

import httpx
from django.test import SimpleTestCase

from debates.domain import ModelSpec, ProviderKind, SizeClass
from debates.exceptions import BackendRequestError, BackendTransportError, ConfigurationError
from debates.services.backends import (
    USER,
    AnthropicCompatibleBackend,
    AuditLog,
    BackendPolicy,
    BackendRouter,
    ChatMessage,
    ChatRequest,
    OpenAICompatibleBackend,
    RequestTag,
    TokenBucket,
    build_backends,
)
from debates.services.scripts import VerdictPolicyScript
from debates.tests.factories import scripted_spec

OPENAI_BODY = {
    'id': 'chatcmpl-1',
    'object': 'chat.completion',
    'created': 0,
    'model': 'gpt-4o-mini-2024-07-18',
    'choices': [{'index': 0, 'message': {'role': 'assistant', 'content': 'A measured reply.'},
                 'finish_reason': 'stop'}],
    'usage': {'prompt_tokens': 12, 'completion_tokens': 4, 'total_tokens': 16},
}
ANTHROPIC_BODY = {
    'id': 'msg_1',
    'type': 'message',
    'role': 'assistant',
    'model': 'claude-3-5-haiku-20241022',
    'content': [{'type': 'text', 'text': 'Hello from the other dialect.'}],
    'stop_reason': 'end_turn',
    'stop_sequence': None,
    'usage': {'input_tokens': 9, 'output_tokens': 6},
}


class RecordingTransport:
    """Serves queued (status, body) responses and records every request it sees."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        status, body = self.responses.pop(0)
        return httpx.Response(status, json=body)

    def client(self) -> httpx.Client:
        return httpx.Client(transport=httpx.MockTransport(self))


def live_spec(kind=ProviderKind.OPENAI_COMPATIBLE, model_id='gpt-4o-mini'):
    return ModelSpec(kind, model_id, SizeClass.SMALL, base_url='http://provider.test/v1', api_key_env='TEST_KEY')


def chat_request():
    return ChatRequest(
        system_prompt='You are a debater.',
        messages=(ChatMessage(USER, 'Debate topic: UBI'),),
        temperature=0.7,
        max_tokens=256,
        tag=RequestTag(agent_id='pro_1', turn=1, slot=1),
    )


class OpenAICompatibleBackendTests(SimpleTestCase):

    def backend(self, transport, max_retries=5, audit_log=None):
        self.sleeps = []
        return OpenAICompatibleBackend(
            policy=BackendPolicy(max_retries=max_retries),
            api_keys={'TEST_KEY': 'secret'},
            http_client=transport.client(),
            sleep=self.sleeps.append,
            audit_log=audit_log,
        )

    def test_rate_limits_are_retried(self):
        rate_limited = {'error': {'message': 'slow down', 'type': 'rate_limit'}}
        transport = RecordingTransport([(429, rate_limited), (429, rate_limited), (200, OPENAI_BODY)])
        completion = self.backend(transport).complete(live_spec(), chat_request())

        self.assertEqual(completion.text, 'A measured reply.')
        self.assertEqual(completion.model, 'gpt-4o-mini-2024-07-18')
        self.assertEqual((completion.input_tokens, completion.output_tokens), (12, 4))
        self.assertEqual(len(self.sleeps), 2)
        self.assertEqual([entry['ok'] for entry in completion.attempts], [False, False, True])
        self.assertEqual([entry['status'] for entry in completion.attempts], [429, 429, 200])

    def test_payload_carries_sampling_limits(self):
        transport = RecordingTransport([(200, OPENAI_BODY)])
        self.backend(transport).complete(live_spec(), chat_request())

        payload = json.loads(transport.requests[0].content)
        self.assertEqual(payload['max_tokens'], 256)
        self.assertEqual(payload['temperature'], 0.7)
        self.assertEqual(payload['messages'][0], {'role': 'system', 'content': 'You are a debater.'})
        self.assertEqual(transport.requests[0].headers['authorization'], 'Bearer secret')

    def test_client_errors_are_not_retried(self):
        transport = RecordingTransport([(400, {'error': {'message': 'bad request', 'type': 'invalid'}})])
        with self.assertRaises(BackendRequestError) as caught:
            self.backend(transport).complete(live_spec(), chat_request())
        self.assertEqual(len(transport.requests), 1)
        self.assertEqual(self.sleeps, [])
        self.assertEqual(caught.exception.attempt_log[0]['status'], 400)

    def test_retry_budget_exhausted(self):
        transport = RecordingTransport([(503, {'error': {'message': 'down'}})] * 3)
        with self.assertRaises(BackendTransportError) as caught:
            self.backend(transport, max_retries=2).complete(live_spec(), chat_request())
        self.assertEqual(len(caught.exception.attempt_log), 3)
        self.assertEqual(len(self.sleeps), 2)

    def test_audit_log_mirrors_every_attempt(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'audit.jsonl'
            transport = RecordingTransport([(429, {'error': {'message': 'slow'}}), (200, OPENAI_BODY)])
            self.backend(transport, audit_log=AuditLog(path)).complete(live_spec(), chat_request())
            records = [json.loads(line) for line in path.read_text(encoding='utf-8').splitlines()]
        self.assertEqual(len(records), 2)
        self.assertIsNone(records[0]['response'])
        self.assertEqual(records[1]['response']['text'], 'A measured reply.')
        self.assertEqual(records[1]['tag']['agent_id'], 'pro_1')


class AnthropicCompatibleBackendTests(SimpleTestCase):

    def test_messages_dialect(self):
        transport = RecordingTransport([(200, ANTHROPIC_BODY)])
        backend = AnthropicCompatibleBackend(api_keys={'TEST_KEY': 'secret'}, http_client=transport.client(),
                                             sleep=lambda seconds: None)
        completion = backend.complete(live_spec(ProviderKind.ANTHROPIC_COMPATIBLE, 'claude'), chat_request())

        self.assertEqual(completion.text, 'Hello from the other dialect.')
        self.assertEqual((completion.input_tokens, completion.output_tokens), (9, 6))
        payload = json.loads(transport.requests[0].content)
        self.assertEqual(payload['system'], 'You are a debater.')
        self.assertEqual(payload['max_tokens'], 256)
        self.assertEqual(payload['messages'], [{'role': 'user', 'content': 'Debate topic: UBI'}])


class TokenBucketTests(SimpleTestCase):

    def test_waits_for_refill(self):
        now = [0.0]
        sleeps = []

        def sleep(seconds):
            sleeps.append(seconds)
            now[0] += seconds

        bucket = TokenBucket(60, clock=lambda: now[0], sleep=sleep)
        bucket.acquire()
        bucket.acquire()
        self.assertEqual(sleeps, [1.0])


class BuildBackendsTests(SimpleTestCase):

    def test_missing_credentials_fail_at_startup(self):
        with self.assertRaises(ConfigurationError) as caught:
            build_backends([live_spec()], environ={})
        self.assertIn('TEST_KEY', str(caught.exception))

    def test_unknown_script_fails_at_startup(self):
        with self.assertRaises(ConfigurationError):
            build_backends([scripted_spec(script='missing')], scripts={'policy': VerdictPolicyScript()})

    def test_router_dispatches_by_provider_kind(self):
        router = build_backends([scripted_spec(), live_spec()], scripts={'policy': VerdictPolicyScript()},
                                environ={'TEST_KEY': 'secret'})
        self.assertEqual(set(router.backends),
                         {ProviderKind.SCRIPTED, ProviderKind.OPENAI_COMPATIBLE})
        completion = router.complete(scripted_spec(), chat_request())
        self.assertEqual(completion.text, VerdictPolicyScript.debater_line)

    def test_router_without_backend_for_kind(self):
        with self.assertRaises(ConfigurationError):
            BackendRouter({}).complete(scripted_spec(), chat_request())
