"""
CHAT BACKENDS
=============

Uniform completion interface over live provider HTTP APIs and the deterministic
scripted provider.

Live adapters speak one of two wire dialects (openai-compatible,
anthropic-compatible) through the official SDKs with SDK-level retries switched
off; retries, backoff, concurrency caps and rate limiting happen here so every
attempt lands in one attempt log.

INPUTS:  ModelSpec + ChatRequest
OUTPUTS: Completion (assistant text, reported model version, token usage, attempt log)
"""

import json
import logging
import os
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple

import anthropic
import httpx
import openai
from tenacity import Retrying, retry_if_exception, stop_after_attempt, wait_random_exponential

from debates.domain import ModelSpec, ProviderKind
from debates.exceptions import (
    BackendError,
    BackendRequestError,
    BackendTransportError,
    ConfigurationError,
    ScriptError,
)

logger = logging.getLogger(__name__)


USER = 'user'
ASSISTANT = 'assistant'

# Some providers reject a key-less client; local servers accept anything.
PLACEHOLDER_API_KEY = 'not-needed'


# ============================================================================
# REQUEST / RESPONSE TYPES
# ============================================================================

@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class RequestTag:
    """Where a request sits in the experiment; scripted playback keys off it."""
    run_id: str = ''
    agent_id: str = ''
    turn: int = 0
    slot: int = 0
    attempt: int = 1
    seed: int = 0
    scenario_id: str = ''
    topic_id: str = ''
    roster: Tuple[Tuple[str, str], ...] = ()

    @property
    def key(self) -> str:
        return f'{self.agent_id}:{self.turn}:{self.slot}'


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: Tuple[ChatMessage, ...]
    temperature: float
    max_tokens: int
    tag: RequestTag = field(default_factory=RequestTag)

    def normalized(self) -> 'ChatRequest':
        """Drop empty messages, merge consecutive same-role messages, open with a user message."""
        merged: List[ChatMessage] = []
        for message in self.messages:
            content = message.content.strip()
            if not content:
                continue
            if merged and merged[-1].role == message.role:
                merged[-1] = ChatMessage(message.role, f'{merged[-1].content}\n\n{content}')
            else:
                merged.append(ChatMessage(message.role, content))
        if merged and merged[0].role == ASSISTANT:
            merged.insert(0, ChatMessage(USER, 'The discussion so far:'))
        return replace(self, messages=tuple(merged))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'system_prompt': self.system_prompt,
            'messages': [asdict(message) for message in self.messages],
            'temperature': self.temperature,
            'max_tokens': self.max_tokens,
            'tag': asdict(self.tag),
        }


@dataclass(frozen=True)
class Completion:
    text: str
    model: str
    input_tokens: Optional[int] = None
    output_tokens: Optional[int] = None
    attempts: Tuple[Dict[str, Any], ...] = ()


@dataclass(frozen=True)
class BackendPolicy:
    max_retries: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 60.0
    timeout: float = 120.0
    max_concurrency: int = 8
    requests_per_minute: Optional[float] = None

    @classmethod
    def from_settings(cls) -> 'BackendPolicy':
        from django.conf import settings
        return cls(
            max_retries=settings.CONFORMITY_BACKEND_MAX_RETRIES,
            timeout=settings.CONFORMITY_BACKEND_TIMEOUT,
            max_concurrency=settings.CONFORMITY_BACKEND_MAX_CONCURRENCY,
            requests_per_minute=settings.CONFORMITY_BACKEND_REQUESTS_PER_MINUTE,
        )


class ChatBackend(ABC):
    """The seam between the protocol engine and the network."""

    @abstractmethod
    def complete(self, spec: ModelSpec, request: ChatRequest) -> Completion:
        ...


# ============================================================================
# RATE LIMITING AND AUDIT
# ============================================================================

class TokenBucket:
    """Blocking token bucket; capacity is one second's worth of requests (at least one)."""

    def __init__(self, requests_per_minute: float,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = requests_per_minute / 60.0
        self.capacity = max(1.0, self.rate)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._updated) * self.rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


class AuditLog:
    """Append-only JSONL mirror of raw provider requests and responses."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def write(self, record: Dict[str, Any]) -> None:
        line = json.dumps(record, ensure_ascii=False, default=str)
        with self._lock:
            with self.path.open('a', encoding='utf-8') as handle:
                handle.write(line + '\n')


# ============================================================================
# LIVE HTTP BACKENDS
# ============================================================================

def status_of(exc: BaseException) -> Optional[int]:
    status = getattr(exc, 'status_code', None)
    if status is None and isinstance(exc, httpx.HTTPStatusError):
        status = exc.response.status_code
    return status


def is_retryable(exc: BaseException) -> bool:
    """Transport errors, HTTP 429 and HTTP 5xx are retried; everything else is final."""
    if isinstance(exc, BackendError):
        return False
    if isinstance(exc, (openai.APIConnectionError, anthropic.APIConnectionError, httpx.TransportError)):
        return True
    status = status_of(exc)
    return status is not None and (status == 429 or status >= 500)


class HttpChatBackend(ChatBackend):
    """Retry, concurrency and rate-limit shell shared by both wire dialects."""

    dialect = ''

    def __init__(self, policy: Optional[BackendPolicy] = None,
                 api_keys: Optional[Mapping[str, str]] = None,
                 http_client: Optional[httpx.Client] = None,
                 sleep: Callable[[float], None] = time.sleep,
                 audit_log: Optional[AuditLog] = None):
        self.policy = policy or BackendPolicy()
        self.api_keys = dict(api_keys or {})
        self.http_client = http_client
        self.audit_log = audit_log
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(self.policy.max_concurrency)
        self._bucket = (TokenBucket(self.policy.requests_per_minute, sleep=sleep)
                        if self.policy.requests_per_minute else None)
        self._clients: Dict[Tuple[Optional[str], Optional[str]], Any] = {}
        self._clients_lock = threading.Lock()

    def api_key_for(self, spec: ModelSpec) -> str:
        if spec.api_key_env:
            return self.api_keys.get(spec.api_key_env) or PLACEHOLDER_API_KEY
        return PLACEHOLDER_API_KEY

    def client_for(self, spec: ModelSpec) -> Any:
        key = (spec.base_url, spec.api_key_env)
        with self._clients_lock:
            if key not in self._clients:
                self._clients[key] = self.build_client(spec)
            return self._clients[key]

    @abstractmethod
    def build_client(self, spec: ModelSpec) -> Any:
        ...

    @abstractmethod
    def build_payload(self, spec: ModelSpec, request: ChatRequest) -> Dict[str, Any]:
        ...

    @abstractmethod
    def send(self, client: Any, payload: Dict[str, Any], spec: ModelSpec) -> Completion:
        ...

    def complete(self, spec: ModelSpec, request: ChatRequest) -> Completion:
        request = request.normalized()
        payload = self.build_payload(spec, request)
        attempt_log: List[Dict[str, Any]] = []
        completion: Optional[Completion] = None

        retrying = Retrying(
            stop=stop_after_attempt(self.policy.max_retries + 1),
            wait=wait_random_exponential(multiplier=self.policy.backoff_base, max=self.policy.backoff_cap),
            retry=retry_if_exception(is_retryable),
            sleep=self._sleep,
            reraise=True,
        )
        try:
            for attempt in retrying:
                with attempt:
                    completion = self._attempt(spec, request, payload, attempt.retry_state.attempt_number, attempt_log)
        except Exception as exc:
            if is_retryable(exc):
                raise BackendTransportError(
                    f'{spec.model_id}: retry budget exhausted after {len(attempt_log)} attempts: {exc}',
                    attempt_log,
                ) from exc
            raise BackendRequestError(f'{spec.model_id}: request rejected: {exc}', attempt_log) from exc

        return replace(completion, attempts=tuple(attempt_log))

    def _attempt(self, spec: ModelSpec, request: ChatRequest, payload: Dict[str, Any],
                 number: int, attempt_log: List[Dict[str, Any]]) -> Completion:
        if self._bucket is not None:
            self._bucket.acquire()
        started = time.monotonic()
        # The semaphore covers one attempt only; backoff sleeps happen outside it
        with self._semaphore:
            try:
                completion = self.send(self.client_for(spec), payload, spec)
            except Exception as exc:
                entry = {
                    'attempt': number,
                    'ok': False,
                    'status': status_of(exc),
                    'error': type(exc).__name__,
                    'message': str(exc)[:500],
                    'elapsed_seconds': round(time.monotonic() - started, 3),
                }
                attempt_log.append(entry)
                self._audit(spec, request, payload, entry, None)
                logger.warning("%s attempt %d for %s failed: %s %s",
                               spec.model_id, number, request.tag.key, entry['error'], entry['status'])
                raise
        entry = {
            'attempt': number,
            'ok': True,
            'status': 200,
            'elapsed_seconds': round(time.monotonic() - started, 3),
        }
        attempt_log.append(entry)
        self._audit(spec, request, payload, entry, completion)
        return completion

    def _audit(self, spec: ModelSpec, request: ChatRequest, payload: Dict[str, Any],
               entry: Dict[str, Any], completion: Optional[Completion]) -> None:
        if self.audit_log is None:
            return
        self.audit_log.write({
            'dialect': self.dialect,
            'base_url': spec.base_url,
            'tag': asdict(request.tag),
            'request': payload,
            'attempt': entry,
            'response': None if completion is None else {
                'text': completion.text,
                'model': completion.model,
                'input_tokens': completion.input_tokens,
                'output_tokens': completion.output_tokens,
            },
        })


class OpenAICompatibleBackend(HttpChatBackend):
    dialect = ProviderKind.OPENAI_COMPATIBLE.value

    def build_client(self, spec: ModelSpec) -> openai.OpenAI:
        return openai.OpenAI(
            api_key=self.api_key_for(spec),
            base_url=spec.base_url,
            timeout=self.policy.timeout,
            max_retries=0,
            http_client=self.http_client,
        )

    def build_payload(self, spec: ModelSpec, request: ChatRequest) -> Dict[str, Any]:
        messages = [{'role': 'system', 'content': request.system_prompt}]
        messages.extend({'role': message.role, 'content': message.content} for message in request.messages)
        return {
            'model': spec.model_id,
            'messages': messages,
            'temperature': request.temperature,
            'max_tokens': request.max_tokens,
        }

    def send(self, client: openai.OpenAI, payload: Dict[str, Any], spec: ModelSpec) -> Completion:
        response = client.chat.completions.create(**payload)
        usage = response.usage
        return Completion(
            text=response.choices[0].message.content or '',
            model=response.model or spec.model_id,
            input_tokens=getattr(usage, 'prompt_tokens', None),
            output_tokens=getattr(usage, 'completion_tokens', None),
        )


class AnthropicCompatibleBackend(HttpChatBackend):
    dialect = ProviderKind.ANTHROPIC_COMPATIBLE.value

    def build_client(self, spec: ModelSpec) -> anthropic.Anthropic:
        return anthropic.Anthropic(
            api_key=self.api_key_for(spec),
            base_url=spec.base_url,
            timeout=self.policy.timeout,
            max_retries=0,
            http_client=self.http_client,
        )

    def build_payload(self, spec: ModelSpec, request: ChatRequest) -> Dict[str, Any]:
        return {
            'model': spec.model_id,
            'system': request.system_prompt,
            'messages': [{'role': message.role, 'content': message.content} for message in request.messages],
            'temperature': request.temperature,
            'max_tokens': request.max_tokens,
        }

    def send(self, client: anthropic.Anthropic, payload: Dict[str, Any], spec: ModelSpec) -> Completion:
        response = client.messages.create(**payload)
        text = ''.join(getattr(block, 'text', '') for block in response.content
                       if getattr(block, 'type', 'text') == 'text')
        usage = response.usage
        return Completion(
            text=text,
            model=response.model or spec.model_id,
            input_tokens=getattr(usage, 'input_tokens', None),
            output_tokens=getattr(usage, 'output_tokens', None),
        )


# ============================================================================
# SCRIPTED BACKEND AND ROUTING
# ============================================================================

class ScriptedBackend(ChatBackend):
    """Plays back named scripts; `spec.script` picks the script, the request tag picks the line."""

    def __init__(self, scripts: Mapping[str, Any]):
        self.scripts = dict(scripts)

    def complete(self, spec: ModelSpec, request: ChatRequest) -> Completion:
        script = self.scripts.get(spec.script or '')
        if script is None:
            raise ScriptError(request.tag.key, f'Unknown script {spec.script!r} for key {request.tag.key}')
        return Completion(
            text=script.reply(request),
            model=spec.model_id,
            attempts=({'attempt': 1, 'ok': True, 'status': None},),
        )


class BackendRouter(ChatBackend):
    """Dispatches each request to the backend registered for the spec's provider kind."""

    def __init__(self, backends: Mapping[ProviderKind, ChatBackend]):
        self.backends = {ProviderKind(kind): backend for kind, backend in backends.items()}

    def complete(self, spec: ModelSpec, request: ChatRequest) -> Completion:
        backend = self.backends.get(ProviderKind(spec.provider_kind))
        if backend is None:
            raise ConfigurationError(f'No backend configured for provider kind {spec.provider_kind}')
        return backend.complete(spec, request)


def build_backends(specs: Iterable[ModelSpec],
                   scripts: Optional[Mapping[str, Any]] = None,
                   policy: Optional[BackendPolicy] = None,
                   environ: Optional[Mapping[str, str]] = None,
                   http_client: Optional[httpx.Client] = None,
                   sleep: Callable[[float], None] = time.sleep,
                   audit_path: Optional[str] = None) -> BackendRouter:
    """
    Build one router covering every model spec of an experiment.

    Credentials are resolved here, at startup: a live spec naming an
    environment variable that is unset raises ConfigurationError, as does a
    scripted spec naming an unknown script.
    """
    environ = os.environ if environ is None else environ
    scripts = dict(scripts or {})
    specs = list(specs)

    missing_credentials = sorted({
        spec.api_key_env for spec in specs
        if spec.provider_kind is not ProviderKind.SCRIPTED and spec.api_key_env and not environ.get(spec.api_key_env)
    })
    if missing_credentials:
        raise ConfigurationError(f"Missing credentials in environment: {', '.join(missing_credentials)}")

    missing_scripts = sorted({
        spec.script or '<none>' for spec in specs
        if spec.provider_kind is ProviderKind.SCRIPTED and spec.script not in scripts
    })
    if missing_scripts:
        raise ConfigurationError(f"Unknown scripts: {', '.join(missing_scripts)}")

    api_keys = {spec.api_key_env: environ[spec.api_key_env] for spec in specs if spec.api_key_env and spec.api_key_env in environ}
    audit_log = AuditLog(Path(audit_path)) if audit_path else None
    kinds = {ProviderKind(spec.provider_kind) for spec in specs}
    backends: Dict[ProviderKind, ChatBackend] = {}
    if ProviderKind.SCRIPTED in kinds:
        backends[ProviderKind.SCRIPTED] = ScriptedBackend(scripts)
    live_args = dict(policy=policy or BackendPolicy(), api_keys=api_keys,
                     http_client=http_client, sleep=sleep, audit_log=audit_log)
    if ProviderKind.OPENAI_COMPATIBLE in kinds:
        backends[ProviderKind.OPENAI_COMPATIBLE] = OpenAICompatibleBackend(**live_args)
    if ProviderKind.ANTHROPIC_COMPATIBLE in kinds:
        backends[ProviderKind.ANTHROPIC_COMPATIBLE] = AnthropicCompatibleBackend(**live_args)

    logger.info("Backends ready: %s", ', '.join(sorted(kind.value for kind in backends)))
    return BackendRouter(backends)
