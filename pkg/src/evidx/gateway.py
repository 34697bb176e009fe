"""Uniform completion interface: live HTTP, record/replay cache, and mock.

Every completion is keyed by a content hash of the canonical request, so a
recorded run replays bit-exactly and a changed prompt surfaces as a replay
miss instead of a silent divergence.  The judge call used by the matcher
routes through the same cache.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from evidx import engine, oracle, queries
from evidx.schema import GoldRecord, project_gold

DEFAULT_TEMPERATURE = 0.1

ENV_API_BASE = "EVIDX_API_BASE"
ENV_API_KEY = "EVIDX_API_KEY"
ENV_JUDGE_MODEL = "EVIDX_JUDGE_MODEL"

JUDGE_QUESTION = "Do these refer to the same entity? Answer yes or no."

_FIRST_WORD_RE = re.compile(r"[A-Za-z]+")


class BackendError(RuntimeError):
    """Transport failure after retries, or an unusable backend configuration."""


class ReplayMissError(BackendError):
    """A replay-mode request whose key is not in the cache (fixture drift)."""

    def __init__(self, key: str):
        super().__init__(f"replay miss for request key {key} (prompt bytes changed?)")
        self.key = key


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    temperature: float = DEFAULT_TEMPERATURE
    prompt: str = ""
    max_tokens: int | None = None


def request_key(request: CompletionRequest) -> str:
    """Cryptographic hash of the canonical request serialization."""
    canonical = json.dumps(
        {
            "model": request.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "prompt": request.prompt,
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRecord:
    key: str
    response: str
    timestamp: float
    backend: str  # "live" | "replay" | "mock"


class CompletionCache:
    """Append-only on-disk cache: one JSON file per key under <root>/<hex2>/."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def has(self, key: str) -> bool:
        return self._path(key).is_file()

    def get(self, key: str) -> CompletionRecord | None:
        path = self._path(key)
        if not path.is_file():
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
        return CompletionRecord(
            key=data["key"],
            response=data["response"],
            timestamp=data["timestamp"],
            backend=data["backend"],
        )

    def put(self, record: CompletionRecord) -> None:
        path = self._path(record.key)
        with self._lock:
            if path.is_file():  # append-only: first write wins
                return
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(
                    {
                        "key": record.key,
                        "response": record.response,
                        "timestamp": record.timestamp,
                        "backend": record.backend,
                    },
                    ensure_ascii=False,
                    indent=2,
                )
                + "\n",
                encoding="utf-8",
            )
            tmp.replace(path)


def http_transport(base_url: str, api_key: str = "", timeout: float = 120.0) -> Callable:
    """POST a chat-completion payload and return the response text."""
    import requests

    url = base_url.rstrip("/") + "/chat/completions"

    def post(request: CompletionRequest) -> str:
        payload = {
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]

    return post


class Gateway:
    """Completion front-end shared by the runner, the matcher, and the judge.

    ``backend`` is one of "live", "replay", "mock".  Live calls retry with
    exponential backoff and write through to the cache; replay requires a
    cache hit for every key and performs zero network operations; mock calls
    a pluggable deterministic function of the prompt.  Concurrent callers are
    de-duplicated in flight: at most one live call per key per process.
    """

    def __init__(
        self,
        backend: str = "mock",
        model: str = "mock-model",
        temperature: float = DEFAULT_TEMPERATURE,
        max_tokens: int | None = None,
        cache: CompletionCache | str | Path | None = None,
        mock_fn: Callable[[str], str] | None = None,
        transport: Callable[[CompletionRequest], str] | None = None,
        judge_model: str | None = None,
        retries: int = 3,
        backoff: float = 1.0,
    ):
        if backend not in ("live", "replay", "mock"):
            raise BackendError(f"unknown backend {backend!r}")
        if backend == "replay" and cache is None:
            raise BackendError("replay backend requires a cache directory")
        self.backend = backend
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.cache = CompletionCache(cache) if isinstance(cache, (str, Path)) else cache
        self.mock_fn = mock_fn
        self.transport = transport
        self.judge_model = judge_model or model
        self.retries = retries
        self.backoff = backoff
        self.network_calls = 0
        self.judge_calls = 0
        self.judge_log: list[dict] = []
        self.warnings: list[str] = []
        self._inflight: dict[str, threading.Lock] = {}
        self._inflight_guard = threading.Lock()

    # -- request plumbing ---------------------------------------------------

    def build_request(self, prompt: str, model: str | None = None) -> CompletionRequest:
        return CompletionRequest(
            model=model or self.model,
            temperature=self.temperature,
            prompt=prompt,
            max_tokens=self.max_tokens,
        )

    def key_for(self, prompt: str, model: str | None = None) -> str:
        return request_key(self.build_request(prompt, model))

    def complete_text(self, prompt: str, model: str | None = None) -> tuple[str, str]:
        request = self.build_request(prompt, model)
        return request_key(request), self.complete(request)

    # -- completion ---------------------------------------------------------

    def complete(self, request: CompletionRequest) -> str:
        key = request_key(request)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit.response
        if self.backend == "replay":
            raise ReplayMissError(key)

        with self._inflight_guard:
            lock = self._inflight.setdefault(key, threading.Lock())
        with lock:
            if self.cache is not None:
                hit = self.cache.get(key)
                if hit is not None:  # produced by a concurrent caller
                    return hit.response
            if self.backend == "mock":
                if self.mock_fn is None:
                    raise BackendError("mock backend requires a mock_fn")
                response = self.mock_fn(request.prompt)
            else:
                response = self._live(request, key)
            if self.cache is not None:
                self.cache.put(
                    CompletionRecord(key=key, response=response, timestamp=time.time(), backend=self.backend)
                )
            return response

    def _live(self, request: CompletionRequest, key: str) -> str:
        if self.transport is None:
            raise BackendError("live backend requires a transport (set EVIDX_API_BASE)")
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                self.network_calls += 1
                return self.transport(request)
            except Exception as exc:  # transport failures only
                last = exc
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff * (2**attempt))
        raise BackendError(f"live completion failed after {self.retries} attempts for key {key}: {last}")

    # -- judge --------------------------------------------------------------

    def judge_prompt(self, a: str, b: str, context: str) -> str:
        return (
            "You are verifying whether two phrases refer to the same entity.\n"
            f"Context: {context}.\n"
            f'Phrase A: "{a}"\n'
            f'Phrase B: "{b}"\n'
            f"{JUDGE_QUESTION}"
        )

    def judge_request(self, a: str, b: str, context: str) -> CompletionRequest:
        return self.build_request(self.judge_prompt(a, b, context), model=self.judge_model)

    def judge_equivalence(self, a: str, b: str, context: str) -> bool:
        """Binary entity-equivalence verdict; unverifiable answers are "no".

        The first alphabetic token of the response decides, case-insensitive;
        anything that is not yes/no is conservatively treated as no, with a
        warning recorded.
        """
        request = self.judge_request(a, b, context)
        key = request_key(request)
        self.judge_calls += 1
        response = self.complete(request)
        m = _FIRST_WORD_RE.search(response)
        token = m.group(0).lower() if m else ""
        if token == "yes":
            verdict = True
        elif token == "no":
            verdict = False
        else:
            verdict = False
            self.warnings.append(f"malformed judge output treated as no: {response[:60]!r}")
        self.judge_log.append({"key": key, "a": a, "b": b, "context": context, "verdict": verdict})
        return verdict


# ---------------------------------------------------------------------------
# Deterministic gold-echo mock


class GoldEchoMock:
    """Default mock backend: answers every prompt from the gold annotations.

    List-style prompts are answered with the serialized gold projections of
    the documents in scope; per-document derived prompts with the oracle's
    per-document answers; corpus-level scalar prompts with the oracle value;
    aggregation prompts by actually combining the per-document outputs listed
    in the prompt.  ``tuple_filter(query_id, doc_id, row) -> bool`` drops rows
    before serialization, which lets tests plant controlled extraction losses.
    Judge prompts are answered with ``judge_answer`` (default "no").
    """

    def __init__(
        self,
        gold: Sequence[GoldRecord],
        tuple_filter: Callable[[str, int, dict], bool] | None = None,
        judge_answer: str = "no",
    ):
        self.records = {r.doc_id: r for r in gold}
        self.tuple_filter = tuple_filter
        self.judge_answer = judge_answer

    def __call__(self, prompt: str) -> str:
        if JUDGE_QUESTION in prompt:
            return self.judge_answer
        query_id = engine.prompt_query_id(prompt)
        if query_id is None:
            raise BackendError("mock cannot identify the query in this prompt")
        spec = queries.get(query_id)

        if engine.is_aggregation_prompt(prompt):
            return self._aggregate(spec, prompt)

        doc_ids = engine.prompt_doc_ids(prompt) or sorted(self.records)
        records = [self.records[d] for d in doc_ids if d in self.records]

        if spec.scalar:
            if engine.PER_DOC_ATOM_TEXT in prompt:
                # Per-paper atom phase: the document's sample-size atoms,
                # one row per recorded entry so totals stay exact.
                rows = []
                for r in records:
                    rows.extend(self._atom_rows(spec.id, r))
                return engine.serialize_rows(rows)
            # Global regime: the corpus-level scalar over per-document totals
            # (honoring any planted losses; the unfiltered value equals the
            # oracle answer by construction).
            totals = [self._doc_total(spec.id, r) for r in records]
            return engine.serialize_scalar(self._scalar_value(spec.id, totals))

        if spec.level == "C":
            rows = [t.as_row() for t in oracle.derived_gold_tuples(records, spec.id)]
        else:
            rows = [t.as_row() for r in records for t in project_gold(r, spec)]
        return engine.serialize_rows(self._filter(spec.id, rows))

    def _filter(self, query_id: str, rows: list[dict]) -> list[dict]:
        if self.tuple_filter is None:
            return rows
        return [row for row in rows if self.tuple_filter(query_id, row.get("doc"), row)]

    def _atom_rows(self, query_id: str, record: GoldRecord) -> list[dict]:
        if record.sample_sizes:
            rows = [{"doc": record.doc_id, "N": n} for n in record.sample_sizes]
        else:
            rows = [{"doc": record.doc_id, "N": None}]
        return self._filter(query_id, rows)

    def _doc_total(self, query_id: str, record: GoldRecord) -> int | None:
        values = [row["N"] for row in self._atom_rows(query_id, record) if row.get("N") is not None]
        return sum(values) if values else None

    @staticmethod
    def _scalar_value(query_id: str, totals):
        if query_id == "O_C_Q1":
            return oracle.count_gt_values(totals)
        if query_id == "O_C_Q2":
            return oracle.mean_values(totals)
        if query_id == "O_C_Q3":
            return oracle.median_values(totals)
        raise BackendError(f"no scalar rule for {query_id}")

    def _aggregate(self, spec, prompt: str) -> str:
        """Combine the per-document outputs actually listed in the prompt."""
        totals = []
        for _, text in engine.aggregation_sections(prompt):
            values = []
            for line in text.splitlines():
                line = line.strip()
                if not line.startswith("{"):
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError:
                    continue
                if isinstance(obj, dict) and obj.get("N") is not None:
                    values.append(int(obj["N"]))
            totals.append(sum(values) if values else None)
        return engine.serialize_scalar(self._scalar_value(spec.id, totals))
