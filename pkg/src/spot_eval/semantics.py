"""Semantic-match predicates: exact, edit-distance, and external judge.

String matchers are pure. The judge matcher talks to an external process over
the same line protocol as model adapters and caches verdicts on disk so reruns
are deterministic.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Protocol

from .model import SpotEvalError, TaskKind

ALTERNATIVES_SEPARATOR = ";"


class JudgeError(SpotEvalError):
    """Evaluation failure: the judge was unreachable or kept answering garbage.

    Deliberately not a non-match: a broken judge must not silently depress scores.
    """


@dataclass(frozen=True)
class Normalization:
    lowercase: bool = True
    trim: bool = True
    collapse_whitespace: bool = True

    def apply(self, text: str) -> str:
        if self.trim:
            text = text.strip()
        if self.collapse_whitespace:
            text = " ".join(text.split())
        if self.lowercase:
            text = text.lower()
        return text


DEFAULT_NORMALIZATION = Normalization()


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def exact_match(pred: str, gold: str, norm: Normalization = DEFAULT_NORMALIZATION) -> bool:
    return norm.apply(pred) == norm.apply(gold)


def edit_distance_match(
    pred: str,
    gold: str,
    threshold: float = 0.8,
    norm: Normalization = DEFAULT_NORMALIZATION,
) -> bool:
    """True when normalized similarity ``1 - dist/max(len)`` reaches the threshold.

    Two empty strings count as a match.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    p = norm.apply(pred)
    g = norm.apply(gold)
    longest = max(len(p), len(g))
    if longest == 0:
        return True
    similarity = 1.0 - levenshtein(p, g) / longest
    return similarity >= threshold


def split_alternatives(gold: str, sep: str = ALTERNATIVES_SEPARATOR) -> list[str]:
    """Gold texts may list several acceptable responses separated by ';'."""
    parts = [p.strip() for p in gold.split(sep)]
    return [p for p in parts if p] or [gold]


class SemanticMatcher(Protocol):
    def matches(self, pred: str, gold: str, question: str = "", task: TaskKind | None = None) -> bool: ...


@dataclass(frozen=True)
class ExactMatcher:
    norm: Normalization = DEFAULT_NORMALIZATION

    def matches(self, pred: str, gold: str, question: str = "", task: TaskKind | None = None) -> bool:
        return any(exact_match(pred, alt, self.norm) for alt in split_alternatives(gold))


@dataclass(frozen=True)
class EditDistanceMatcher:
    threshold: float = 0.8
    norm: Normalization = DEFAULT_NORMALIZATION

    def matches(self, pred: str, gold: str, question: str = "", task: TaskKind | None = None) -> bool:
        return any(
            edit_distance_match(pred, alt, self.threshold, self.norm)
            for alt in split_alternatives(gold)
        )


@dataclass(frozen=True)
class JudgeVerdict:
    matched: bool
    score: int


def _triple_key(pred: str, gold: str, question: str) -> str:
    payload = json.dumps([question, gold, pred], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class JudgeCache:
    """Append-only verdict store keyed by a content hash of (pred, gold, question)."""

    def __init__(self, path: str | None = None):
        self.path = path
        self._entries: dict[str, JudgeVerdict] = {}
        if path is not None:
            try:
                with open(path, "r", encoding="utf-8") as fh:
                    for line in fh:
                        line = line.strip()
                        if not line:
                            continue
                        rec = json.loads(line)
                        self._entries[rec["key"]] = JudgeVerdict(
                            bool(rec["matched"]), int(rec["score"])
                        )
            except FileNotFoundError:
                pass

    def get(self, pred: str, gold: str, question: str) -> JudgeVerdict | None:
        return self._entries.get(_triple_key(pred, gold, question))

    def put(
        self, pred: str, gold: str, question: str, task: TaskKind | None, verdict: JudgeVerdict
    ) -> None:
        key = _triple_key(pred, gold, question)
        if key in self._entries:
            return
        self._entries[key] = verdict
        if self.path is not None:
            rec = {
                "key": key,
                "task": task.value if task is not None else None,
                "question": question,
                "gold": gold,
                "pred": pred,
                "matched": verdict.matched,
                "score": verdict.score,
            }
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    def __len__(self) -> int:
        return len(self._entries)


def parse_verdict_line(line: str) -> JudgeVerdict:
    """Parse the judge's strict one-line verdict: {"pred": "yes"|"no", "score": 0-5}."""
    rec = json.loads(line)
    if not isinstance(rec, Mapping):
        raise ValueError("verdict must be an object")
    pred = rec.get("pred")
    if pred not in ("yes", "no"):
        raise ValueError(f"verdict field 'pred' must be yes/no, got {pred!r}")
    score = rec.get("score")
    if isinstance(score, bool) or not isinstance(score, int) or not 0 <= score <= 5:
        raise ValueError(f"verdict field 'score' must be an integer 0-5, got {score!r}")
    return JudgeVerdict(matched=(pred == "yes"), score=score)


class JudgeClient:
    """Line-protocol client for an external judge process.

    Requests carry {id, task, gold, pred, question?}; the reply must be the
    one-line verdict schema. Malformed replies are retried up to
    ``max_retries`` times before raising :class:`JudgeError`.
    """

    def __init__(self, cmd: list[str] | str, max_retries: int = 2):
        self.max_retries = max_retries
        self.attempts = 0
        self._next_id = 0
        if isinstance(cmd, str):
            cmd = shlex.split(cmd)
        try:
            self._proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise JudgeError(f"judge endpoint unreachable: {exc}") from exc

    def verdict(
        self, pred: str, gold: str, question: str = "", task: TaskKind | None = None
    ) -> JudgeVerdict:
        last_error = "no reply"
        for _ in range(1 + self.max_retries):
            self._next_id += 1
            request: dict[str, Any] = {
                "id": self._next_id,
                "task": task.value if task is not None else None,
                "gold": gold,
                "pred": pred,
            }
            if question:
                request["question"] = question
            self.attempts += 1
            try:
                assert self._proc.stdin is not None and self._proc.stdout is not None
                self._proc.stdin.write(json.dumps(request, ensure_ascii=False) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise JudgeError(f"judge endpoint unreachable: {exc}") from exc
            if not line:
                raise JudgeError("judge endpoint closed the stream")
            try:
                rec = json.loads(line)
                if isinstance(rec, Mapping) and "id" in rec and rec["id"] != request["id"]:
                    raise ValueError(f"verdict id {rec['id']} does not match request")
                return parse_verdict_line(line)
            except ValueError as exc:
                last_error = str(exc)
                continue
        raise JudgeError(f"unparsable judge verdict after retries: {last_error}")

    def close(self) -> None:
        if self._proc.stdin is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        self._proc.wait(timeout=10)

    def __enter__(self) -> "JudgeClient":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


@dataclass
class JudgeMatcher:
    """Matcher backed by an external judge, with exact-equality short-circuit."""

    client: JudgeClient
    cache: JudgeCache = field(default_factory=JudgeCache)
    norm: Normalization = DEFAULT_NORMALIZATION

    def matches(self, pred: str, gold: str, question: str = "", task: TaskKind | None = None) -> bool:
        return self.verdict(pred, gold, question, task).matched

    def verdict(
        self, pred: str, gold: str, question: str = "", task: TaskKind | None = None
    ) -> JudgeVerdict:
        if self.norm.apply(pred) == self.norm.apply(gold):
            return JudgeVerdict(matched=True, score=5)
        cached = self.cache.get(pred, gold, question)
        if cached is not None:
            return cached
        verdict = self.client.verdict(pred, gold, question, task)
        self.cache.put(pred, gold, question, task, verdict)
        return verdict


def make_matcher(
    kind: str,
    threshold: float = 0.8,
    judge_cmd: list[str] | str | None = None,
    cache_path: str | None = None,
    max_retries: int = 2,
) -> SemanticMatcher:
    """Build one of the three matcher kinds: exact | edit | judge."""
    if kind == "exact":
        return ExactMatcher()
    if kind == "edit":
        return EditDistanceMatcher(threshold=threshold)
    if kind == "judge":
        if judge_cmd is None:
            raise ValueError("judge matcher needs a judge command")
        return JudgeMatcher(JudgeClient(judge_cmd, max_retries), JudgeCache(cache_path))
    raise ValueError(f"unknown matcher kind {kind!r}")


def detection_vocabulary() -> Iterable[str]:
    """Single-token outputs used by the detection tasks."""
    return ("start", "end", "now", "no")
