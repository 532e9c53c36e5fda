"""Batch corpus extraction: candidates -> model scores -> interaction records.

Positively classified candidates become interaction records with a
normalized year, optional geocodes from a gazetteer file, and (after the
typing step) one of three interaction types. Extraction is resumable by
document and byte-identical across clean re-runs.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import CandidateQuadruple, TrajectoryTriple, generate_candidates, normalize_surface

INTERACTION_TYPES = ("Adversarial", "Cooperative", "Neutral")
YEAR_RANGE = (1000, 2024)

_YEAR_RE = re.compile(r"(?<!\d)(\d{3,4})(?!\d)")


def normalize_time(surface: str) -> int | None:
    """Extract a single plausible 3-4 digit year; None when absent or ambiguous.

    Plausible means 100-999 for three digits and 1000-2999 for four. Two or
    more distinct plausible years (ranges like "1950 to 1953") are ambiguous.
    """
    candidates = set()
    for match in _YEAR_RE.finditer(surface):
        year = int(match.group(1))
        if (100 <= year <= 999) or (1000 <= year <= 2999):
            candidates.add(year)
    if len(candidates) != 1:
        return None
    return candidates.pop()


@dataclass
class InteractionRecord:
    record_id: str
    doc_id: str
    segment_id: str
    char_start: int
    char_end: int
    person1: str
    person2: str
    time_surface: str
    time_year: int | None
    location: str
    score: float
    person1_id: str | None = None
    person2_id: str | None = None
    lat: float | None = None
    lon: float | None = None
    state: str | None = None
    interaction_type: str | None = None
    type_flag: str | None = None

    def to_json(self) -> dict:
        rec = {
            "record_id": self.record_id,
            "doc_id": self.doc_id,
            "segment_id": self.segment_id,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "person1": self.person1,
            "person2": self.person2,
            "time_surface": self.time_surface,
            "time_year": self.time_year,
            "location": self.location,
            "score": self.score,
        }
        for key in ("person1_id", "person2_id", "lat", "lon", "state",
                    "interaction_type", "type_flag"):
            value = getattr(self, key)
            if value is not None:
                rec[key] = value
        return rec

    @classmethod
    def from_json(cls, obj: dict) -> "InteractionRecord":
        return cls(**{k: obj.get(k) for k in (
            "record_id", "doc_id", "segment_id", "char_start", "char_end",
            "person1", "person2", "time_surface", "time_year", "location",
            "score", "person1_id", "person2_id", "lat", "lon", "state",
            "interaction_type", "type_flag")})


def record_id_for(cand: CandidateQuadruple) -> str:
    key = json.dumps([cand.segment.doc_id, cand.segment.segment_id,
                      cand.person1.norm, cand.person2.norm,
                      cand.time.norm, cand.location.norm])
    return hashlib.sha1(key.encode()).hexdigest()[:12]


def load_gazetteer(path: str | Path) -> dict:
    """Location surface -> {lat, lon, state?}, keys normalized for lookup."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {normalize_surface(k): v for k, v in raw.items()}


def record_from_candidate(cand: CandidateQuadruple, score: float,
                          gazetteer: dict | None = None) -> InteractionRecord:
    year = normalize_time(cand.time.surface)
    if year is not None and not (YEAR_RANGE[0] <= year <= YEAR_RANGE[1]):
        year = None
    rec = InteractionRecord(
        record_id=record_id_for(cand),
        doc_id=cand.segment.doc_id,
        segment_id=cand.segment.segment_id,
        char_start=cand.segment.char_start,
        char_end=cand.segment.char_end,
        person1=cand.person1.surface,
        person2=cand.person2.surface,
        time_surface=cand.time.surface,
        time_year=year,
        location=cand.location.surface,
        score=score,
    )
    if gazetteer:
        hit = gazetteer.get(cand.location.norm)
        if hit:
            rec.lat = hit.get("lat")
            rec.lon = hit.get("lon")
            rec.state = hit.get("state")
    return rec


@dataclass
class ExtractSummary:
    candidates: int = 0
    positives: int = 0
    negatives: int = 0
    skipped: int = 0
    documents: int = 0
    excluded_lines: int = 0

    def to_json(self) -> dict:
        return {"candidates": self.candidates, "positives": self.positives,
                "negatives": self.negatives, "skipped": self.skipped,
                "documents": self.documents, "excluded_lines": self.excluded_lines}


def extract_corpus(triples: Sequence[TrajectoryTriple], model, out_path: str | Path,
                   threshold: float = 0.5, summary_path: str | Path | None = None,
                   state_path: str | Path | None = None,
                   gazetteer: dict | None = None) -> ExtractSummary:
    """Pair, score, and stream positive records per document in sorted order.

    With ``state_path`` the run is resumable: completed doc_ids are recorded
    after each document and skipped (with their counts restored) on restart.
    """
    from .training import predict

    by_doc: dict[str, list[TrajectoryTriple]] = {}
    for t in triples:
        by_doc.setdefault(t.segment.doc_id, []).append(t)

    summary = ExtractSummary()
    done: dict[str, dict] = {}
    if state_path and Path(state_path).exists():
        state = json.loads(Path(state_path).read_text(encoding="utf-8"))
        done = state.get("done", {})
        for counts in done.values():
            summary.candidates += counts["candidates"]
            summary.positives += counts["positives"]
            summary.negatives += counts["negatives"]
            summary.skipped += counts["skipped"]
            summary.documents += 1

    mode = "a" if done else "w"
    with open(out_path, mode, encoding="utf-8") as out:
        for doc_id in sorted(by_doc):
            if doc_id in done:
                continue
            candidates = generate_candidates(by_doc[doc_id])
            preds = predict(model, candidates, threshold=threshold)
            counts = {"candidates": len(candidates), "positives": 0,
                      "negatives": 0, "skipped": 0}
            for pred in preds:
                if pred.skipped:
                    counts["skipped"] += 1
                elif pred.label == 1:
                    counts["positives"] += 1
                    rec = record_from_candidate(pred.candidate, pred.score, gazetteer)
                    out.write(json.dumps(rec.to_json(), ensure_ascii=False,
                                         separators=(",", ":")) + "\n")
                else:
                    counts["negatives"] += 1
            out.flush()
            summary.candidates += counts["candidates"]
            summary.positives += counts["positives"]
            summary.negatives += counts["negatives"]
            summary.skipped += counts["skipped"]
            summary.documents += 1
            if state_path:
                done[doc_id] = counts
                Path(state_path).write_text(
                    json.dumps({"done": done}, sort_keys=True), encoding="utf-8")

    if summary_path:
        Path(summary_path).write_text(
            json.dumps(summary.to_json(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8")
    return summary


def load_records(path: str | Path) -> list[InteractionRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(InteractionRecord.from_json(json.loads(line)))
    return out


def dump_records(records: Iterable[InteractionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False,
                                separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# Interaction typing via a chat-completion client

class TransportError(RuntimeError):
    pass


class FixtureLLMClient:
    """Replays canned responses from a JSON list, cycling by call index."""

    def __init__(self, path: str | Path):
        with open(path, "r", encoding="utf-8") as fh:
            self.responses = json.load(fh)
        if not isinstance(self.responses, list) or not self.responses:
            raise ValueError(f"{path}: expected a non-empty JSON list of responses")
        self.calls = 0

    def complete(self, prompt: str) -> str:
        response = self.responses[self.calls % len(self.responses)]
        self.calls += 1
        return response


class HttpChatClient:
    """Minimal chat-completion client against an OpenAI-style endpoint."""

    def __init__(self, endpoint: str, model: str, api_key: str | None = None,
                 timeout: float = 30.0, temperature: float = 1.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.temperature = temperature

    def complete(self, prompt: str) -> str:
        body = json.dumps({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, method="POST")
        req.add_header("Content-Type", "application/json")
        if self.api_key:
            req.add_header("Authorization", f"Bearer {self.api_key}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise TransportError(str(exc)) from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {payload!r}") from exc


def make_llm_client(spec: str, model: str = "gpt-4o-mini",
                    api_key: str | None = None):
    """Build a client from a CLI spec: ``fixture:<path>`` or ``http(s)://...``."""
    if spec.startswith("fixture:"):
        return FixtureLLMClient(spec[len("fixture:"):])
    if spec.startswith("http://") or spec.startswith("https://"):
        import os

        key = api_key or os.environ.get("FALCON_LLM_API_KEY")
        return HttpChatClient(spec, model=model, api_key=key)
    raise ValueError(f"unknown llm client spec {spec!r}")


def type_prompt(record: InteractionRecord, context: str | None = None) -> str:
    year = record.time_year if record.time_year is not None else record.time_surface
    lines = [
        f"Two political figures, {record.person1} and {record.person2}, "
        f"interacted in {record.location} in {year}.",
    ]
    if context:
        lines.append(f"Context: {context}")
    lines.append(
        "Classify this interaction. Answer with exactly one word:\n"
        "Adversarial - conflicting political interests (campaigns against each "
        "other, debates, lawsuits).\n"
        "Cooperative - joint action toward shared political goals (co-sponsored "
        "work, endorsements, coalitions).\n"
        "Neutral - personal, ceremonial, or otherwise non-political contact.")
    return "\n".join(lines)


_TYPE_RE = re.compile("|".join(INTERACTION_TYPES), re.IGNORECASE)


def parse_type(response: str) -> str | None:
    match = _TYPE_RE.search(response)
    if not match:
        return None
    return match.group(0).capitalize()


def classify_type(record: InteractionRecord, llm_client, context: str | None = None,
                  max_attempts: int = 3, backoff: float = 0.5) -> InteractionRecord:
    """Attach one of the three interaction types to a record.

    Unparseable responses default to Neutral with a ``defaulted`` flag so the
    record accounting stays total; transport failures are retried with
    exponential backoff and finally marked ``unclassified``.
    """
    prompt = type_prompt(record, context)
    response = None
    for attempt in range(max_attempts):
        try:
            response = llm_client.complete(prompt)
            break
        except TransportError:
            if attempt == max_attempts - 1:
                record.interaction_type = None
                record.type_flag = "unclassified"
                return record
            time.sleep(backoff * (2 ** attempt))
    parsed = parse_type(response)
    if parsed is None:
        record.interaction_type = "Neutral"
        record.type_flag = "defaulted"
    else:
        record.interaction_type = parsed
        record.type_flag = None
    return record


@dataclass
class TypingSummary:
    counts: dict = field(default_factory=dict)
    defaulted: int = 0
    unclassified: int = 0


def classify_records(records: Sequence[InteractionRecord], llm_client,
                     **kwargs) -> TypingSummary:
    summary = TypingSummary()
    for rec in records:
        classify_type(rec, llm_client, **kwargs)
        if rec.type_flag == "unclassified":
            summary.unclassified += 1
            continue
        if rec.type_flag == "defaulted":
            summary.defaulted += 1
        summary.counts[rec.interaction_type] = summary.counts.get(
            rec.interaction_type, 0) + 1
    return summary
