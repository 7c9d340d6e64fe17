"""Hallucination metrics over decoding transcripts: PHR, RHR, unique counts."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .packages import PackageList, normalize_name
from .parser import ExitPackageName, ParserState
from .profiles import EcosystemProfile


@dataclass(frozen=True)
class Occurrence:
    name: str
    offset: int


@dataclass(frozen=True)
class Response:
    occurrences: tuple[Occurrence, ...]
    response_id: str = ""


@dataclass(frozen=True)
class Transcript:
    responses: tuple[Response, ...]


@dataclass(frozen=True)
class MetricsReport:
    p_total: int
    p_hall: int
    p_hall_unique: int
    phr: float
    rhr: float

    def as_dict(self) -> dict:
        return {
            "p_total": self.p_total,
            "p_hall": self.p_hall,
            "p_hall_unique": self.p_hall_unique,
            "phr": self.phr,
            "rhr": self.rhr,
        }


def score(transcript: Transcript, oracle: PackageList) -> MetricsReport:
    """PHR = hallucinated / total recommended; RHR = responses with >= 1.

    Hallucination is judged on normalized names: registries treat
    "Pillow" and "pillow" as the same package, so should we.
    """
    p_total = 0
    p_hall = 0
    hall_unique: set[str] = set()
    responses_with_hall = 0
    for response in transcript.responses:
        hall_here = 0
        for occ in response.occurrences:
            p_total += 1
            if not oracle.contains(occ.name):
                p_hall += 1
                hall_here += 1
                hall_unique.add(normalize_name(occ.name))
        if hall_here:
            responses_with_hall += 1
    n_responses = len(transcript.responses)
    return MetricsReport(
        p_total=p_total,
        p_hall=p_hall,
        p_hall_unique=len(hall_unique),
        phr=(p_hall / p_total) if p_total else 0.0,
        rhr=(responses_with_hall / n_responses) if n_responses else 0.0,
    )


def extract_from_text(
    raw_response: str,
    profile: EcosystemProfile,
    response_id: str = "",
    bare_commands: bool = False,
) -> Response:
    """Re-parse stored text and collect install-command package names."""
    parser = ParserState(profile, dfa=None, bare_commands=bare_commands)
    events = parser.feed(raw_response) + parser.finish()
    occurrences = tuple(
        Occurrence(name=event.name, offset=event.start)
        for event in events
        if isinstance(event, ExitPackageName)
    )
    return Response(occurrences=occurrences, response_id=response_id)


def load_transcript(
    path: str | Path, profile: EcosystemProfile, bare_commands: bool = False
) -> Transcript:
    """Read a JSON-lines transcript: one {"id": ..., "text": ...} per line."""
    responses = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            responses.append(
                extract_from_text(
                    obj["text"],
                    profile,
                    response_id=str(obj.get("id", lineno)),
                    bare_commands=bare_commands,
                )
            )
    return Transcript(responses=tuple(responses))
