"""Pydantic request/response models for the pkgguard service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ListBuildRequest(BaseModel):
    input_path: str
    output_path: str | None = None
    normalize: bool = True
    strict: bool = False


class ListBuildResponse(BaseModel):
    count: int
    digest: str
    output_path: str | None = None
    diagnostics: list[str] = Field(default_factory=list)


class ListCheckRequest(BaseModel):
    list_path: str
    names: list[str]
    normalize: bool = True


class ListCheckResponse(BaseModel):
    results: dict[str, bool]


class VocabImportRequest(BaseModel):
    path: str


class VocabImportResponse(BaseModel):
    size: int
    control_ids: list[int]
    eos_id: int | None
    digest: str


class CacheBuildRequest(BaseModel):
    list_path: str
    output_path: str
    normalize: bool = True


class CacheBuildResponse(BaseModel):
    bytes_written: int
    state_count: int
    digest: str
    build_seconds: float


class CacheVerifyRequest(BaseModel):
    checkpoint_path: str
    list_path: str
    normalize: bool = True


class CacheVerifyResponse(BaseModel):
    ok: bool
    state_count: int
    name_count: int
    detail: str = ""


class ScoreRequest(BaseModel):
    transcript_path: str
    list_path: str
    normalize: bool = True
    profile: str = "pypi"
    bare_commands: bool = False


class ScoreResponse(BaseModel):
    p_total: int
    p_hall: int
    p_hall_unique: int
    phr: float
    rhr: float


class FuzzRequest(BaseModel):
    episodes: int = 1000
    seed: int = 0
    list_sizes: list[int] = Field(default_factory=lambda: [10, 1_000, 100_000])
    vocab_sizes: list[int] = Field(default_factory=lambda: [64, 1_000])
    max_tokens: int = 48
    profile: str = "pypi"


class FuzzResponse(BaseModel):
    episodes: int
    completed_names: int
    invalid_names: int
    abandoned_names: int
    invalid_examples: list[str]
    zone_exits: int


class BenchRequest(BaseModel):
    sizes: list[int] = Field(default_factory=lambda: [7_000, 70_000, 700_000])
    cache_dir: str | None = None
    vocab_size: int = 1000
    seed: int = 0


class BenchSizeReport(BaseModel):
    list_size: int
    state_count: int
    build_seconds: float
    load_seconds: float
    session_setup_seconds: float
    checkpoint_bytes: int
    mask_latency: dict[str, float]


class GuardOpenRequest(BaseModel):
    vocab_path: str
    checkpoint_path: str | None = None
    list_path: str | None = None
    normalize: bool = True
    profile: str = "pypi"
    policy: str = "force_newline"
    bare_commands: bool = False


class GuardOpenResponse(BaseModel):
    handle_id: str
    vocab_size: int
    state_count: int


class RegionEvent(BaseModel):
    type: str
    name: str | None = None
    accepted: bool | None = None
    start: int | None = None
    info: str | None = None


class ProcessLogitsRequest(BaseModel):
    delta: list[int] = Field(default_factory=list)
    logits: list[float]


class ProcessLogitsResponse(BaseModel):
    logits: list[float]
    permitted_count: int
    in_zone: bool
    events: list[RegionEvent] = Field(default_factory=list)
    done: bool = False


class ObserveRequest(BaseModel):
    token_id: int


class ObserveResponse(BaseModel):
    events: list[RegionEvent]
    done: bool


class MaskResponse(BaseModel):
    permitted: list[int]
    in_zone: bool
    generation_step: int


class FixtureRequest(BaseModel):
    out_dir: str
    list_size: int = 200
    vocab_size: int = 128
    seed: int = 0


class FixtureResponse(BaseModel):
    list_path: str
    checkpoint_path: str
    vocab_path: str
    list_digest: str


class ReplayRequest(BaseModel):
    checkpoint_path: str
    vocab_path: str
    list_path: str | None = None
    normalize: bool = True
    profile: str = "pypi"
    seed: int = 0
    script_index: int = 0
    max_tokens: int = 48


class ReplayStep(BaseModel):
    token_id: int
    logits: list[float]
    masked_logits: list[float]


class ReplayResponse(BaseModel):
    steps: list[ReplayStep]
    text: str
    events: list[RegionEvent]
