"""FastAPI service wrapping the guard.

The service owns the loaded automata; clients (the CLI, the TypeScript
bindings) talk to it over HTTP. Guard handles are per-decoding-stream and
must not be shared between concurrent callers.
"""

from __future__ import annotations

import time
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import metrics as metrics_mod
from ..cache import CheckpointError, StaleCacheError, load_checkpoint, save_checkpoint
from ..dfa import build_dfa
from ..guard import (
    DeadEndPolicy,
    GuardContractError,
    GuardError,
    GuardSession,
    LogitsMask,
    apply_mask,
)
from ..packages import PackageListError, load_list
from ..parser import (
    CommandAbandoned,
    EnterCode,
    EnterPackageName,
    ExitCode,
    ExitPackageName,
)
from ..profiles import ProfileError, get_profile
from ..sim import (
    DEFAULT_SCRIPTS,
    SimDecoder,
    bench_scaling,
    fuzz_run,
    run_episode,
    synthetic_list,
    toy_vocabulary,
)
from ..token_trie import VocabularyError, build_token_trie, load_vocabulary
from . import schemas as s

app = FastAPI(
    title="pkgguard",
    description="Decoding-time package-hallucination guard",
    version="0.1.0",
)

_handles: dict[str, GuardSession] = {}
_closed: set[str] = set()


def _fail(status: int, exc: Exception):
    raise HTTPException(status_code=status, detail=str(exc))


def _event_to_model(event) -> s.RegionEvent:
    if isinstance(event, ExitPackageName):
        return s.RegionEvent(
            type="exit_package_name",
            name=event.name,
            accepted=event.accepted,
            start=event.start,
        )
    if isinstance(event, EnterPackageName):
        return s.RegionEvent(type="enter_package_name")
    if isinstance(event, EnterCode):
        return s.RegionEvent(type="enter_code", info=event.info)
    if isinstance(event, ExitCode):
        return s.RegionEvent(type="exit_code")
    if isinstance(event, CommandAbandoned):
        return s.RegionEvent(type="command_abandoned")
    return s.RegionEvent(type=type(event).__name__)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "handles": len(_handles)}


@app.post("/lists/build", response_model=s.ListBuildResponse)
def lists_build(req: s.ListBuildRequest) -> s.ListBuildResponse:
    try:
        plist = load_list(req.input_path, normalize=req.normalize, strict=req.strict)
    except (PackageListError, OSError) as exc:
        _fail(400, exc)
    if req.output_path:
        plist.save(req.output_path)
    return s.ListBuildResponse(
        count=plist.count,
        digest=plist.snapshot_digest.hex(),
        output_path=req.output_path,
        diagnostics=list(plist.diagnostics),
    )


@app.post("/lists/check", response_model=s.ListCheckResponse)
def lists_check(req: s.ListCheckRequest) -> s.ListCheckResponse:
    try:
        plist = load_list(req.list_path, normalize=req.normalize)
    except (PackageListError, OSError) as exc:
        _fail(400, exc)
    return s.ListCheckResponse(
        results={name: plist.contains(name) for name in req.names}
    )


@app.post("/vocab/import", response_model=s.VocabImportResponse)
def vocab_import(req: s.VocabImportRequest) -> s.VocabImportResponse:
    try:
        vocab = load_vocabulary(req.path)
    except (VocabularyError, OSError, ValueError) as exc:
        _fail(400, exc)
    return s.VocabImportResponse(
        size=vocab.size,
        control_ids=sorted(vocab.control_ids),
        eos_id=vocab.eos_id,
        digest=vocab.digest().hex(),
    )


@app.post("/cache/build", response_model=s.CacheBuildResponse)
def cache_build(req: s.CacheBuildRequest) -> s.CacheBuildResponse:
    try:
        plist = load_list(req.list_path, normalize=req.normalize)
        t0 = time.perf_counter()
        dfa = build_dfa(plist)
        build_seconds = time.perf_counter() - t0
        written = save_checkpoint(dfa, req.output_path)
    except (PackageListError, CheckpointError, OSError) as exc:
        _fail(400, exc)
    return s.CacheBuildResponse(
        bytes_written=written,
        state_count=dfa.state_count,
        digest=plist.snapshot_digest.hex(),
        build_seconds=build_seconds,
    )


@app.post("/cache/verify", response_model=s.CacheVerifyResponse)
def cache_verify(req: s.CacheVerifyRequest) -> s.CacheVerifyResponse:
    try:
        plist = load_list(req.list_path, normalize=req.normalize)
    except (PackageListError, OSError) as exc:
        _fail(400, exc)
    try:
        dfa = load_checkpoint(
            req.checkpoint_path, expected_digest=plist.snapshot_digest
        )
    except (CheckpointError, OSError) as exc:
        return s.CacheVerifyResponse(ok=False, state_count=0, name_count=0, detail=str(exc))
    return s.CacheVerifyResponse(
        ok=True, state_count=dfa.state_count, name_count=dfa.name_count
    )


@app.post("/score", response_model=s.ScoreResponse)
def score_transcript(req: s.ScoreRequest) -> s.ScoreResponse:
    try:
        profile = get_profile(req.profile)
        oracle = load_list(req.list_path, normalize=req.normalize)
        transcript = metrics_mod.load_transcript(
            req.transcript_path, profile, bare_commands=req.bare_commands
        )
    except (ProfileError, PackageListError, OSError, ValueError) as exc:
        _fail(400, exc)
    report = metrics_mod.score(transcript, oracle)
    return s.ScoreResponse(**report.as_dict())


@app.post("/fuzz", response_model=s.FuzzResponse)
def fuzz(req: s.FuzzRequest) -> s.FuzzResponse:
    report = fuzz_run(
        episodes=req.episodes,
        seed=req.seed,
        list_sizes=tuple(req.list_sizes),
        vocab_sizes=tuple(req.vocab_sizes),
        profile_name=req.profile,
        max_tokens=req.max_tokens,
    )
    return s.FuzzResponse(**report)


@app.post("/bench", response_model=list[s.BenchSizeReport])
def bench(req: s.BenchRequest) -> list[s.BenchSizeReport]:
    import tempfile

    cache_dir = req.cache_dir or tempfile.mkdtemp(prefix="pkgguard-bench-")
    reports = bench_scaling(
        tuple(req.sizes), cache_dir, vocab_size=req.vocab_size, seed=req.seed
    )
    return [s.BenchSizeReport(**r) for r in reports]


def _get_session(handle_id: str) -> GuardSession:
    session = _handles.get(handle_id)
    if session is None:
        if handle_id in _closed:
            raise HTTPException(status_code=409, detail="handle already closed")
        raise HTTPException(status_code=404, detail="unknown guard handle")
    return session


@app.post("/guard/open", response_model=s.GuardOpenResponse)
def guard_open(req: s.GuardOpenRequest) -> s.GuardOpenResponse:
    try:
        vocab = load_vocabulary(req.vocab_path)
        trie = build_token_trie(vocab)
        profile = get_profile(req.profile)
        policy = DeadEndPolicy(req.policy)
        expected = None
        if req.list_path:
            expected = load_list(req.list_path, normalize=req.normalize).snapshot_digest
        if req.checkpoint_path:
            dfa = load_checkpoint(req.checkpoint_path, expected_digest=expected)
        elif req.list_path:
            dfa = build_dfa(load_list(req.list_path, normalize=req.normalize))
        else:
            raise GuardError("need checkpoint_path or list_path")
        session = GuardSession(
            dfa, trie, vocab, profile, policy=policy, bare_commands=req.bare_commands
        )
    except StaleCacheError as exc:
        _fail(409, exc)
    except (
        VocabularyError,
        ProfileError,
        PackageListError,
        CheckpointError,
        GuardError,
        OSError,
        ValueError,
    ) as exc:
        _fail(400, exc)
    handle_id = uuid.uuid4().hex
    _handles[handle_id] = session
    return s.GuardOpenResponse(
        handle_id=handle_id, vocab_size=vocab.size, state_count=dfa.state_count
    )


@app.post("/guard/{handle_id}/process", response_model=s.ProcessLogitsResponse)
def guard_process(handle_id: str, req: s.ProcessLogitsRequest) -> s.ProcessLogitsResponse:
    session = _get_session(handle_id)
    events = []
    done = False
    try:
        for token_id in req.delta:
            result = session.observe_token(token_id)
            events.extend(result.events)
            done = done or result.done
        if done:
            return s.ProcessLogitsResponse(
                logits=req.logits,
                permitted_count=len(req.logits),
                in_zone=False,
                events=[_event_to_model(e) for e in events],
                done=True,
            )
        mask = session.next_mask()
        logits = np.asarray(req.logits, dtype=np.float32)
        masked = apply_mask(logits, mask)
    except GuardContractError as exc:
        _fail(409, exc)
    except GuardError as exc:
        _fail(400, exc)
    return s.ProcessLogitsResponse(
        logits=[float(v) for v in masked],
        permitted_count=mask.permitted_count,
        in_zone=session.parser.in_intervention_zone(),
        events=[_event_to_model(e) for e in events],
        done=done,
    )


@app.post("/guard/{handle_id}/mask", response_model=s.MaskResponse)
def guard_mask(handle_id: str) -> s.MaskResponse:
    session = _get_session(handle_id)
    try:
        mask = session.next_mask()
    except GuardError as exc:
        _fail(409, exc)
    return s.MaskResponse(
        permitted=[int(i) for i in np.flatnonzero(mask.bits)],
        in_zone=session.parser.in_intervention_zone(),
        generation_step=mask.generation_step,
    )


@app.post("/guard/{handle_id}/observe", response_model=s.ObserveResponse)
def guard_observe(handle_id: str, req: s.ObserveRequest) -> s.ObserveResponse:
    session = _get_session(handle_id)
    try:
        result = session.observe_token(req.token_id)
    except GuardContractError as exc:
        _fail(409, exc)
    except GuardError as exc:
        _fail(400, exc)
    return s.ObserveResponse(
        events=[_event_to_model(e) for e in result.events], done=result.done
    )


@app.delete("/guard/{handle_id}")
def guard_close(handle_id: str) -> dict:
    if _handles.pop(handle_id, None) is None:
        if handle_id in _closed:
            raise HTTPException(status_code=409, detail="handle already closed")
        raise HTTPException(status_code=404, detail="unknown guard handle")
    _closed.add(handle_id)
    return {"closed": handle_id}


@app.post("/fixtures/synthetic", response_model=s.FixtureResponse)
def fixtures_synthetic(req: s.FixtureRequest) -> s.FixtureResponse:
    """Write a deterministic list/checkpoint/vocab triple for client tests."""
    out = Path(req.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plist = synthetic_list(req.list_size, seed=req.seed)
    list_path = out / f"list-{req.list_size}-{req.seed}.txt"
    plist.save(list_path)
    dfa = build_dfa(plist)
    ckpt_path = out / f"dfa-{req.list_size}-{req.seed}.dfackpt"
    save_checkpoint(dfa, ckpt_path)
    vocab = toy_vocabulary(req.vocab_size, seed=req.seed)
    vocab_path = out / f"vocab-{req.vocab_size}-{req.seed}.jsonl"
    vocab.save(vocab_path)
    return s.FixtureResponse(
        list_path=str(list_path),
        checkpoint_path=str(ckpt_path),
        vocab_path=str(vocab_path),
        list_digest=plist.snapshot_digest.hex(),
    )


@app.post("/episodes/replay", response_model=s.ReplayResponse)
def episodes_replay(req: s.ReplayRequest) -> s.ReplayResponse:
    """Run one recorded episode through the primary API (reference masks)."""
    try:
        vocab = load_vocabulary(req.vocab_path)
        trie = build_token_trie(vocab)
        profile = get_profile(req.profile)
        expected = None
        if req.list_path:
            expected = load_list(req.list_path, normalize=req.normalize).snapshot_digest
        dfa = load_checkpoint(req.checkpoint_path, expected_digest=expected)
    except (VocabularyError, ProfileError, CheckpointError, OSError, ValueError) as exc:
        _fail(400, exc)
    session = GuardSession(dfa, trie, vocab, profile)
    decoder = SimDecoder(
        seed=req.seed,
        vocab=vocab,
        script=DEFAULT_SCRIPTS[req.script_index % len(DEFAULT_SCRIPTS)],
        max_tokens=req.max_tokens,
    )
    result = run_episode(decoder, session, record=True)
    return s.ReplayResponse(
        steps=[
            s.ReplayStep(
                token_id=step["token_id"],
                logits=step["logits"],
                masked_logits=step["masked_logits"],
            )
            for step in result.steps
        ],
        text=result.text,
        events=[_event_to_model(e) for e in result.events],
    )
