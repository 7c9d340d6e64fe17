"""Seeded stand-in for a real LLM decoder, plus fuzz and scaling harnesses.

The decoder draws fresh random logits every step; the zero-hallucination
property must hold for *any* logits, so adversarial noise is a stronger test
than linguistic realism. Identical seeds yield byte-identical streams.
"""

from __future__ import annotations

import random
import string
import time
from dataclasses import dataclass, field

import numpy as np

from .cache import load_checkpoint, save_checkpoint
from .dfa import Dfa, build_dfa
from .guard import GuardSession, apply_mask
from .packages import PackageList, build_list
from .parser import ExitPackageName
from .profiles import get_profile
from .token_trie import Vocabulary, build_token_trie

#: Alphabet for synthetic package names (normalized registry form).
SYNTH_ALPHABET = string.ascii_lowercase + string.digits + "-"

_CORE_TOKENS = [
    # single printable ASCII characters guarantee a dead-end-free root:
    # every alphabet character can always be spelled one char at a time
    *[chr(c) for c in range(32, 127)],
    "\n",
    "\t",
    # terminators and spacing
    "==",
    ">=",
    "<=",
    "  ",
    " \n",
    "\n\n",
    # markdown / command structure
    "```",
    "~~~",
    "```bash",
    "```python",
    "pip",
    "install",
    " install",
    "pip install",
    "python",
    "-U",
    "--upgrade",
    "--user",
]


# smallest vocabulary that still covers the whole name alphabet (so the DFA
# root can never dead-end) plus enough structure to write install commands
_MINIMAL_TOKENS = [
    *string.ascii_lowercase,
    *string.digits,
    "-",
    "_",
    ".",
    " ",
    "\n",
    "\t",
    "`",
    "=",
    "<",
    ">",
    "[",
    "]",
    "!",
    "~",
    ":",
    ",",
]


def toy_vocabulary(size: int = 1000, seed: int = 0) -> Vocabulary:
    """Deterministic toy vocabulary: core tokens plus random subwords.

    Token 0 is the EOS control token (empty surface). Small sizes fall back
    to a minimal single-character core that still spans the name alphabet.
    """
    core = _CORE_TOKENS if size >= 1 + len(_CORE_TOKENS) else _MINIMAL_TOKENS
    if size < 1 + len(_MINIMAL_TOKENS):
        raise ValueError(f"toy vocabulary needs at least {1 + len(_MINIMAL_TOKENS)} tokens")
    tokens = [""]  # EOS
    seen = {""}
    for t in core:
        if t not in seen:
            tokens.append(t)
            seen.add(t)
    rng = random.Random(seed)
    while len(tokens) < size:
        length = rng.randint(2, 6)
        sub = "".join(rng.choice(SYNTH_ALPHABET) for _ in range(length))
        if sub not in seen:
            tokens.append(sub)
            seen.add(sub)
    return Vocabulary(tokens=tuple(tokens), control_ids=frozenset({0}), eos_id=0)


def synthetic_names(count: int, seed: int = 0, min_len: int = 3, max_len: int = 30):
    """Deterministic pseudo-random package names over the registry alphabet."""
    rng = random.Random(seed)
    names: set[str] = set()
    letters = string.ascii_lowercase
    while len(names) < count:
        length = rng.randint(min_len, max_len)
        name = rng.choice(letters) + "".join(
            rng.choice(SYNTH_ALPHABET) for _ in range(length - 1)
        )
        names.add(name)
    return sorted(names)


def synthetic_list(count: int, seed: int = 0) -> PackageList:
    return build_list(
        synthetic_names(count, seed), source_id=f"synthetic-{count}-{seed}"
    )


@dataclass
class SimDecoder:
    """Seeded pseudo-random decoder driving one guard session."""

    seed: int
    vocab: Vocabulary
    temperature: float = 1.0
    script: str = ""  # forced prefix text steering into an install context
    max_tokens: int = 48
    # static logit bonus for name pieces and separators: purely random logits
    # rarely finish a name before max_tokens, which would leave the
    # termination rule under-exercised
    bias: bool = True


@dataclass
class EpisodeResult:
    text: str
    events: list
    token_ids: list[int]
    step_times: list[float]
    steps: list[dict] = field(default_factory=list)  # populated when recording


def _char_encoder(vocab: Vocabulary) -> dict[str, int]:
    table: dict[str, int] = {}
    for tid, surface in enumerate(vocab.tokens):
        if len(surface) == 1 and surface not in table:
            table[surface] = tid
    return table


def _sample(probs: np.ndarray, rng: np.random.Generator) -> int:
    u = rng.random()
    return int(np.searchsorted(np.cumsum(probs), u))


def softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - values.max()
    e = np.exp(shifted.astype(np.float64))
    return e / e.sum()


def run_episode(
    decoder: SimDecoder, session: GuardSession, record: bool = False
) -> EpisodeResult:
    """Decode one stream: forced script prefix, then free masked sampling."""
    rng = np.random.default_rng(decoder.seed)
    encoder = _char_encoder(decoder.vocab)
    try:
        forced = [encoder[ch] for ch in decoder.script]
    except KeyError as exc:
        raise ValueError(f"script character {exc} missing from vocabulary") from exc
    forced.reverse()

    bias = np.zeros(decoder.vocab.size, dtype=np.float32)
    if decoder.bias:
        name_chars = frozenset(SYNTH_ALPHABET)
        for tid, surface in enumerate(decoder.vocab.tokens):
            if surface and all(ch in name_chars for ch in surface):
                bias[tid] = 3.0
            elif surface in (" ", "\n"):
                bias[tid] = 5.0

    text = []
    events: list = []
    token_ids: list[int] = []
    step_times: list[float] = []
    steps: list[dict] = []

    for _ in range(decoder.max_tokens):
        t0 = time.perf_counter()
        mask = session.next_mask()
        step_times.append(time.perf_counter() - t0)

        logits = rng.uniform(-5.0, 5.0, size=decoder.vocab.size).astype(np.float32) + bias
        masked = apply_mask(logits, mask)
        if forced:
            token_id = forced.pop()
        elif decoder.temperature <= 0:
            token_id = int(np.argmax(masked))
        else:
            token_id = _sample(softmax(masked / decoder.temperature), rng)

        if record:
            steps.append(
                {
                    "token_id": token_id,
                    "logits": logits.tolist(),
                    "masked_logits": masked.tolist(),
                    "mask_bits": mask.bits.tolist(),
                }
            )
        result = session.observe_token(token_id)
        token_ids.append(token_id)
        events.extend(result.events)
        text.append(result.surface)
        if result.done:
            break
    return EpisodeResult(
        text="".join(text),
        events=events,
        token_ids=token_ids,
        step_times=step_times,
        steps=steps,
    )


# lowercase-only so even the minimal vocabulary can spell them
DEFAULT_SCRIPTS = (
    "sure, run this:\n```bash\npip install ",
    "```\npip install -u ",
    "use the package manager:\n```sh\npip3 install ",
    "```bash\npython -m pip install ",
)


def fuzz_run(
    episodes: int,
    seed: int = 0,
    list_sizes: tuple[int, ...] = (10, 1_000, 100_000),
    vocab_sizes: tuple[int, ...] = (64, 1_000),
    profile_name: str = "pypi",
    max_tokens: int = 48,
) -> dict:
    """Run seeded guarded episodes and check every completed name.

    Returns counters; ``invalid_names`` must be zero for the guarantee to hold.
    """
    profile = get_profile(profile_name)
    combos = []
    for ls in list_sizes:
        plist = synthetic_list(ls, seed=ls)
        dfa = build_dfa(plist)
        for vs in vocab_sizes:
            vocab = toy_vocabulary(vs, seed=vs)
            trie = build_token_trie(vocab)
            combos.append((plist, dfa, vocab, trie))

    total_names = 0
    invalid = 0
    abandoned = 0
    invalid_examples: list[str] = []
    zone_entries = 0
    for i in range(episodes):
        plist, dfa, vocab, trie = combos[i % len(combos)]
        session = GuardSession(dfa, trie, vocab, profile)
        decoder = SimDecoder(
            seed=seed * 1_000_003 + i,
            vocab=vocab,
            script=DEFAULT_SCRIPTS[i % len(DEFAULT_SCRIPTS)],
            max_tokens=max_tokens,
        )
        result = run_episode(decoder, session)
        for event in result.events:
            if isinstance(event, ExitPackageName):
                total_names += 1
                if event.accepted:
                    if not plist.contains(event.name):
                        invalid += 1
                        invalid_examples.append(event.name)
                else:
                    abandoned += 1
                    invalid += 1
                    invalid_examples.append(event.name)
        zone_entries += sum(1 for e in result.events if isinstance(e, ExitPackageName))
    return {
        "episodes": episodes,
        "completed_names": total_names,
        "invalid_names": invalid,
        "abandoned_names": abandoned,
        "invalid_examples": invalid_examples[:20],
        "zone_exits": zone_entries,
    }


def _percentiles(times: list[float]) -> dict:
    if not times:
        return {"p50_us": 0.0, "p95_us": 0.0, "max_us": 0.0}
    arr = np.array(times) * 1e6
    return {
        "p50_us": float(np.percentile(arr, 50)),
        "p95_us": float(np.percentile(arr, 95)),
        "max_us": float(arr.max()),
    }


def bench_scaling(
    sizes: tuple[int, ...],
    cache_dir,
    vocab_size: int = 1000,
    seed: int = 0,
    episodes_per_size: int = 5,
) -> list[dict]:
    """Construction vs loading vs per-step mask cost across list sizes."""
    from pathlib import Path

    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    vocab = toy_vocabulary(vocab_size, seed=seed)
    trie = build_token_trie(vocab)
    profile = get_profile("pypi")

    reports = []
    for size in sizes:
        plist = synthetic_list(size, seed=size)
        t0 = time.perf_counter()
        dfa = build_dfa(plist)
        build_time = time.perf_counter() - t0

        ckpt = cache_dir / f"bench-{size}.dfackpt"
        save_checkpoint(dfa, ckpt)
        t0 = time.perf_counter()
        loaded = load_checkpoint(ckpt)
        load_time = time.perf_counter() - t0

        t0 = time.perf_counter()
        session = GuardSession(loaded, trie, vocab, profile)
        setup_time = time.perf_counter() - t0

        step_times: list[float] = []
        for i in range(episodes_per_size):
            session = GuardSession(loaded, trie, vocab, profile)
            decoder = SimDecoder(
                seed=seed + i,
                vocab=vocab,
                script=DEFAULT_SCRIPTS[i % len(DEFAULT_SCRIPTS)],
                max_tokens=48,
            )
            step_times.extend(run_episode(decoder, session).step_times)

        reports.append(
            {
                "list_size": size,
                "state_count": dfa.state_count,
                "build_seconds": build_time,
                "load_seconds": load_time,
                "session_setup_seconds": setup_time,
                "checkpoint_bytes": ckpt.stat().st_size,
                "mask_latency": _percentiles(step_times),
            }
        )
    return reports
