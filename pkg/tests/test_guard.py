import numpy as np
import pytest

from pkgguard.dfa import build_dfa
from pkgguard.guard import (
    DeadEndError,
    DeadEndPolicy,
    GuardContractError,
    GuardError,
    GuardSession,
    LogitsMask,
    apply_mask,
)
from pkgguard.packages import build_list
from pkgguard.parser import ExitPackageName, LineMode
from pkgguard.sim import softmax, toy_vocabulary
from pkgguard.token_trie import build_token_trie

from conftest import make_vocab


def make_session(names, surfaces, profile, **kwargs):
    dfa = build_dfa(build_list(names))
    vocab = make_vocab(surfaces)
    trie = build_token_trie(vocab)
    return GuardSession(dfa, trie, vocab, profile, **kwargs), vocab


def drive(session, vocab, text):
    """Feed text via observe_token one character at a time."""
    table = {s: i for i, s in enumerate(vocab.tokens)}
    events = []
    for ch in text:
        mask = session.next_mask()
        tid = table[ch]
        assert mask.bits[tid], f"guard masked {ch!r} at step {mask.generation_step}"
        events.extend(session.observe_token(tid).events)
    return events


CHAR_SURFACES = [
    *"abcdefghijklmnopqrstuvwxyz0123456789-_.",
    " ",
    "\n",
    "`",
    "=",
]


def test_mask_allows_only_continuations(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES + ["y", "z"], pypi_profile)
    drive(session, vocab, "```\npip install nump")
    mask = session.next_mask()
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    assert mask.bits[tid["y"]]
    assert not mask.bits[tid["z"]]
    assert not mask.bits[tid[" "]]  # "nump" is not a complete name
    assert not mask.bits[tid["\n"]]


def test_mask_permits_terminators_at_accepting_state(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install numpy")
    mask = session.next_mask()
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    assert mask.bits[tid[" "]]
    assert mask.bits[tid["\n"]]
    assert mask.bits[tid["="]]  # version suffix opener
    assert mask.bits[vocab.eos_id]
    # "numpy" is a prefix of nothing else in the list: no name char continues
    assert not mask.bits[tid["z"]]


def test_mask_blocks_prefix_of_longer_name(pypi_profile):
    # "num" is not in the list but is a live prefix: terminators stay masked
    session, vocab = make_session(["numpy", "numba"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install num")
    mask = session.next_mask()
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    assert mask.bits[tid["p"]] and mask.bits[tid["b"]]
    assert not mask.bits[tid[" "]]
    assert not mask.bits[tid["q"]]


def test_identity_outside_zone(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    events = drive(session, vocab, "prose about packages\n`ls`\n")
    assert events == []
    mask = session.next_mask()
    assert mask.bits.all()
    logits = np.arange(len(vocab.tokens), dtype=np.float32)
    out = apply_mask(logits, mask)
    assert np.array_equal(out, logits)
    assert out is not logits  # apply_mask never aliases its input


def test_multi_char_subword_tokens(pypi_profile):
    session, vocab = make_session(
        ["numpy"], CHAR_SURFACES + ["num", "py", "numpy", "nx"], pypi_profile
    )
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    drive(session, vocab, "```\npip install ")
    mask = session.next_mask()
    assert mask.bits[tid["num"]]
    assert mask.bits[tid["numpy"]]
    assert not mask.bits[tid["nx"]]
    assert not mask.bits[tid["py"]]  # "py" alone leads nowhere from the root
    session.observe_token(tid["num"])
    mask = session.next_mask()
    assert mask.bits[tid["py"]]
    assert not mask.bits[tid["num"]]


def test_apply_mask_examples():
    logits = np.array([2.0, 1.0, 0.5], dtype=np.float32)
    ident = LogitsMask(bits=np.array([True, True, True]), generation_step=1)
    assert np.array_equal(apply_mask(logits, ident), logits)

    partial = LogitsMask(bits=np.array([False, True, True]), generation_step=2)
    out = apply_mask(logits, partial)
    sentinel = np.finfo(np.float32).min
    assert out[0] == sentinel
    assert out[1] == 1.0 and out[2] == 0.5

    one_hot = LogitsMask(bits=np.array([False, True, False]), generation_step=3)
    probs = softmax(apply_mask(logits, one_hot))
    assert probs[1] == pytest.approx(1.0)
    assert probs[0] == 0.0 and probs[2] == 0.0


def test_apply_mask_shape_mismatch():
    mask = LogitsMask(bits=np.ones(4, dtype=bool), generation_step=1)
    with pytest.raises(GuardError):
        apply_mask(np.zeros(5, dtype=np.float32), mask)


def test_masked_tokens_get_zero_softmax_probability(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install nu")
    mask = session.next_mask()
    rng = np.random.default_rng(0)
    logits = rng.uniform(-10, 10, size=len(vocab.tokens)).astype(np.float32)
    probs = softmax(apply_mask(logits, mask))
    assert (probs[~mask.bits] == 0.0).all()
    assert probs.sum() == pytest.approx(1.0)


def test_argmax_preserved_when_argmax_permitted(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install nu")
    mask = session.next_mask()
    permitted = np.flatnonzero(mask.bits)
    rng = np.random.default_rng(1)
    for _ in range(50):
        logits = rng.uniform(-5, 5, size=len(vocab.tokens)).astype(np.float32)
        winner = int(rng.choice(permitted))
        logits[winner] = 20.0
        assert int(np.argmax(apply_mask(logits, mask))) == winner


def test_contract_observe_before_mask(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    with pytest.raises(GuardContractError):
        session.observe_token(1)


def test_contract_masked_token_rejected(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install n")
    mask = session.next_mask()
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    assert not mask.bits[tid["z"]]
    with pytest.raises(GuardContractError):
        session.observe_token(tid["z"])


def test_contract_double_observe(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    session.next_mask()
    session.observe_token(1)
    with pytest.raises(GuardContractError):
        session.observe_token(1)


def test_token_id_out_of_range(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    session.next_mask()
    with pytest.raises(GuardError):
        session.observe_token(10_000)


def test_eos_finishes_session(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    drive(session, vocab, "```\npip install numpy")
    session.next_mask()
    result = session.observe_token(vocab.eos_id)
    assert result.done
    exits = [e for e in result.events if isinstance(e, ExitPackageName)]
    assert exits and exits[0].accepted
    with pytest.raises(GuardContractError):
        session.compute_mask()


def test_dead_end_force_newline(pypi_profile):
    # vocabulary has no token that can continue or terminate cleanly except \n
    session, vocab = make_session(
        ["numpy"], ["n", "u", "m", "p", "y", "q", " ", "\n", "`", "i", "s", "t", "a", "l"],
        pypi_profile,
    )
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    drive(session, vocab, "```\npip install ")
    # enter a name region whose only continuation we then exhaust is fine;
    # instead force the dead end directly
    mask = LogitsMask(bits=np.zeros(len(vocab.tokens), dtype=bool), generation_step=9)
    session._last_mask = mask
    recovered = session.handle_dead_end(mask)
    assert recovered.bits[tid["\n"]]
    assert recovered.bits[vocab.eos_id]
    assert recovered.permitted_count == 2
    assert session.dead_ends == 1


def test_dead_end_abort_policy(pypi_profile):
    session, vocab = make_session(
        ["numpy"], CHAR_SURFACES, pypi_profile, policy=DeadEndPolicy.ABORT
    )
    mask = LogitsMask(bits=np.zeros(len(vocab.tokens), dtype=bool), generation_step=1)
    with pytest.raises(DeadEndError):
        session.handle_dead_end(mask)


def test_handle_dead_end_requires_empty_mask(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    mask = LogitsMask(bits=np.ones(len(vocab.tokens), dtype=bool), generation_step=1)
    with pytest.raises(GuardContractError):
        session.handle_dead_end(mask)


def test_digest_mismatch_rejected(pypi_profile):
    dfa = build_dfa(build_list(["numpy"]))
    vocab_a = make_vocab(["a", "b"])
    vocab_b = make_vocab(["a", "c"])
    trie = build_token_trie(vocab_a)
    with pytest.raises(GuardError):
        GuardSession(dfa, trie, vocab_b, pypi_profile)


def test_mask_monotone_under_list_growth(pypi_profile):
    """Growing the allowlist can only grow the permitted set mid-name."""
    vocab = make_vocab(CHAR_SURFACES + ["num", "py", "ba"])
    trie = build_token_trie(vocab)
    small = GuardSession(build_dfa(build_list(["numpy"])), trie, vocab, pypi_profile)
    big = GuardSession(
        build_dfa(build_list(["numpy", "numba", "num"])), trie, vocab, pypi_profile
    )
    for session in (small, big):
        drive(session, vocab, "```\npip install num")
    m_small = small.next_mask().bits
    m_big = big.next_mask().bits
    assert not (m_small & ~m_big).any()
    assert (m_big & ~m_small).any()  # "ba" and terminators opened up


def test_flag_region_blocks_name_leakage(pypi_profile):
    # a token like "U zz" inside a flag would start an unchecked name "zz"
    session, vocab = make_session(
        ["numpy"], CHAR_SURFACES + ["U zz", "Uv"], pypi_profile
    )
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    drive(session, vocab, "```\npip install -")
    assert session.parser.mode is LineMode.FLAG
    mask = session.next_mask()
    assert mask.bits[tid["Uv"]]  # whitespace-free: stays inside the flag
    assert not mask.bits[tid["U zz"]]


def test_await_blocks_mixed_tokens_with_name_chars(pypi_profile):
    session, vocab = make_session(
        ["numpy"], CHAR_SURFACES + [" numpy", " zz"], pypi_profile
    )
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    drive(session, vocab, "```\npip install ")
    mask = session.next_mask()
    assert not mask.bits[tid[" numpy"]]  # mixed + name chars: excluded outright
    assert not mask.bits[tid[" zz"]]


def test_await_with_no_names_blocks_plain_newline_abandonment(pypi_profile):
    session, vocab = make_session(["numpy"], CHAR_SURFACES, pypi_profile)
    tid = {s: i for i, s in enumerate(vocab.tokens)}
    drive(session, vocab, "```\npip install ")
    mask = session.next_mask()
    # newline is always available as an escape hatch; pure spacing churn is not
    assert mask.bits[tid["\n"]]
    assert not mask.bits[tid[" "]]
    assert mask.bits[vocab.eos_id]


def test_guarded_session_emits_only_valid_names(pypi_profile):
    from pkgguard.sim import DEFAULT_SCRIPTS, SimDecoder, run_episode

    vocab = toy_vocabulary(300, seed=7)
    trie = build_token_trie(vocab)
    plist = build_list(["numpy", "scipy", "requests"])
    dfa = build_dfa(plist)
    for ep in range(30):
        session = GuardSession(dfa, trie, vocab, pypi_profile)
        decoder = SimDecoder(
            seed=ep, vocab=vocab, script=DEFAULT_SCRIPTS[ep % len(DEFAULT_SCRIPTS)]
        )
        result = run_episode(decoder, session)
        for event in result.events:
            if isinstance(event, ExitPackageName) and event.accepted:
                assert plist.contains(event.name)
            if isinstance(event, ExitPackageName):
                assert event.accepted, (result.text, event)
