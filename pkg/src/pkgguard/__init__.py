"""pkgguard: decoding-time guard against LLM package hallucinations.

Compiles an authoritative package allowlist into a character DFA, watches the
generated stream for install commands, and masks every next token that could
only lead to a name outside the allowlist.
"""

from .cache import DfaCache, ensure_cache, load_checkpoint, save_checkpoint
from .dfa import Dfa, DfaCursor, StepResult, build_dfa, is_accepting, step, step_string
from .guard import (
    DeadEndPolicy,
    GuardSession,
    LogitsMask,
    apply_mask,
    create_session,
)
from .metrics import MetricsReport, Transcript, extract_from_text, score
from .packages import PackageList, build_list, load_list, normalize_name
from .parser import ParserState
from .profiles import BUILTIN_PROFILES, EcosystemProfile, get_profile
from .token_trie import (
    FeasibleMemo,
    TokenTrie,
    Vocabulary,
    build_token_trie,
    feasible_tokens,
    feasible_with_memo,
    load_vocabulary,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROFILES",
    "DeadEndPolicy",
    "Dfa",
    "DfaCache",
    "DfaCursor",
    "EcosystemProfile",
    "FeasibleMemo",
    "GuardSession",
    "LogitsMask",
    "MetricsReport",
    "PackageList",
    "ParserState",
    "StepResult",
    "TokenTrie",
    "Transcript",
    "Vocabulary",
    "apply_mask",
    "build_dfa",
    "build_list",
    "build_token_trie",
    "create_session",
    "ensure_cache",
    "extract_from_text",
    "feasible_tokens",
    "feasible_with_memo",
    "get_profile",
    "is_accepting",
    "load_checkpoint",
    "load_list",
    "load_vocabulary",
    "normalize_name",
    "save_checkpoint",
    "score",
    "step",
    "step_string",
]
