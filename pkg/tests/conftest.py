import pytest

from pkgguard import build_dfa, build_list, build_token_trie, get_profile
from pkgguard.sim import synthetic_list, toy_vocabulary
from pkgguard.token_trie import Vocabulary


@pytest.fixture(scope="session")
def pypi_profile():
    return get_profile("pypi")


@pytest.fixture
def small_list():
    return build_list(["numpy", "numba", "requests", "scipy", "pillow"])


@pytest.fixture
def small_dfa(small_list):
    return build_dfa(small_list)


@pytest.fixture(scope="session")
def toy_vocab():
    return toy_vocabulary(200, seed=0)


@pytest.fixture(scope="session")
def toy_trie(toy_vocab):
    return build_token_trie(toy_vocab)


def make_vocab(surfaces, eos=True) -> Vocabulary:
    """Hand-rolled vocabulary: token 0 is EOS when requested."""
    tokens = ([""] if eos else []) + list(surfaces)
    return Vocabulary(
        tokens=tuple(tokens),
        control_ids=frozenset({0}) if eos else frozenset(),
        eos_id=0 if eos else None,
    )
