"""Ecosystem profiles: which command lines open a package-name zone.

A profile bundles the literal install-command prefixes, the characters that
terminate a name, and the fence delimiters for one packaging ecosystem.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .packages import NAME_ALPHABET

#: Characters that close a name and open a version/extras suffix
#: (the suffix itself passes through unintervened).
SUFFIX_OPENERS = "=<>![~"

#: Whitespace that separates arguments on an install line.
SEPARATORS = " \t\r"


class ProfileError(Exception):
    pass


@dataclass(frozen=True)
class EcosystemProfile:
    name: str
    install_prefixes: tuple[str, ...]
    name_terminators: frozenset[str] = field(
        default=frozenset(SEPARATORS + "\n" + SUFFIX_OPENERS)
    )
    fence_delimiters: tuple[str, ...] = ("```", "~~~")

    def __post_init__(self):
        if not self.install_prefixes:
            raise ProfileError("profile needs at least one install prefix")
        overlap = self.name_terminators & set(NAME_ALPHABET)
        if overlap:
            raise ProfileError(
                f"terminators overlap the name alphabet: {sorted(overlap)!r}"
            )


BUILTIN_PROFILES: dict[str, EcosystemProfile] = {
    "pypi": EcosystemProfile(
        name="pypi",
        install_prefixes=("pip install", "pip3 install", "python -m pip install"),
    ),
    "conda": EcosystemProfile(
        name="conda",
        install_prefixes=("conda install",),
    ),
    "npm": EcosystemProfile(
        name="npm",
        install_prefixes=("npm install", "npm i"),
    ),
}


def get_profile(name: str) -> EcosystemProfile:
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        raise ProfileError(
            f"unknown profile {name!r}; built-ins: {sorted(BUILTIN_PROFILES)}"
        ) from None


def load_profile(path: str | Path) -> EcosystemProfile:
    """Load a profile from a JSON config file."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return EcosystemProfile(
            name=obj["name"],
            install_prefixes=tuple(obj["install_prefixes"]),
            name_terminators=frozenset(
                obj.get("name_terminators", SEPARATORS + "\n" + SUFFIX_OPENERS)
            ),
            fence_delimiters=tuple(obj.get("fence_delimiters", ("```", "~~~"))),
        )
    except KeyError as exc:
        raise ProfileError(f"{path}: missing field {exc}") from exc
