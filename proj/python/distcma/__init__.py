"""Minimal-pair NLI generation and causal mediation analysis of predicative
distributivity.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it and adds the adapter for external HuggingFace checkpoints
(:mod:`distcma.external`, imported lazily so torch stays optional).
"""

from pathlib import Path

from distcma._core import *  # noqa: F401,F403
from distcma._core import __version__  # noqa: F401


def seed_lexicon_path() -> Path:
    """Path of the bundled seed lexicon.

    Prefers the copy staged next to the package; falls back to a repository
    checkout layout when running from source.
    """
    packaged = Path(__file__).resolve().parent / "data" / "seed_lexicon.json"
    if packaged.exists():
        return packaged
    repo = Path(__file__).resolve().parents[2] / "data" / "seed_lexicon.json"
    if repo.exists():
        return repo
    raise FileNotFoundError(
        "seed_lexicon.json not found; pass an explicit lexicon path"
    )
