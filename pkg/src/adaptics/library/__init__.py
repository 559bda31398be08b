"""Bundled example and benchmark tactons.

Design examples: Button, Rain, Heartbeat, Loading.  Benchmark corpus:
Baseline (1 keyframe), RainBench (62), RainBench2x (124), RainBenchF
(62 keyframes, ~9x the formula operation count of RainBench).  Files are
generated by ``scripts/make_corpus.py`` and stored in canonical form.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..model import Tacton, parse_tacton

__all__ = ["library_dir", "list_tactons", "library_path", "load_tacton"]


def library_dir() -> Path:
    return Path(str(resources.files(__package__)))


def list_tactons() -> list[str]:
    return sorted(p.stem for p in library_dir().glob("*.adaptics"))


def library_path(name: str) -> Path:
    """Resolve a tacton by name, case-insensitively, with or without suffix."""
    stem = name[: -len(".adaptics")] if name.endswith(".adaptics") else name
    for p in library_dir().glob("*.adaptics"):
        if p.stem.lower() == stem.lower():
            return p
    raise FileNotFoundError(f"no bundled tacton named {name!r}")


def load_tacton(name: str) -> Tacton:
    return parse_tacton(library_path(name).read_text(encoding="utf-8"))
