from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))
sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))

settings.register_profile(
    "default",
    max_examples=150,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.register_profile("stress", parent=settings.get_profile("default"), max_examples=3000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CORPUS = Path(__file__).parent.parent / "src" / "reachck" / "corpus"
GOLDEN = Path(__file__).parent / "golden"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.rt"))


def expectation(path: Path) -> str:
    """The ``// expect: ...`` header: ``ok`` or ``error <code>``."""
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first.startswith("// expect: "), path
    return first[len("// expect: ") :].strip()


@pytest.fixture(scope="session")
def prelude():
    from reachck.driver import load_prelude

    return load_prelude()
