from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def kojo_story() -> str:
    return (FIXTURES / "kojo_story.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def kojo_transcript() -> str:
    return (FIXTURES / "kojo_transcript.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def clouds_story() -> str:
    return (FIXTURES / "clouds_story.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def clouds_transcript() -> str:
    return (FIXTURES / "clouds_transcript.txt").read_text(encoding="utf-8")
