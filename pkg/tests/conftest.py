from __future__ import annotations

from pathlib import Path

import pytest

from factlens.providers import MockChatProvider

FIXTURES_DIR = Path(__file__).parent / "fixtures"
MOCK_DATASET = FIXTURES_DIR / "mock_dataset.jsonl"
MOCK_ROUTES = FIXTURES_DIR / "mock_routes.json"


@pytest.fixture
def mock_provider() -> MockChatProvider:
    return MockChatProvider.from_fixture_file(MOCK_ROUTES)
