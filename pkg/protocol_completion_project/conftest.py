# conftest.py - shared pytest fixtures

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / 'fixtures'


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale ABP synthesis runs (minutes)')


@pytest.fixture
def abp_dir():
    return FIXTURES / 'abp'


@pytest.fixture
def reduction_dir():
    return FIXTURES / 'reduction'
