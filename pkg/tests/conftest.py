import pytest

from falcon import fixtures


@pytest.fixture(scope="session")
def corpus():
    return fixtures.build_fixture_corpus()


@pytest.fixture(scope="session")
def audit_fixture():
    return fixtures.build_audit_fixture()
