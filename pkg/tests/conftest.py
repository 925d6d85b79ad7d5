import pytest

from revcheck.fixtures import optional_fixture


@pytest.fixture
def yule_csv():
    """Path to the optional local 1866-1911 series, else skip.

    The file is not bundled (no faithful transcription was available); drop
    a yule1926.csv with columns year,marriage_ratio,mortality into
    ./fixtures or $REVCHECK_FIXTURE_DIR to activate the tests that use it.
    """
    path = optional_fixture("yule1926.csv")
    if path is None:
        pytest.skip("local yule1926.csv not present; synthetic substitute covers the property")
    return path
