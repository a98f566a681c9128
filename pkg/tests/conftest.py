import re

import pytest

# criterion number -> (passed, detail)
_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion.

    Tests are named ``test_criterion_<n>_...``. Calling the fixture with
    ``(passed, detail)`` prints the line immediately; a test that raises
    before recording is reported as a failure.
    """
    num = int(re.match(r"test_criterion_(\d+)", request.node.name).group(1))

    def record(passed: bool, detail: str) -> None:
        _ACCEPTANCE[num] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {num}: {detail}")

    yield record
    if num not in _ACCEPTANCE:
        _ACCEPTANCE[num] = (False, "did not complete")
        print(f"FAIL criterion {num}: did not complete")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {num}: {detail}")
