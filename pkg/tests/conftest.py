import pytest

from cctrlab.analysis import ProfileF
from cctrlab.constants import constants_bundle


@pytest.fixture(scope="session")
def bundle():
    return constants_bundle()


@pytest.fixture(scope="session")
def profile(bundle):
    return ProfileF(bundle.a, bundle.b)


# acceptance results, filled by test_acceptance.py and echoed after the run
ACCEPTANCE: list[tuple[str, str, bool, str]] = []


@pytest.fixture
def accept():
    def record(criterion: str, label: str, ok: bool, detail: str):
        ACCEPTANCE.append((criterion, label, bool(ok), detail))
        print(f"{criterion} {label}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{criterion} {label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    order = []
    for crit, *_ in ACCEPTANCE:
        if crit not in order:
            order.append(crit)
    for crit in order:
        rows = [r for r in ACCEPTANCE if r[0] == crit]
        failed = [label for _, label, ok, _ in rows if not ok]
        status = "PASS" if not failed else "FAIL (" + ", ".join(failed) + ")"
        tr.write_line(f"{crit}: {status}")
        for _, label, ok, detail in rows:
            tr.write_line(f"    {label}: {'pass' if ok else 'fail'} - {detail}")
