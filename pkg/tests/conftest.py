"""Collects acceptance verdicts and prints one line per criterion after the run."""

from collections import defaultdict

import pytest

_VERDICTS: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)

TITLES = {
    1: "closed forms match brute-force oracles",
    2: "range CDF matches Monte Carlo",
    3: "Pareto estimator distributions",
    4: "Chernoff and normal tail bounds",
    5: "pull-count slopes reach 1/M targets",
    6: "suboptimal pulls over n^0.25 decrease",
    7: "byte-identical CSV, serial vs parallel",
}


@pytest.fixture
def verdict():
    """``verdict(criterion, label, passed, detail)`` records one check."""

    def record(criterion: int, label: str, passed: bool, detail: str = "") -> bool:
        _VERDICTS[criterion].append((label, bool(passed), detail))
        line = f"  [{'PASS' if passed else 'FAIL'}] criterion {criterion} {label}: {detail}"
        print(line)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(_VERDICTS):
        rows = _VERDICTS[c]
        ok = all(p for _, p, _ in rows)
        failed = [label for label, p, _ in rows if not p]
        note = f"{len(rows)} checks" if ok else f"failed: {', '.join(failed)}"
        tr.write_line(f"criterion {c} ({TITLES.get(c, '')}): {'PASS' if ok else 'FAIL'} ({note})")
    for c in sorted(_VERDICTS):
        for label, p, detail in _VERDICTS[c]:
            tr.write_line(f"    {c}. {'PASS' if p else 'FAIL'} {label}: {detail}")
