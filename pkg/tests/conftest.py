from __future__ import annotations

import pytest

_KEY = pytest.StashKey[list]()


class AcceptanceLog:
    """Collects sub-check outcomes so the terminal summary can print one line per criterion."""

    def __init__(self, store: list):
        self.store = store

    def check(self, criterion: int, name: str, ok: bool, detail: str = "") -> bool:
        self.store.append((criterion, name, bool(ok), detail))
        return bool(ok)


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture(scope="session")
def acceptance(request) -> AcceptanceLog:
    return AcceptanceLog(request.config.stash[_KEY])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted({r[0] for r in rows}):
        subs = [r for r in rows if r[0] == crit]
        status = "PASS" if all(r[2] for r in subs) else "FAIL"
        failed = [r[1] for r in subs if not r[2]]
        tail = f" (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{status} criterion {crit}: {len(subs)} checks{tail}")
        for _, name, ok, detail in subs:
            terminalreporter.write_line(f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}")
