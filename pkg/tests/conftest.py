from functools import lru_cache

import pytest

from selfsim import registry
from selfsim.machine import Machine

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@lru_cache(maxsize=None)
def builtin_machine(key: str) -> Machine:
    return Machine(registry.get(key).group)


@pytest.fixture
def machine():
    return builtin_machine


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
