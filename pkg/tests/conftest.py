from __future__ import annotations

import pytest

from ccsni import kernels, parse
from ccsni.core import Program

BACKENDS = sorted(kernels.available())


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel backend."""
    before = kernels.BACKEND
    kernels.use(request.param)
    yield request.param
    kernels.use(before)


def prog(text: str) -> Program:
    """Parse, prefixing ``main =`` when the text is a bare process."""
    if "main" not in text:
        text = "main = " + text
    return parse(text)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance")
        for line in RESULTS.values():
            terminalreporter.write_line(line)
