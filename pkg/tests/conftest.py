import json
from pathlib import Path

import pytest

from supercrit import kernels

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def baselines():
    return json.loads((DATA / "baselines.json").read_text())


BACKENDS = [kernels.python_backend] + ([kernels.compiled_backend] if kernels.compiled_backend else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def ensemble():
    from supercrit.harness import measurement_ensemble

    return measurement_ensemble()


def pytest_terminal_summary(terminalreporter):
    import sys

    RESULTS = {}
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            RESULTS.update(getattr(mod, "RESULTS", {}))
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
