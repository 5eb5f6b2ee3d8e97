import math

import pytest

from symmspec.geometry import DomainSpec, build_mesh

SQRT_PI = math.sqrt(math.pi)


@pytest.fixture(scope="session")
def disk_mesh():
    return build_mesh(DomainSpec.disk(1.0), 0.05)


@pytest.fixture(scope="session")
def coarse_meshes():
    specs = {
        "disk": DomainSpec.disk(1.0),
        "square": DomainSpec.rectangle(SQRT_PI, SQRT_PI),
        "ellipse": DomainSpec.ellipse(1.3, 0.7),
        "polar": DomainSpec.polar(1.0, [(1, 0.1)]),
    }
    return {k: build_mesh(s, 0.25) for k, s in specs.items()}


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
