import math

import pytest
from hypothesis import settings

from hecke_density import make_field

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# lines added by test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def field7():
    return make_field(7, 2)


@pytest.fixture(scope="session")
def pipeline_dir(tmp_path_factory):
    """Output directory holding the d=7, N=2, K=40 zero sets at the automatic height.

    Built once through the CLI; later users read from its cache.
    """
    from hecke_density.cli import main

    out = tmp_path_factory.mktemp("pipeline")
    assert main(["zeros", "--d", "7", "--N", "2", "--K", "40", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="session")
def pipeline_zeros(pipeline_dir):
    from hecke_density.cli import RunConfig, _height, family_zeros

    cfg = RunConfig(d=7, N=2, K=40, output_dir=str(pipeline_dir))
    cfg.validate()
    field = make_field(7, 2)
    T = _height(cfg, field)
    sets = family_zeros(cfg, 7, 2, T)
    assert len(sets) == 40 and all(math.isclose(z.T, T) for z in sets)
    return sets, T
