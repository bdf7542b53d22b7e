import pytest

from meshwalk.config import RunConfig


@pytest.fixture
def small_config():
    """Three simulated minutes with a handful of clients; enough to exercise every path."""
    return RunConfig().with_overrides([
        "clients.count=4", "sim.duration_s=180", "sim.warmup_s=60", "scene.object_count=40", "scene.world_size=400",
    ])


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
