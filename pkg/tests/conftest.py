import pytest

from routerev.dataset import CitySpec, generate_dataset
from routerev.geo import GeoPoint
from routerev.graph import build_grid


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(12, 12, 100.0, 10.0, 1)


@pytest.fixture(scope="session")
def small_dataset(small_grid):
    city = CitySpec("small", small_grid.point("r006c006"), sigma=400.0, r_min=300.0, r_max=1100.0)
    return generate_dataset(city, 30, 5, small_grid, min_length=400.0, max_length=1800.0)


@pytest.fixture(scope="session")
def origin():
    return GeoPoint(43.65, -79.38)


# --- acceptance reporting: one PASS/FAIL line per criterion ----------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"ok": True, "detail": []})
    if rep.failed:
        entry["ok"] = False
    if rep.when == "call":
        entry["detail"].extend(getattr(item, "criterion_detail", []))


@pytest.fixture
def detail(request):
    """Collects short result strings that are echoed in the criterion summary."""
    lines: list[str] = []
    request.node.criterion_detail = lines
    return lines


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if e['ok'] else 'FAIL'}  {'; '.join(e['detail'])}")
