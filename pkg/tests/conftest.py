import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from grasplab.config import desk_preset  # noqa: E402
from grasplab.scene import Circle, Material, ObjectModel, Placed, Pose2D, Rect, Scene, Workspace  # noqa: E402

BIN = Workspace(0.0, 0.0, 400.0, 400.0)


def obj(shape, material=Material.RIGID, height=60.0, oid=None, color=(0.8, 0.1, 0.1)):
    return ObjectModel(oid or f"o{id(shape)}", shape, Material(material), height, 100.0, color)


def single(shape, x=200.0, y=200.0, theta=0.0, **kw):
    return Scene(BIN, (Placed(obj(shape, **kw), Pose2D(x, y, theta)),))


@pytest.fixture(scope="session")
def preset():
    return desk_preset()


@pytest.fixture
def rect_scene():
    return single(Rect(40, 20), oid="rect")


@pytest.fixture
def circle_scene():
    return single(Circle(25), oid="disk")


ACCEPTANCE = []  # (criterion, passed, detail), filled by test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
