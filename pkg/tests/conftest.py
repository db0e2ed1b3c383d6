import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from titsdyn.linalg import Matrix, random_orthogonal

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_fixture(name: str):
    return json.loads((FIXTURES / name).read_text())


def random_contracting(rng, n=3, min_ratio=1e4):
    """u diag(s) v with s1/s2 >= min_ratio, float entries."""
    u, v = random_orthogonal(rng, n), random_orthogonal(rng, n)
    s2 = 1.0
    s1 = min_ratio * 10 ** rng.uniform(0, 1.5)
    rest = np.sort(10 ** rng.uniform(-1, 0, n - 2))[::-1]
    s = np.concatenate([[s1, s2], rest])
    return Matrix.from_rows(u @ np.diag(s) @ v)


def rational_rotation_x(c=Fraction(3, 5), s=Fraction(4, 5)):
    return Matrix.from_exact([[1, 0, 0], [0, c, -s], [0, s, c]])


def rational_rotation_z(c=Fraction(3, 5), s=Fraction(4, 5)):
    return Matrix.from_exact([[c, -s, 0], [s, c, 0], [0, 0, 1]])


@pytest.fixture(scope="session")
def so3_generators():
    return [rational_rotation_x(), rational_rotation_z()]


@pytest.fixture(scope="session")
def separating_m1(so3_generators):
    from titsdyn.pingpong import find_separating
    return find_separating(so3_generators, 1)


@pytest.fixture(scope="session")
def separating_m2(so3_generators):
    from titsdyn.pingpong import find_separating
    return find_separating(so3_generators, 2)


# acceptance summary: one PASS/FAIL line per criterion at the end of the run

ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    status = "PASS" if rep.passed else "FAIL"
    if ACCEPTANCE.get(number, ("", "PASS"))[1] == "PASS":
        ACCEPTANCE[number] = (title, status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, status, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{status} criterion {number:2d} {title}: {detail}")
