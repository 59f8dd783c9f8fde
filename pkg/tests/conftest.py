import numpy as np
import pytest

from dikinwalk.baselines import hit_and_run_step
from dikinwalk.body import BodySpec, load_example
from dikinwalk.rng import make_rng

# criterion number -> (title, passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (title, bool(passed), detail)
    assert passed, f"criterion {number} ({title}) failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}: {detail}")


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture(scope="session")
def square():
    return load_example("square")


@pytest.fixture(scope="session")
def interval():
    return load_example("interval")


@pytest.fixture(scope="session")
def disk():
    return load_example("disk_spectrahedron")


@pytest.fixture(scope="session")
def two_balls():
    return load_example("two_ellipsoids")


@pytest.fixture(scope="session")
def mixed():
    return load_example("mixed3")


def random_polytope(rng, n: int, m: int) -> BodySpec:
    """``m`` constraints in R^n: a bounding box of half-width 2 plus random halfspaces."""
    rows = [s * e for e in np.eye(n) for s in (1.0, -1.0)]
    extra = m - 2 * n
    if extra > 0:
        G = rng.standard_normal((extra, n))
        rows.extend(G / np.linalg.norm(G, axis=1, keepdims=True))
    A = np.array(rows)
    b = np.concatenate([np.full(2 * n, 2.0), rng.uniform(0.3, 1.5, max(extra, 0))])
    return BodySpec(n, A=A, b=b)


def interior_points(body, count: int, rng, thin: int = 5) -> np.ndarray:
    """Spread-out interior points from a short Hit-and-Run run."""
    x = np.zeros(body.n)
    out = []
    for _ in range(count):
        for _ in range(thin):
            x = hit_and_run_step(body, x, rng)
        out.append(x)
    return np.array(out)
