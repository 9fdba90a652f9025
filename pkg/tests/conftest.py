import numpy as np
import pytest

from jeep.controlled_source import textured_image


@pytest.fixture(scope="session")
def image512():
    return textured_image(512, 512, seed=0)


@pytest.fixture(scope="session")
def image64():
    return textured_image(64, 64, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> list of (part, passed, detail), filled by the acceptance suite
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"criterion {criterion} [{part}]: {'PASS' if passed else 'FAIL'} {detail}")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p for _, p, _ in parts)
        detail = "; ".join(f"{name}: {'pass' if p else 'FAIL'} ({d})" for name, p, d in parts)
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
