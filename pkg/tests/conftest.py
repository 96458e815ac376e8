import numpy as np
import pytest

K3 = np.ones((3, 3)) - np.eye(3)
P3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
E3 = np.zeros((3, 3))


def star5():
    A = np.zeros((5, 5))
    A[0, 1:] = A[1:, 0] = 1
    return A


def c4_plus_k1():
    A = np.zeros((5, 5))
    for i in range(4):
        A[i, (i + 1) % 4] = A[(i + 1) % 4, i] = 1
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def record(number: int, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
