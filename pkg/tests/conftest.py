import numpy as np
import pytest


def random_positive_funcs(rng, m):
    """m strictly positive smooth generating functions on [0, 1]."""
    out = []
    for _ in range(m):
        kind = rng.integers(3)
        a = round(float(rng.uniform(0.6, 1.6)), 4)
        b = round(float(rng.uniform(-0.4, 0.4)), 4)
        c = round(float(rng.uniform(0.5, 3.0)), 4)
        if kind == 0:
            out.append(f"{a} + {b}*sin({c}*t)")
        elif kind == 1:
            out.append(f"{a}*exp({b}*t)")
        else:
            out.append(f"{a} + {abs(b)}*t^2")
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


ACCEPTANCE_LINES = []


def record_acceptance(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
