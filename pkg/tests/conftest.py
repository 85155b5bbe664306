import itertools

import pytest


def naive_counts(d, n):
    """c_n and the endpoint sum from all (2d)^n step sequences."""
    units = []
    for a in range(d):
        for s in (1, -1):
            e = [0] * d
            e[a] = s
            units.append(tuple(e))
    count = 0
    sq = 0
    for seq in itertools.product(units, repeat=n):
        pos = (0,) * d
        seen = {pos}
        ok = True
        for st in seq:
            pos = tuple(p + q for p, q in zip(pos, st))
            if pos in seen:
                ok = False
                break
            seen.add(pos)
        if ok:
            count += 1
            sq += sum(c * c for c in pos)
    return count, sq


@pytest.fixture(scope="session")
def naive():
    cache = {}

    def get(d, n):
        if (d, n) not in cache:
            cache[(d, n)] = naive_counts(d, n)
        return cache[(d, n)]

    return get


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
