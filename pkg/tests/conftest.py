import pytest

from semiconj import IntegratorConfig, build_map, make_builtin

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def normalized2():
    return make_builtin("normalized", 2)


@pytest.fixture(scope="session")
def x0plane():
    return make_builtin("x0-plane", 2)


@pytest.fixture(scope="session")
def numeric():
    return IntegratorConfig(use_closed_form=False)


@pytest.fixture(scope="session")
def unit_map(normalized2):
    return build_map(normalized2, 0.5, 1.0)


@pytest.fixture(scope="session")
def x0_map(x0plane):
    return build_map(x0plane, 0.25, 1.0)


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
