from functools import lru_cache

import pytest
from hypothesis import HealthCheck, settings
from threadpoolctl import threadpool_limits

from fraciso.domain import build_mesh, parse_domain
from fraciso.fracop import assemble_operator

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_limits = threadpool_limits(limits=1)

TWO = "(-1,-0.2),(0.2,1)"


@lru_cache(maxsize=64)
def cached_op(literal: str, s: float, M: int):
    return assemble_operator(build_mesh(parse_domain(literal), M), s)


@pytest.fixture
def op_factory():
    return cached_op


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
