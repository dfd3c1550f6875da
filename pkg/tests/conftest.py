import numpy as np
import pytest

from slrecover import Potential, ProblemVector, benchmark_step_ramp


@pytest.fixture(scope="session")
def bench_512():
    return benchmark_step_ramp(512)


@pytest.fixture(scope="session")
def bench_1024():
    return benchmark_step_ramp(1024)


@pytest.fixture(scope="session")
def bench_problem_512(bench_512):
    return ProblemVector(3.0, 3.0, 0.0, bench_512)


@pytest.fixture(scope="session")
def bench_problem_1024(bench_1024):
    return ProblemVector(3.0, 3.0, 0.0, bench_1024)


@pytest.fixture(scope="session")
def zero_problem_1024():
    return ProblemVector(1.0, 2.0, 0.0, Potential.zero(1024))
