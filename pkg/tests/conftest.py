import math

import pytest

from gevrey_bnf.problems import bundled_problem, pendulum_problem, problem_from_dict

PHI = (1 + math.sqrt(5)) / 2


def pendulum(omega0=1.0, eps=0.5):
    return problem_from_dict(pendulum_problem(omega0, eps)).spec


@pytest.fixture(scope="session")
def pendulum_spec():
    return bundled_problem("pendulum.json").spec


@pytest.fixture(scope="session")
def integrable_spec():
    return bundled_problem("integrable.json").spec


@pytest.fixture(scope="session")
def golden_spec():
    return bundled_problem("golden2d.json").spec
