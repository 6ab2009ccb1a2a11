import numpy as np
import pytest

import rteuler as rt


@pytest.fixture(scope="session")
def dw_model():
    return rt.double_well_model()


@pytest.fixture(scope="session")
def dw_params():
    return rt.DoubleWellParams()


@pytest.fixture(scope="session")
def jumps_unit():
    return rt.normal_marks(1.0)


@pytest.fixture
def small_draw(jumps_unit):
    return rt.make_path_draw(
        42, 0, fine_n=256, m=1, horizon=1.0, levels=[256, 64, 32],
        jump_model=jumps_unit, x0=np.array([2.0]),
    )


def linear_decay_model():
    """Deterministic ODE-mode problem dx = -x dt, exact solution x0 * e^-t."""
    return rt.scalar_model(lambda t, x: -x, zeta=0.0, name="linear-decay")


def cubic_decay_model():
    """dx = -x^3 dt; classical Euler on it blows up from large x0."""
    return rt.scalar_model(lambda t, x: -(x**3), zeta=2.0, name="cubic-decay")


rt.register_model("linear-decay", lambda **kw: linear_decay_model())
rt.register_model("cubic-decay", lambda **kw: cubic_decay_model())
