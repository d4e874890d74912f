import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from twoweight.instances import Instance
from twoweight.lattice import Measure, build_lattice
from twoweight.operator import as_coefficients

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def worked():
    """Two atoms a, b: mu=(1,2), nu=(3,1), alpha=(root .5, a 1, b .25), f=(2,1), g=(1,4)."""
    lat = build_lattice(1, 2)
    return Instance(
        lattice=lat,
        mu=Measure(lat, [1.0, 2.0]),
        nu=Measure(lat, [3.0, 1.0]),
        alpha=as_coefficients(lat, {"0:0": 0.5, "1:0": 1.0, "1:1": 0.25}),
        f=np.array([2.0, 1.0]),
        g=np.array([1.0, 4.0]),
    )


@pytest.fixture
def four_atoms():
    """Binary depth-2 lattice, counting measure, f = (8, 0, 0, 0)."""
    lat = build_lattice(2, 2)
    return lat, Measure(lat, np.ones(4)), np.array([8.0, 0.0, 0.0, 0.0])


masses = st.one_of(
    st.just(0.0),
    st.floats(1e-3, 1e3, allow_nan=False),
)
# zero or a normal float: subnormal data underflows once raised to a power
values = st.one_of(st.just(0.0), st.floats(1e-6, 100.0))


@st.composite
def instances(draw, max_depth=4, allow_zero_mass=True, min_depth=0):
    depth = draw(st.integers(min_depth, max_depth))
    arity = draw(st.lists(st.integers(2, 3), min_size=depth, max_size=depth))
    lat = build_lattice(depth, arity)
    n = lat.n_atoms
    m = masses if allow_zero_mass else st.floats(1e-3, 1e3)
    mu = Measure(lat, draw(st.lists(m, min_size=n, max_size=n)))
    nu = Measure(lat, draw(st.lists(m, min_size=n, max_size=n)))
    alpha = np.array(draw(st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 10.0)), min_size=lat.n_cubes, max_size=lat.n_cubes)))
    f = np.array(draw(st.lists(values, min_size=n, max_size=n)))
    g = np.array(draw(st.lists(values, min_size=n, max_size=n)))
    return Instance(lat, mu, nu, alpha, f, g, arity)


exponents = st.sampled_from([1.25, 1.5, 2.0, 3.0, 4.5])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
