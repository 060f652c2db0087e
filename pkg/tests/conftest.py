import pytest

from foml import DefinitionEnvironment, Definition, parse_expr
from foml.syntax import Eq, Nabla, RigidVar, exists_


@pytest.fixture
def env():
    """Small shared signature: 0/1 constants, f unary, g binary, rigid x y,
    flexible u v, and the constancy operator from the worked examples."""
    base = DefinitionEnvironment.build(
        ops={"0": 0, "1": 0, "f": 1, "g": 2},
        rigid=("x", "y", "z"),
        flex=("u", "v"),
    )
    cst = Definition(
        "cst", ("p",), exists_("q", Nabla(Eq(RigidVar("p"), RigidVar("q")))))
    return base.extended(definitions=(cst,))


@pytest.fixture
def parse(env):
    def go(text, environment=None):
        return parse_expr(text, environment or env)

    return go
