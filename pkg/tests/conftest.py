import pytest

from wholediff import (
    Expr,
    MassShellScenario,
    build_mass_shell,
)


@pytest.fixture(scope="session")
def ms_commuting():
    return build_mass_shell(MassShellScenario(ordering_mode="commuting"))


@pytest.fixture(scope="session")
def ms_paper():
    return build_mass_shell(MassShellScenario(ordering_mode="paper"))


@pytest.fixture(scope="session")
def ms_operator():
    return build_mass_shell(MassShellScenario(ordering_mode="operator"))


def field_of(ctx):
    fn, args = ctx.opaques[0]
    return Expr.opaque(fn, args)
