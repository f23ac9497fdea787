import pytest

from tracechain.group import PRODUCTION, TOY
from tracechain.protocol import Role, SupplyChain, execute_hop
from tracechain.scenario import default_scenario, run_scenario


def build_chain(group=PRODUCTION, hops=0, product="P-1", seed=b"test"):
    """Chain with M, D, R, C and one registered product moved ``hops`` times."""
    chain = SupplyChain(group, seed=seed)
    names = [("M", Role.MANUFACTURER), ("D", Role.DISTRIBUTOR),
             ("R", Role.RETAILER), ("C", Role.CONSUMER), ("E", Role.CONSUMER)]
    for name, role in names:
        chain.add_party(name, role)
    m = chain.parties["M"]
    assert chain.register_manufacturer(m).succeeded
    assert chain.associate_product(m, product).succeeded
    assert chain.register_product(m, product).succeeded
    order = ["M", "D", "R", "C"]
    for i in range(hops):
        execute_hop(chain, chain.parties[order[i]], chain.parties[order[i + 1]], product)
    return chain


@pytest.fixture
def chain():
    return build_chain()


@pytest.fixture
def toy_chain():
    return build_chain(TOY)


@pytest.fixture(scope="session")
def default_run():
    return run_scenario(default_scenario())


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
