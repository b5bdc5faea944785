import json
from fractions import Fraction
from importlib import resources

import pytest

from lfmo_repair.policy import CostModel
from lfmo_repair.structure import BooleanFormula, structure_from_json
from lfmo_repair.subordinator import CompoundPoissonExp, psi_table

# ARPA signature as displayed with the original tables (exact rationals)
ARPA_SIGNATURE = tuple(
    Fraction(x)
    for x in (
        "0 9/325 209/2600 8113/59800 54567/328900 75329/460460 636819/4604600 1304221/12498200 "
        "22582/312455 113024/2414425 110911/3863080 64947/3863080 67233/7116200 690273/135207800 "
        "10227/3863080 55557/42493880 3214/5311735 398/1562275 289/3124550 3/115115 1/230230 0 0 0 0 0"
    ).split()
)


def bundled(name):
    return json.loads(resources.files("lfmo_repair").joinpath("data", name).read_text())


@pytest.fixture(scope="session")
def cpp():
    return CompoundPoissonExp(0.9, 0.2, 1.0)


@pytest.fixture(scope="session")
def bridge():
    return BooleanFormula(3, "(1&2)|3")


@pytest.fixture(scope="session")
def bridge_costs():
    return CostModel.linear(3, 1.0, 30.0)


@pytest.fixture(scope="session")
def arpa():
    return structure_from_json(bundled("arpa.json"))


@pytest.fixture(scope="session")
def cpp3(cpp):
    return psi_table(cpp, 3)


# PASS/FAIL lines recorded by the acceptance suite, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
