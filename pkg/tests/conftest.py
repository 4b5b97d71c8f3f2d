import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hdtomo.model import ChannelSpec, SignalSpec, sample_dataset  # noqa: E402

NBAR_REF = 8.4
N_REF = 242250


@pytest.fixture(scope="session")
def vacuum_1e5():
    return sample_dataset(SignalSpec.vacuum(), ChannelSpec.identity(), 100_000, seed=11)


@pytest.fixture(scope="session")
def coherent_ref():
    """Coherent signal with 8.4 mean photons, N = 242250, identity channel."""
    return sample_dataset(SignalSpec(math.sqrt(NBAR_REF)), ChannelSpec.identity(), N_REF, seed=2001)


@pytest.fixture(scope="session")
def coherent_1e5():
    return sample_dataset(SignalSpec(math.sqrt(NBAR_REF)), ChannelSpec.identity(), 100_000, seed=7)


@pytest.fixture(scope="session")
def rho_ref(coherent_ref):
    from hdtomo.tomo import reconstruct_rho

    return reconstruct_rho(coherent_ref, 20)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
