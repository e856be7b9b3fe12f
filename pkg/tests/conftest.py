import numpy as np
import pytest

from katonls import gaussian_well, make_grid, sample_potential, spectral_data


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16, 12.0)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32, 12.0)


@pytest.fixture(scope="session")
def well5(grid32):
    return sample_potential(gaussian_well(5.0), grid32)


@pytest.fixture(scope="session")
def well10(grid32):
    return sample_potential(gaussian_well(10.0), grid32)


@pytest.fixture(scope="session")
def spec5(well5):
    return spectral_data(well5, resonance=False)


@pytest.fixture(scope="session")
def spec10(well10):
    return spectral_data(well10, resonance=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for acceptance verdicts: ``acceptance(k, ok, detail)``."""

    def record(k, ok, detail):
        ACCEPTANCE[k] = (bool(ok), detail)
        print(f"\nACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} ({detail})")
