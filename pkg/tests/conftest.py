import pytest

from maxwell_bloch import make_config

# Small grid that still resolves the input pulse; runs in well under a second
FAST = {"optical_depth": 200.0, "gradient_strength": 200.0, "nz": 128, "nt": 801}

RB87_D1_FILE = """\
# 87Rb D1 written out as a data file
species = {species}
line = {line}

nuclear_spin = 3/2
ground_J = 1/2
excited_J = 1/2

reduced_dipole = 2.5377e-29 C·m
linewidth = 5.75 MHz
line_center = 377.107463380 THz

ground_F1_offset = -4.271676631815181 GHz
ground_F2_offset = 2.563005979089109 GHz
excited_F1_offset = -509.05 MHz
excited_F2_offset = 305.43 MHz
"""


@pytest.fixture
def fast_config():
    return make_config(**FAST)


@pytest.fixture
def line_file_text():
    """Format with species= and line= to get a valid D1-like data file"""
    return RB87_D1_FILE


@pytest.fixture(autouse=True)
def _no_user_environment(monkeypatch):
    for name in ("ASGEM_DATA_DIR", "ASGEM_LOG_LEVEL", "ASGEM_WORKERS"):
        monkeypatch.delenv(name, raising=False)
