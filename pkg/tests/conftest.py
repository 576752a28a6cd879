import pytest

TOY_CONFIG = """
[grid]
n_points = 512
x_min = -300.0
x_max = 300.0

[device]
barrier_height = 0.3
barrier_width = 3.0
well_width = 5.0
device_start = 0.0

[packet]
x0 = -100.0
sigma_x = 15.0
k0 = 0.8

[stepper]
substeps = 5

[measurement]
sigma = 0.3
tau = 1.0
L_x = 50.0
seed = 11

[run]
t_end = 20.0
snapshot_times = [0.0, 10.0]

[ensemble]
n_trajectories = 6

[sweep]
biases = [0.0, 0.05]

[transmission]
e_min = 0.01
e_max = 0.6
n_energies = 50
"""


@pytest.fixture
def toy_text():
    return TOY_CONFIG


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "toy.toml"
    path.write_text(TOY_CONFIG)
    return path


_CRITERIA = []


@pytest.fixture
def criterion_report():
    """Collects the acceptance lines printed in the terminal summary."""
    return _CRITERIA.append


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
