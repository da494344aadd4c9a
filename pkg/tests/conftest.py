import pytest

from abkit import PriorParams, TrialData

# Resilience-training example: control 249/500, training 269/500.
TRAINING = TrialData(249, 500, 269, 500)
# Large two-arm marketing example.
MARKETING = TrialData(1459, 2013, 1513, 2025)
SYMMETRIC = TrialData(5, 10, 5, 10)
SMALL = TrialData(2, 5, 3, 5)

# Informed prior fitted to absolute-risk quantiles 0.025/0.15/0.275.
INFORMED = PriorParams(0.0, 1.0, 0.7402328, 0.2677170)
STANDARD = PriorParams()


@pytest.fixture
def standard():
    return STANDARD


@pytest.fixture
def informed():
    return INFORMED


# One line per acceptance criterion, echoed again in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
