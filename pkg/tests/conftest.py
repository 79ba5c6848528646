import pytest

from oceandtp.emulators import OptodeModel
from oceandtp.medium import MediumConfig
from oceandtp.scenarios import PlatformSpec, SimConfig


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" not in str(getattr(report, "nodeid", "")):
                continue
            name = report.nodeid.split("::", 1)[1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def flat_optode():
    return OptodeModel(baseline_umol_per_l=280.0)


def make_config(scenario="a", platforms=None, duration_s=3600.0, seed=42,
                loss_prob=0.0, medium_seed=0, distances=None, **kwargs):
    if platforms is None:
        platforms = (PlatformSpec("p1", 2),)
    medium = MediumConfig(loss_prob=loss_prob, seed=medium_seed,
                          distances_m=distances or {})
    return SimConfig(seed=seed, duration_s=duration_s, medium=medium,
                     platforms=tuple(platforms), vessel_addr=1,
                     scenario=scenario, **kwargs)
