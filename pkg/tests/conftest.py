import json
from pathlib import Path

import pytest

from flexbench.simserver import SimProfile, SimServer, start_server

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sample_record_raw() -> dict:
    """The published reference dataset entry, escaped keys and all."""
    return json.loads((DATA_DIR / "openmlperf_sample.json").read_text())


@pytest.fixture
def sim_factory():
    """Start simulators on demand; all are torn down at test end."""
    servers: list[SimServer] = []

    def _start(profile: SimProfile, port: int = 0) -> SimServer:
        server = start_server(profile, port=port)
        servers.append(server)
        return server

    yield _start
    for server in servers:
        server.stop()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    results: dict[str, str] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            verdict = "PASS" if outcome == "passed" else "FAIL"
            if name not in results or verdict == "FAIL":
                results[name] = verdict
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in results.items():
            terminalreporter.write_line(f"{name}: {verdict}")
