import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from throughput_sched.core import ingest  # noqa: E402

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=150,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@st.composite
def job_records(draw, n_max=8, horizon=20, size_max=8, lax_max=12):
    n = draw(st.integers(0, n_max))
    records = []
    for i in range(n):
        r = draw(st.integers(0, horizon))
        x = draw(st.integers(1, size_max))
        lax = draw(st.integers(0, lax_max))
        records.append({"id": i, "release": r, "size": x, "deadline": r + x + lax})
    return records


@st.composite
def instances(draw, n_max=8, m_max=3, horizon=20, size_max=8, lax_max=12, m_min=1):
    records = draw(job_records(n_max, horizon, size_max, lax_max))
    m = draw(st.integers(m_min, m_max))
    return ingest(records, m)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        terminalreporter.write_line(verdicts[number])
