import os

# Pin BLAS to one core before numpy loads: keeps timings honest on a single
# CPU and keeps reductions bit-reproducible across runs.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from dialectid.audio import Waveform  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tone():
    """1 s, 440 Hz tone at 16 kHz."""
    t = np.arange(16000) / 16000.0
    return Waveform(0.5 * np.sin(2 * np.pi * 440.0 * t), 16000)


# one verdict line per acceptance criterion, printed after the normal summary
_CRITERIA_ORDER = [
    "gradient_oracle",
    "dsp_oracle",
    "pooling_invariants",
    "aam_properties",
    "synthetic_end_to_end",
    "fusion_and_cohort_properties",
    "metrics_oracle",
    "determinism",
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    states = {}
    for status, ok in (("passed", True), ("failed", False), ("error", False)):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            name = nodeid.split("::")[-1].removeprefix("test_")
            states[name] = states.get(name, True) and ok
    if not states:
        return

    def order(item):
        name = item[0]
        rank = _CRITERIA_ORDER.index(name) if name in _CRITERIA_ORDER else len(_CRITERIA_ORDER)
        return (rank, name)

    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok in sorted(states.items(), key=order):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name.replace('_', ' ')}")
