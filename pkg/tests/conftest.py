import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

import regulith.partition as _partition  # noqa: E402
from regulith.graph import WeightedGraph  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile(
    "thorough", max_examples=600, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# every index of partition evaluated anywhere in the session, for the global bound check
INDEX_SEEN = []
ACCEPTANCE = {}

_original_index = _partition.index_of_partition


def _recording_index(g, p):
    value = _original_index(g, p)
    INDEX_SEEN.append(value)
    return value


_partition.index_of_partition = _recording_index


def planted(sizes, p_in, p_out, seed):
    """0/1 generalized random graph with planted blocks; returns (graph, block labels)."""
    rng = np.random.default_rng(seed)
    lab = np.repeat(np.arange(len(sizes)), sizes)
    prob = np.where(lab[:, None] == lab[None, :], p_in, p_out)
    a = np.triu(rng.random((lab.size, lab.size)) < prob, 1).astype(float)
    return WeightedGraph(a + a.T), lab


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so the session-wide index bound sees every partition
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
