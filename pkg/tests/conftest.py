from pathlib import Path

import numpy as np
import pytest

from topspark.dataset import load_idx
from topspark.neuron import NetworkState, NeuronParams

DATA = Path(__file__).resolve().parent.parent / "data"
MNIST_IMAGES = DATA / "mnist10k-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist10k-labels-idx1-ubyte.gz"


@pytest.fixture(scope="session")
def mnist():
    if not MNIST_IMAGES.exists():
        pytest.skip("bundled MNIST sample not present")
    return load_idx(MNIST_IMAGES, MNIST_LABELS, "mnist10k")


@pytest.fixture
def table1():
    """Default neuron parameters (T0 = 350, T_ref = 5, V_reset = -60, V_th = -52, theta = 1)."""
    return NeuronParams()


def make_state(n_inputs, n_neurons, params=None, weights=None, seed=None):
    params = params or NeuronParams()
    rng = None if seed is None else np.random.default_rng(seed)
    state = NetworkState.create(n_inputs, n_neurons, params, rng)
    if weights is not None:
        state.weights = np.asarray(weights, dtype=np.float64).reshape(n_inputs, n_neurons).copy()
    return state


# --- acceptance report -------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.fixture
def note(request):
    """Attach a short measured-values string to the criterion line."""
    def _note(text):
        request.node.criterion_note = text
    return _note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when != "call" and not (rep.failed or rep.skipped):
        return
    number, title = marker.args
    status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
    entry = _CRITERIA.setdefault(number, {"title": title, "status": [], "notes": []})
    entry["status"].append(status)
    note = getattr(item, "criterion_note", "")
    if note:
        entry["notes"].append(note)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "FAIL" if "FAIL" in e["status"] else "SKIP" if "SKIP" in e["status"] else "PASS"
        line = f"criterion {number}: {status}  {e['title']}"
        if e["notes"]:
            line += "  [" + "; ".join(e["notes"]) + "]"
        terminalreporter.write_line(line)
