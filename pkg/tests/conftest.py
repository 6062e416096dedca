"""Shared fixtures and the acceptance summary printed at the end of a run."""
from __future__ import annotations

import numpy as np
import pytest

from quasifree.model import ModelSpec

ACCEPTANCE_FILE = "test_acceptance.py"

_criteria: dict[int, dict] = {}
_property_tests = {"passed": 0, "failed": 0}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def random_model(rng: np.random.Generator, n0: int = 2, complex_hop: bool = True, pairing: bool = True,
                 imaginary: bool = False) -> ModelSpec:
    """Random model with ``n0`` hopping coefficients and ``n0 - 1`` pairing coefficients."""
    def draw(size):
        re = rng.normal(size=size)
        im = rng.normal(size=size) if complex_hop else np.zeros(size)
        return re + 1j * im

    hop = draw(n0)
    hop[0] = rng.normal()
    pair = draw(n0 - 1) if pairing else np.zeros(0)
    if imaginary:
        hop = 1j * hop.imag
        hop[0] = 0.0
        pair = 1j * rng.normal(size=n0 - 1)
    return ModelSpec(tuple(hop), tuple(pair))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when != "call" and not rep.failed:
        return
    if rep.when == "teardown" and rep.passed:
        return
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        num, title = marker.args
        entry = _criteria.setdefault(num, {"title": title, "ok": True, "notes": []})
        entry["ok"] = entry["ok"] and rep.passed and not rep.skipped
        entry["notes"].extend(f"{k}={v}" for k, v in item.user_properties)
    elif item.path.name != ACCEPTANCE_FILE and rep.when == "call":
        _property_tests["passed" if rep.passed else "failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        entry = _criteria[num]
        ok = entry["ok"]
        if num == 10:
            n_pass, n_fail = _property_tests["passed"], _property_tests["failed"]
            if n_pass + n_fail:
                ok = ok and n_fail == 0
                entry["notes"].append(f"property_tests_passed={n_pass}/{n_pass + n_fail}")
            else:
                entry["notes"].append("property modules not collected in this run")
        status = "PASS" if ok else "FAIL"
        notes = ("  [" + "; ".join(entry["notes"]) + "]") if entry["notes"] else ""
        tr.write_line(f"criterion {num:2d} {status}  {entry['title']}{notes}")
