import json
from collections import OrderedDict
from importlib import resources

import jsonschema
import numpy as np
import pytest
from referencing import Registry, Resource

from lidarfog.optics import FogOptics
from lidarfog.pointcloud_io import write_kitti_bin

# Coefficients of the strong preset on the default grid, frozen so tests that
# only need "strong fog" optics do not redo the Mie quadrature.
STRONG_DIST = FogOptics(0.02907365905232191, 0.02029240746041989, psd_name="strong_advection")
STRONG_MOR = FogOptics(0.02907365905232191, 0.00115, source="mor", psd_name="strong_advection", mor=40.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    key, title = crit
    ok = report.passed or (report.outcome == "skipped" and hasattr(report, "wasxfail"))
    state = _CRITERIA.setdefault(key, {"title": title, "ok": True, "tests": 0})
    state["ok"] &= ok
    state["tests"] += 1


_CRITERIA = OrderedDict()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report._criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k[2:])):
        s = _CRITERIA[key]
        verdict = "PASS" if s["ok"] else "FAIL"
        terminalreporter.write_line(f"{key} {verdict}  {s['title']} ({s['tests']} checks)")


def random_cloud(rng, n, r_lo=1.0, r_hi=80.0):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = rng.uniform(r_lo, r_hi, n)
    return np.column_stack([d * r[:, None], rng.uniform(0.0, 1.0, n)]).astype(np.float32)


@pytest.fixture
def toy_dataset(tmp_path):
    """Ten small KITTI scans under ``root/seq``."""
    rng = np.random.default_rng(7)
    root = tmp_path / "in"
    for k in range(10):
        write_kitti_bin(root / "seq" / f"{k:06d}.bin", random_cloud(rng, 1500))
    return root


def _schemas():
    pkg = resources.files("lidarfog") / "schemas"
    return {p.name: json.loads(p.read_text()) for p in pkg.iterdir() if p.name.endswith(".json")}


@pytest.fixture(scope="session")
def validate_json():
    schemas = _schemas()
    registry = Registry().with_resources([(s["$id"], Resource.from_contents(s)) for s in schemas.values()])

    def check(doc, name):
        jsonschema.Draft202012Validator(schemas[name], registry=registry).validate(doc)

    return check
