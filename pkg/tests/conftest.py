import numpy as np
import pytest

from smearnet.imageio import save_image


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, h=None, w=None, max_side=12):
    h = h or int(rng.integers(1, max_side + 1))
    w = w or int(rng.integers(1, max_side + 1))
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def make_tree(root, cancer, normal, suffix=".png"):
    """Write ``{name: image}`` dicts into ``root/cancer`` and ``root/normal``."""
    for cls, items in (("cancer", cancer), ("normal", normal)):
        (root / cls).mkdir(parents=True, exist_ok=True)
        for name, img in items.items():
            save_image(img, root / cls / (name if "." in name else name + suffix))
    return root



# acceptance criterion number -> (title, verdict); one criterion may span
# several tests and fails if any of them does
_criteria = {}
_marked = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            _marked[item.nodeid] = m.args


def pytest_runtest_logreport(report):
    if report.nodeid not in _marked:
        return
    if report.when == "call" or report.outcome != "passed":
        num, title = _marked[report.nodeid]
        ok = report.outcome == "passed" and _criteria.get(num, (title, "PASS"))[1] == "PASS"
        _criteria[num] = (title, "PASS" if ok else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, verdict = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {verdict}  {title}")
