import json
import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from longsum.testing import MockBackendServer  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def mock_server():
    with MockBackendServer() as srv:
        yield srv


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return path


WORDS = (
    "model graph sentence rank summary paper data result method token attention "
    "long document score network layer training test value word"
).split()


def synthetic_record(i, rng, n_sent=None):
    n_sent = n_sent or rng.randint(3, 9)
    sents = [" ".join(rng.choice(WORDS) for _ in range(rng.randint(3, 10))) + "." for _ in range(n_sent)]
    abstract = [f"<S> {rng.choice(sents)} </S>" for _ in range(rng.randint(1, 2))]
    return {
        "article_id": f"doc{i:04d}",
        "article_text": sents,
        "abstract_text": abstract,
        "section_names": ["intro"],
        "sections": [sents],
    }


@pytest.fixture
def corpus(tmp_path):
    rng = random.Random(7)
    return write_jsonl(tmp_path / "corpus.jsonl", [synthetic_record(i, rng) for i in range(12)])


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    cid, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        detail = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = f" ({rep.longrepr[2]})"
        extra = getattr(item, "acceptance_detail", "")
        ACCEPTANCE_LINES.append(f"[{status}] criterion {cid}: {title}{detail}{extra}")
