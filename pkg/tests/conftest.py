"""Shared pytest plumbing: acceptance-criterion result summary.

Tests named test_cNN_* map to criterion cNN; after the run a PASS/FAIL
line is printed per criterion so the suite's acceptance status is
readable at a glance. Several test functions may share one criterion,
in which case the worst outcome wins.
"""

import re

CRITERIA = {
    "c01":
        "analytic field fixed point at a node (|alpha|^2 -> 0.28125, 1e-8 rel)",
    "c02":
        "empty-cavity vacuum floor <|alpha-alpha_st|^2> = 0.50 +- 0.02",
    "c03":
        "noise sampler reproduces covariance table at 1e6 draws (1% / 3 sigma)",
    "c04":
        "lossless Hamiltonian drift < 1e-6 over t=10 at dt=1e-4",
    "c05":
        "blue longitudinal cooling: steady E in [14, 32], E < 40 by t=40, B < 0.35",
    "c06":
        "red/blue steady intensity ratio = 2 +- 30% at matched pump",
    "c07":
        "transverse blue cooling: E = 10 +- 50% and matches kT formula within 30%",
    "c08":
        "self-ordering: red B 0.5 -> >0.9 across threshold; blue node trapping; reordering",
    "c09":
        "friction map signs: drag f1 vs ensemble dE/dt, 4/4 probes agree",
    "c10":
        "transverse cooling >= 3x faster than longitudinal; documented loss scales",
    "c11":
        "same seed -> byte-identical CSV; scan invariant under worker count",
}

_ID = re.compile(r"test_(c\d{2})_")

_results = {}


# worst outcome wins across the tests of one criterion
_RANK = {"passed": 0, "skipped": 1, "xfail": 2, "failed": 3}


def _record(cid, outcome):
    prev = _results.get(cid)
    if prev is None or _RANK.get(outcome, 3) >= _RANK.get(prev, 3):
        _results[cid] = outcome


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    m = _ID.match(name)
    if m is None or m.group(1) not in CRITERIA:
        return
    cid = m.group(1)
    if report.when == "call":
        if getattr(report, "wasxfail", None) is not None and report.skipped:
            _record(cid, "xfail")       # documented expected failure
        else:
            _record(cid, report.outcome)
    elif report.when == "setup" and report.outcome != "passed":
        _record(cid, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP",
             "xfail": "XFAIL"}
    for cid, desc in CRITERIA.items():
        outcome = _results.get(cid)
        if outcome is None:
            continue
        tr.write_line(f"[{words.get(outcome, outcome.upper())}] {cid}: {desc}")
