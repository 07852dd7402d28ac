import hashlib
import json

from spectre_lab import corpus, report
from spectre_lab.security import Status


def test_table_matches_manifest():
    rows = report.compute_table()
    assert report.table_matches(rows)
    assert [r.pass_ for r in rows] == [r.pass_ for r in corpus.table_rows()]


def test_parallel_table_equals_sequential():
    assert report.compute_table(jobs=3) == report.compute_table()


def test_violated_cells_name_a_counterexample():
    for r in report.compute_table():
        for c in r.cells:
            assert (c.component is not None) == (c.status is Status.VIOLATED)


def test_structured_report_is_stable():
    a = report.dumps(report.table_dict(report.compute_table()))
    b = report.dumps(report.table_dict(report.compute_table()))
    assert a == b
    assert json.loads(a)["matches_expected"] is True


def test_figure_is_reproducible(tmp_path):
    rows = report.compute_table()
    digests = []
    for name in ("a.png", "b.png"):
        report.render_table_figure(rows, str(tmp_path / name))
        digests.append(hashlib.sha256((tmp_path / name).read_bytes()).hexdigest())
    assert digests[0] == digests[1]
