import io
import json

import pytest

from dclkr.core.sweep import FINAL, RunRecord
from dclkr.storage import RecordStore
from dclkr.storage import analytics

HEADER = "algorithm,m,n,n0,seed,round,rmse,wall_ms"


def _records():
    return [
        RunRecord("dcl-kr", 10, 500, 50, 1, FINAL, 0.25),
        RunRecord("dcl-kr", 10, 500, 50, 1, 2, 0.3),
        RunRecord("central-krr", 10, 500, 50, 1, FINAL, 0.2, wall_ms=1.5),
    ]


def test_csv_header_and_canonical_order():
    store = RecordStore()
    store.extend(_records())
    out = io.StringIO()
    store.write_csv(out)
    lines = out.getvalue().splitlines()
    assert lines[0] == HEADER
    assert lines[1].startswith("central-krr,10,500,50,1,final,0.2,1.5")
    assert lines[2] == "dcl-kr,10,500,50,1,2,0.3,"
    assert lines[3] == "dcl-kr,10,500,50,1,final,0.25,"


def test_empty_store_still_writes_header():
    out = io.StringIO()
    RecordStore().write_csv(out)
    assert out.getvalue() == HEADER + "\n"


def test_csv_reads_back(tmp_path):
    store = RecordStore()
    store.extend(_records())
    path = tmp_path / "records.csv"
    store.write_csv(path)
    assert RecordStore.read_csv(path) == store.records()


def test_json_payload(tmp_path):
    store = RecordStore()
    for r in _records():
        store.append(r)
    store.set_metadata("alpha_n0", [1.0])
    path = tmp_path / "records.json"
    store.write_json(path, {"dcl-kr": {"slope": None}})
    payload = json.loads(path.read_text())
    assert payload["alpha_n0"] == [1.0]
    assert [r["algorithm"] for r in payload["records"]] == ["central-krr", "dcl-kr", "dcl-kr"]
    assert payload["records"][1]["round"] == 2
    assert payload["summary"] == {"dcl-kr": {"slope": None}}


def test_database_sink_roundtrip(tmp_path):
    pytest.importorskip("sqlalchemy")
    from sqlalchemy import create_engine, text

    url = f"sqlite:///{tmp_path / 'runs.db'}"
    try:
        assert analytics.init_database(url)
        analytics.create_tables()
        assert analytics.log_records(_records()) == 3
        with create_engine(url).connect() as conn:
            rows = conn.execute(text("SELECT algorithm, round, rmse FROM run_records ORDER BY id")).all()
        assert [(a, r) for a, r, _ in rows] == [("dcl-kr", "final"), ("dcl-kr", "2"), ("central-krr", "final")]
    finally:
        analytics.reset()


def test_database_sink_is_off_by_default():
    analytics.reset()
    assert analytics.log_records(_records()) == 0
    assert not analytics.init_database("")
