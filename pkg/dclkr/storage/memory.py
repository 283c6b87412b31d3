"""In-memory run-record storage."""
import json
import threading
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, TextIO

import pandas as pd

from dclkr.core.errors import ConfigError
from dclkr.core.sweep import RunRecord

COLUMNS = ["algorithm", "m", "n", "n0", "seed", "round", "rmse", "wall_ms"]


class RecordStore:
    """Append-only list of RunRecords; reads always come back in canonical order."""

    def __init__(self):
        self._records: List[RunRecord] = []
        self._lock = threading.Lock()
        self._metadata: Dict[str, Any] = {}

    def __len__(self) -> int:
        return len(self._records)

    def append(self, record: RunRecord) -> None:
        with self._lock:
            self._records.append(record)

    def extend(self, records: Iterable[RunRecord]) -> None:
        with self._lock:
            self._records.extend(records)

    def set_metadata(self, key: str, value: Any) -> None:
        self._metadata[key] = value

    def records(self) -> List[RunRecord]:
        with self._lock:
            return sorted(self._records, key=RunRecord.sort_key)

    def to_frame(self) -> pd.DataFrame:
        rows = [asdict(r) for r in self.records()]
        frame = pd.DataFrame(rows, columns=COLUMNS)
        # Keep "final" and integer rounds in one text column.
        frame["round"] = frame["round"].astype(str)
        return frame

    def write_csv(self, out: str | Path | TextIO) -> None:
        self.to_frame().to_csv(out, index=False, lineterminator="\n", float_format="%.10g")

    def write_json(self, out: str | Path | TextIO, summary: Dict[str, Any] | None = None) -> None:
        payload = {
            **self._metadata,
            "records": [asdict(r) for r in self.records()],
            "summary": summary or {},
        }
        text = json.dumps(payload, indent=2, allow_nan=False)
        if isinstance(out, (str, Path)):
            Path(out).write_text(text + "\n")
        else:
            out.write(text + "\n")

    def write(self, out: str | Path | TextIO, fmt: str, summary: Dict[str, Any] | None = None) -> None:
        if fmt == "json":
            self.write_json(out, summary)
        else:
            self.write_csv(out)

    @staticmethod
    def read_csv(path: str | Path) -> List[RunRecord]:
        frame = pd.read_csv(path, dtype={"round": str}, keep_default_na=False, float_precision="round_trip")
        if list(frame.columns) != COLUMNS:
            raise ConfigError(f"Unexpected columns: {list(frame.columns)}")
        out = []
        for row in frame.itertuples(index=False):
            rnd = row.round if row.round == "final" else int(row.round)
            wall = None if row.wall_ms == "" else float(row.wall_ms)
            out.append(RunRecord(row.algorithm, int(row.m), int(row.n), int(row.n0),
                                 int(row.seed), rnd, float(row.rmse), wall))
        return out
