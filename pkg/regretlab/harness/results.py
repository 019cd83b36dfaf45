#!/usr/bin/env python3
"""
Result rows and their CSV / JSON emission.

CSV floats carry 17 significant digits so every value reads back bit-exact;
booleans are written as true/false and missing or non-finite values as empty
cells.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from decologr import Logger as log

from regretlab import __version__


@dataclass
class ResultRow:
    """
    One grid row.

    :param experiment_id: Identifier from the config
    :param index: Position in grid order
    :param values: Inputs and computed scalars, in column order
    :param error: Error message when the row failed
    """

    experiment_id: str
    index: int
    values: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    def flags(self) -> Dict[str, bool]:
        """Boolean bound-satisfaction columns."""
        return {k: v for k, v in self.values.items() if isinstance(v, bool) and k.endswith("holds")}

    @property
    def violated(self) -> bool:
        return any(not v for v in self.flags().values())

    def as_record(self) -> Dict[str, Any]:
        return {"experiment_id": self.experiment_id, "row": self.index, **self.values, "error": self.error}


def columns(rows: Sequence[ResultRow]) -> List[str]:
    """Union of row columns in first-seen order, error last."""
    seen: Dict[str, None] = {"experiment_id": None, "row": None}
    for row in rows:
        for key in row.values:
            seen.setdefault(key, None)
    seen["error"] = None
    return list(seen)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def meta_line(config_dict: Optional[Dict[str, Any]] = None) -> str:
    parts = [f"# regretlab {__version__}"]
    if config_dict:
        parts.append(f"id={config_dict.get('id')} kind={config_dict.get('kind')} seed={config_dict.get('seed')}")
    return " ".join(parts)


def write_csv(
    rows: Sequence[ResultRow],
    path: Union[str, Path],
    meta: Optional[str] = None,
) -> Path:
    """
    Write rows as tidy CSV.

    :param rows: Rows in grid order
    :param path: Destination
    :param meta: Optional first line, written verbatim before the header
    :return: Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = columns(rows)
    with open(path, "w", newline="") as handle:
        if meta:
            handle.write(meta.rstrip("\n") + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            record = row.as_record()
            writer.writerow([format_cell(record.get(column)) for column in header])
    log.info(f"Wrote {len(rows)} rows to {path}")
    return path


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else str(value)
    return value


def rows_to_json(rows: Iterable[ResultRow], config_dict: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "config": config_dict,
        "rows": [{k: _json_safe(v) for k, v in row.as_record().items()} for row in rows],
    }


def write_json(
    rows: Sequence[ResultRow],
    path: Union[str, Path],
    config_dict: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(rows_to_json(rows, config_dict), indent=2) + "\n")
    log.info(f"Wrote {len(rows)} rows to {path}")
    return path
