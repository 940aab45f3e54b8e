import csv
import math
from typing import Iterable, Sequence

from pydantic import BaseModel


def _cell(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if value is None:
        return ""
    return value


def write_csv(path, rows: Sequence[BaseModel]):
    """One header row from the first model's fields, then one line per model."""
    if not rows:
        raise ValueError("no rows to write")
    fields = list(type(rows[0]).model_fields)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(v) for k, v in row.model_dump().items()})


def write_jsonl(path, rows: Iterable[BaseModel]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(row.model_dump_json() + "\n")
            count += 1
    return count


def format_table(rows: Sequence[BaseModel]) -> str:
    """Plain aligned text table for terminal output."""
    if not rows:
        return ""
    fields = list(type(rows[0]).model_fields)
    cells = [[str(_cell(v)) if not isinstance(v, float) else f"{v:.6g}"
              for v in row.model_dump().values()] for row in rows]
    widths = [max(len(f), *(len(c[i]) for c in cells)) for i, f in enumerate(fields)]
    lines = ["  ".join(f.ljust(w) for f, w in zip(fields, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)
