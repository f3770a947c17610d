"""Report serialization: one JSON record plus one flat CSV per experiment.

Identical config + seed reproduces the JSON byte for byte once the volatile
``meta`` block (timestamp, wall time) is stripped; everything else is either
deterministic or carries the solver diagnostics that justify it.
"""

import csv
import json
import os

from .errors import MetrocompError

__all__ = ["emit_report", "strip_volatile"]


def strip_volatile(record: dict) -> dict:
    out = dict(record)
    out.pop("meta", None)
    return out


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(record: dict, out_dir: str) -> dict:
    """Write report.json and <experiment>.csv; returns the file paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        json_path = os.path.join(out_dir, "report.json")
        with open(json_path, "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        csv_path = os.path.join(out_dir, f"{record['experiment']}.csv")
        header = record["csv_header"]
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in record["raw"]["rows"]:
                writer.writerow([_csv_value(row.get(k)) for k in header])
    except OSError as exc:
        raise MetrocompError(f"cannot write report: {exc}") from exc
    return {"json": json_path, "csv": csv_path}
