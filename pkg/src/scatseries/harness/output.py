"""Result files: JSON summary, CSV tables with ``#`` metadata lines, run log."""
from __future__ import annotations

import csv
import json
import logging
import math
import platform
from pathlib import Path

import numpy as np

from ..profiles import PRNG_NAME


def versions():
    import pydantic
    import yaml

    from .. import __version__

    return {"scatseries": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "pydantic": pydantic.__version__, "pyyaml": yaml.__version__}


def metadata(config, extra=None):
    meta = {"config_hash": config.digest(), "seed": config.data.seed,
            "perturbation_seed": config.perturbation.seed, "prng": PRNG_NAME}
    meta.update({f"version.{k}": v for k, v in versions().items()})
    meta.update(extra or {})
    return meta


def jsonable(obj):
    """Recursively convert numpy values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_summary(path, summary):
    Path(path).write_text(json.dumps(jsonable(summary), indent=2, sort_keys=True) + "\n")


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, columns, rows, meta):
    """Write ``rows`` under a header row, preceded by ``# key: value`` lines."""
    with open(path, "w", newline="") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_table(path):
    """Inverse of :func:`write_table`: returns ``(meta, columns, rows)``; numbers parsed as float."""
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return meta, columns, rows


def attach_log(path):
    handler = logging.FileHandler(path, mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("scatseries")
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    return handler


def detach_log(handler):
    logging.getLogger("scatseries").removeHandler(handler)
    handler.close()
