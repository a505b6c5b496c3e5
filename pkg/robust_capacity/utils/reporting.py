"""
CSV and JSON artifacts of scenario runs.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
from pydantic import BaseModel

logger = logging.getLogger(__name__)

NATS_PER_BIT = float(np.log(2.0))

CSV_COLUMNS = [
    "sweep_param",
    "robust_capacity_nats",
    "nominal_capacity_nats",
    "upper_bound",
    "gap",
    "iterations",
    "wall_ms",
    "seed",
    "certified_gap",
    "constrained_capacity_nats",
    "lambda_star",
]

# columns holding an amount of information
INFORMATION_COLUMNS = (
    "robust_capacity_nats",
    "nominal_capacity_nats",
    "upper_bound",
    "gap",
    "certified_gap",
    "constrained_capacity_nats",
)


def nats_to_bits(value: float) -> float:
    return value / NATS_PER_BIT


def convert_units(row: Dict[str, Any], bits: bool) -> Dict[str, Any]:
    """Convert information columns to bits and rename *_nats columns to *_bits."""
    if not bits:
        return dict(row)
    converted = {}
    for key, value in row.items():
        if key in INFORMATION_COLUMNS and value is not None and value != "":
            value = nats_to_bits(value)
        if key.endswith("_nats"):
            key = key[: -len("_nats")] + "_bits"
        converted[key] = value
    return converted


def csv_columns(bits: bool) -> List[str]:
    return list(convert_units({c: None for c in CSV_COLUMNS}, bits))


def write_csv(path: Union[str, Path], rows: Iterable[Dict[str, Any]], bits: bool = False) -> Path:
    """
    Write result rows in sweep order.

    Missing values are written as empty cells; floats use repr precision so
    identical runs give identical files apart from wall_ms.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = csv_columns(bits)
    with path.open("w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            converted = convert_units(row, bits)
            writer.writerow({k: "" if converted.get(k) is None else converted[k] for k in columns})
    logger.info(f"Wrote {path}")
    return path


def write_json(path: Union[str, Path], payload: Union[BaseModel, Dict[str, Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = json.dumps(payload, indent=2)
    path.write_text(text)
    logger.debug(f"Wrote {path}")
    return path
