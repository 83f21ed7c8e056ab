"""File formats: CSV with a metadata header line, array images, JSON receipts.

All files are UTF-8 with LF line endings. Floats in CSV cells are written in
scientific notation in SI base units.
"""
from __future__ import annotations

import csv
import enum
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tdcim.array import OpReceipt, TdCimArray


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12e}"
    return str(value)


def _meta_value(v) -> str:
    if isinstance(v, enum.Enum):
        return str(v.value)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_meta_value(x) for x in v)
    return str(v).replace(" ", "_")


def metadata_line(meta: dict) -> str:
    return "# " + " ".join(f"{k}={_meta_value(v)}" for k, v in meta.items())


def write_csv(path, columns: Sequence[str], rows: Iterable, meta: dict | None = None) -> Path:
    """Write rows (sequences or dicts keyed by column) after an optional ``# k=v ...`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if meta is not None:
            fh.write(metadata_line(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else row
            w.writerow([fmt(v) for v in vals])
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Inverse of :func:`write_csv`: (metadata, rows as string dicts)."""
    meta = {}
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if first.startswith("# "):
            for item in first[2:].split():
                k, _, v = item.partition("=")
                meta[k] = v
        else:
            fh.seek(0)
        return meta, list(csv.DictReader(fh))


def write_json(path, data, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if meta is not None:
        data = {"meta": meta, **data}
    path.write_text(json.dumps(data, indent=1, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_waveform(path, times, voltages, meta: dict | None = None, stride: int = 1) -> Path:
    """Long-format waveform: one row per (time, stage)."""
    v = np.asarray(voltages)
    rows = ((t, i + 1, v[k, i]) for k, t in list(enumerate(times))[::stride] for i in range(v.shape[1]))
    return write_csv(path, ["time_s", "stage_index", "voltage_v"], rows, meta)


def write_delay_sweep(path, n_active, t_rise, t_fall, t_total, meta: dict | None = None) -> Path:
    rows = zip(n_active, t_rise, t_fall, t_total)
    return write_csv(path, ["n_active", "t_rise_s", "t_fall_s", "t_total_s"], rows, meta)


def write_array_image(path, bits) -> Path:
    bits = np.asarray(bits, dtype=np.uint8)
    lines = [f"{bits.shape[0]} {bits.shape[1]}"] + ["".join(str(b) for b in row) for row in bits]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_array_image(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty array image")
    rows, cols = (int(x) for x in lines[0].split())
    body = lines[1:]
    if len(body) != rows or any(len(ln) != cols or set(ln) - {"0", "1"} for ln in body):
        raise ValueError(f"{path}: expected {rows} lines of {cols} '0'/'1' characters")
    return np.array([[int(ch) for ch in ln] for ln in body], dtype=np.uint8)


def load_array_image(path, array: TdCimArray, rng: np.random.Generator) -> TdCimArray:
    return array.write(read_array_image(path), rng)


def receipt_json(receipt: OpReceipt) -> str:
    return json.dumps(receipt.to_dict(), indent=1) + "\n"
