"""CSV files for optimization history and design fields."""
import csv
from typing import List, Optional, Tuple

import numpy as np

from .descent import IterationRecord


def _open_with_header(path, header: Optional[str]):
    f = open(path, "w", encoding="utf-8", newline="")
    if header:
        f.write(f"# {header}\n")
    return f


def write_history_csv(path, history: List[IterationRecord], header: Optional[str] = None) -> None:
    names = sorted({k for rec in history for k in rec.components})
    with _open_with_header(path, header) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iteration", "objective"] + names + ["max_change", "step"])
        for rec in history:
            writer.writerow([rec.iteration, f"{rec.objective:.12g}"]
                            + [f"{rec.components[n]:.12g}" if n in rec.components else "" for n in names]
                            + [f"{rec.max_change:.12g}", f"{rec.step:.12g}"])


def write_design_csv(path, elements: np.ndarray, design: np.ndarray, header: Optional[str] = None) -> None:
    with _open_with_header(path, header) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["element", "k11", "k22"])
        for element, (k11, k22) in zip(elements, design):
            writer.writerow([int(element), f"{k11:.12g}", f"{k22:.12g}"])


def read_design_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    """Element ids and (n, 2) values; comment lines starting with '#' are skipped."""
    elements, values = [], []
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = csv.reader(line for line in f if not line.startswith("#"))
        header = next(rows, None)
        if header != ["element", "k11", "k22"]:
            raise ValueError(f"{path}: expected header element,k11,k22, got {header}")
        for row in rows:
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: malformed design row {row}")
            elements.append(int(row[0]))
            values.append((float(row[1]), float(row[2])))
    return np.array(elements, dtype=int), np.array(values, dtype=float).reshape(-1, 2)


def read_history_csv(path) -> List[dict]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(line for line in f if not line.startswith("#")))
