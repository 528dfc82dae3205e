"""
RVE property database: build, persist and query.

Records are indexed by the lexicographic order of the first (t1, t2, t3) that
generates each distinct pixel grid. Property queries use the L1 distance in
(k11, k22) space and break ties by the smallest index.
"""
import csv
import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from functools import cached_property
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ..homogenization import PixelCell, SymmetryViolationError, homogenize
from ..homogenization.cell import ORTHOTROPY_TOL
from .rve import DEFAULT_CELL_SIZE, RveParams, RveRecord, canonical, generate_pixels

logger = logging.getLogger(__name__)

PROPERTY_FILE = "properties.csv"
GEOMETRY_FILE = "geometry.bin"
CSV_HEADER = ["index", "t1", "t2", "t3", "k11", "k22", "vf"]
REFERENCE_UNIQUE_COUNT = 8282
TIE_TOL = 1e-9


class DatabaseError(Exception):
    pass


class DatabaseParseError(DatabaseError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RveDatabase:
    def __init__(self, n: int, records: List[RveRecord], geometry: np.ndarray, generated: Optional[int] = None):
        geometry = np.asarray(geometry, dtype=np.uint8)
        if len(records) != geometry.shape[0]:
            raise DatabaseError(f"{len(records)} records but {geometry.shape[0]} geometries")
        for pos, rec in enumerate(records):
            if rec.index != pos:
                raise DatabaseError(f"record at position {pos} carries index {rec.index}")
        self.n = n
        self.records = records
        self.geometry = geometry
        self.generated = generated

    def __len__(self):
        return len(self.records)

    def __getitem__(self, index: int) -> RveRecord:
        return self.records[index]

    @cached_property
    def properties(self) -> np.ndarray:
        return np.array([[r.k11, r.k22] for r in self.records], dtype=float).reshape(-1, 2)

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.properties)

    def cell(self, index: int) -> PixelCell:
        if not 0 <= index < len(self.records):
            raise DatabaseError(f"no geometry stored for index {index}")
        return PixelCell.from_packed(self.geometry[index].tobytes(), self.n)

    def _require_records(self):
        if not self.records:
            raise DatabaseError("database is empty")

    def nearest_indices(self, targets) -> Tuple[np.ndarray, np.ndarray]:
        """Index and L1 distance of the best record for every (k11, k22) target row."""
        self._require_records()
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        dist, _ = self.tree.query(targets, k=1, p=1)
        candidates = self.tree.query_ball_point(targets, r=np.asarray(dist) + TIE_TOL, p=1)
        props = self.properties
        best = np.empty(len(targets), dtype=int)
        best_dist = np.empty(len(targets))
        for row, cand in enumerate(candidates):
            cand = np.sort(np.asarray(cand, dtype=int))
            exact = np.abs(props[cand, 0] - targets[row, 0]) + np.abs(props[cand, 1] - targets[row, 1])
            pick = int(np.argmin(exact))
            best[row] = cand[pick]
            best_dist[row] = exact[pick]
        return best, best_dist

    def nearest(self, k11: float, k22: float) -> RveRecord:
        idx, _ = self.nearest_indices([[k11, k22]])
        return self.records[int(idx[0])]

    def nearest_bruteforce(self, k11: float, k22: float) -> RveRecord:
        self._require_records()
        props = self.properties
        exact = np.abs(props[:, 0] - k11) + np.abs(props[:, 1] - k22)
        return self.records[int(np.argmin(exact))]

    def ranges(self) -> dict:
        self._require_records()
        vf = np.array([r.vf for r in self.records])
        props = self.properties
        return {
            "k11": (float(props[:, 0].min()), float(props[:, 0].max())),
            "k22": (float(props[:, 1].min()), float(props[:, 1].max())),
            "vf": (float(vf.min()), float(vf.max())),
        }


def nearest(db: RveDatabase, target_k11: float, target_k22: float) -> RveRecord:
    return db.nearest(target_k11, target_k22)


def enumerate_unique_cells(n: int) -> Tuple[int, List[Tuple[RveParams, PixelCell]]]:
    """All (t1, t2, t3) in lexicographic order, keeping the first generator of each grid."""
    seen = set()
    unique = []
    generated = 0
    for t1, t2, t3 in itertools.product(range(n // 2 + 1), repeat=3):
        params = RveParams(t1, t2, t3)
        cell = generate_pixels(params, n)
        generated += 1
        key = cell.packed()
        if key in seen:
            continue
        seen.add(key)
        unique.append((params, cell))
    return generated, unique


def _homogenize_packed(job):
    packed, n = job
    return homogenize(PixelCell.from_packed(packed, n), check_orthotropic=False)


def build_database(n: int = DEFAULT_CELL_SIZE, workers: Optional[int] = None,
                   progress: Optional[Callable[[int, int], None]] = None) -> RveDatabase:
    if n < 2 or n % 2:
        raise ValueError(f"cell size must be a positive even number, got {n}")
    generated, unique = enumerate_unique_cells(n)
    logger.info("Generated %d (t1, t2, t3) cells for n=%d, %d unique", generated, n, len(unique))
    if n == DEFAULT_CELL_SIZE and len(unique) != REFERENCE_UNIQUE_COUNT:
        logger.warning("Unique cell count %d differs from the reference count %d for n=%d",
                       len(unique), REFERENCE_UNIQUE_COUNT, n)

    jobs = [(cell.packed(), n) for _, cell in unique]
    workers = workers or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tensors = pool.map(_homogenize_packed, jobs, chunksize=max(1, len(jobs) // (workers * 16)))
            tensors = list(tensors)
    else:
        tensors = []
        for done, job in enumerate(jobs, 1):
            tensors.append(_homogenize_packed(job))
            if done % 1000 == 0:
                logger.info("Homogenized %d / %d cells", done, len(jobs))
                if progress:
                    progress(done, len(jobs))

    records = []
    for index, ((params, cell), tensor) in enumerate(zip(unique, tensors)):
        if abs(tensor[0, 1]) > ORTHOTROPY_TOL:
            raise SymmetryViolationError(
                f"cell {params.as_tuple()} has off-diagonal conductivity {tensor[0, 1]:.3e}",
                tensor=tensor, params=params)
        records.append(RveRecord(
            index=index,
            params=params,
            k11=canonical(max(tensor[0, 0], 0.0)),
            k22=canonical(max(tensor[1, 1], 0.0)),
            vf=canonical(cell.volume_fraction),
        ))
    geometry = np.array([np.frombuffer(job[0], dtype=np.uint8) for job in jobs], dtype=np.uint8)
    return RveDatabase(n, records, geometry.reshape(len(jobs), -1), generated=generated)


def save(db: RveDatabase, path) -> None:
    """Write properties.csv and geometry.bin into directory `path`."""
    os.makedirs(path, exist_ok=True)
    csv_path = os.path.join(path, PROPERTY_FILE)
    tmp_path = csv_path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in db.records:
            writer.writerow([r.index, r.params.t1, r.params.t2, r.params.t3,
                             f"{r.k11:.9g}", f"{r.k22:.9g}", f"{r.vf:.9g}"])
    os.replace(tmp_path, csv_path)

    geo_path = os.path.join(path, GEOMETRY_FILE)
    with open(geo_path + ".tmp", "wb") as f:
        f.write(f"RVEBITS {db.n} {len(db)}\n".encode("ascii"))
        f.write(db.geometry.tobytes())
    os.replace(geo_path + ".tmp", geo_path)


def _read_geometry(path) -> Tuple[int, np.ndarray]:
    with open(path, "rb") as f:
        header = f.readline().decode("ascii", errors="replace").split()
        if len(header) != 3 or header[0] != "RVEBITS":
            raise DatabaseParseError(f"bad geometry header {' '.join(header)!r}", 1)
        n, count = int(header[1]), int(header[2])
        nbytes = (n * n + 7) // 8
        data = f.read()
    if len(data) != count * nbytes:
        raise DatabaseError(f"geometry file holds {len(data)} bytes, expected {count * nbytes}")
    return n, np.frombuffer(data, dtype=np.uint8).reshape(count, nbytes)


def load(path) -> RveDatabase:
    csv_path = os.path.join(path, PROPERTY_FILE)
    if not os.path.exists(csv_path):
        raise DatabaseError(f"no property file at {csv_path}")
    records = []
    with open(csv_path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise DatabaseParseError(f"expected header {','.join(CSV_HEADER)}, got {header}", 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DatabaseParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}: {row}", line)
            try:
                index, t1, t2, t3 = (int(v) for v in row[:4])
                k11, k22, vf = (float(v) for v in row[4:])
            except ValueError as e:
                raise DatabaseParseError(f"malformed value ({e})", line)
            records.append(RveRecord(index=index, params=RveParams(t1, t2, t3), k11=k11, k22=k22, vf=vf))
    n, geometry = _read_geometry(os.path.join(path, GEOMETRY_FILE))
    return RveDatabase(n, records, geometry)
