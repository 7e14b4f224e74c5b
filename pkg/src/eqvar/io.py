"""On-disk formats: data CSV, edge CSV, model JSON and ordering JSON.

All indices on disk are 1-based.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .edges import EstimatedGraph
from .sem import ErrorSpec, Ordering, SemModel, WeightedDag, validate_dag

EDGE_HEADER = ("src", "dst", "weight")


def write_data_csv(path, X: np.ndarray, header: bool = False) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"X{j + 1}" for j in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def read_data_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if rows and rows[0]:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    rows = [r for r in rows if r]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array([[float(v) for v in r] for r in rows])


def _edge_rows(B: np.ndarray):
    js, ks = np.nonzero(B)
    for k, j in sorted(zip(ks.tolist(), js.tolist())):
        yield k + 1, j + 1, repr(float(B[j, k]))


def write_edges_csv(path, graph) -> None:
    """Write ``src,dst,weight`` rows for a WeightedDag, EstimatedGraph or matrix."""
    if isinstance(graph, WeightedDag):
        B = graph.B
    elif isinstance(graph, EstimatedGraph):
        B = graph.adjacency
    else:
        B = np.asarray(graph, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        w.writerows(_edge_rows(B))


def read_edges_csv(path, p: int) -> np.ndarray:
    B = np.zeros((p, p))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != EDGE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(EDGE_HEADER)}")
        for row in reader:
            k, j = int(row["src"]) - 1, int(row["dst"]) - 1
            if not (0 <= k < p and 0 <= j < p):
                raise ValueError(f"{path}: edge {k + 1}->{j + 1} outside 1..{p}")
            B[j, k] = float(row["weight"])
    return B


def write_model(dirpath, model: SemModel, edges_name="edges.csv", meta_name="model.json") -> None:
    d = Path(dirpath)
    write_edges_csv(d / edges_name, model.dag)
    (d / meta_name).write_text(json.dumps(model.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_model(dirpath, edges_name="edges.csv", meta_name="model.json") -> SemModel:
    d = Path(dirpath)
    meta = json.loads((d / meta_name).read_text(encoding="utf-8"))
    B = read_edges_csv(d / edges_name, int(meta["p"]))
    errors = ErrorSpec.from_dict(meta.get("error", {"sigma2": meta["sigma2"]}))
    return SemModel(validate_dag(B), float(meta["sigma2"]), errors)


def write_ordering(path, ordering: Ordering | dict) -> None:
    d = ordering.to_dict() if isinstance(ordering, Ordering) else ordering
    Path(path).write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")


def read_ordering(path) -> Ordering:
    return Ordering.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
