"""File formats and random instance generators.

Edge lists are whitespace-separated "u v [w]" lines with '#' comments;
vertex labels are non-negative integers densified to 0..n-1 in first-seen
order (u before v within a line). Sensor readings are CSV with an
auto-detected optional header row.
"""

import csv

import numpy as np

from .objectives import DirectedGraph


class DataFormatError(ValueError):
    """An input file exists but cannot be parsed."""


def load_edge_list(path) -> DirectedGraph:
    """Parse a directed edge list into a dense-labeled graph.

    Raises DataFormatError with the offending line number for malformed
    lines, and for files containing no edges at all. Duplicate edges
    collapse. A third per-line field must be numeric and is ignored.
    """
    labels = {}
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise DataFormatError(
                    f"{path}:{line_no}: expected 'u v' or 'u v w', got {len(parts)} fields")
            try:
                u_label = int(parts[0])
                v_label = int(parts[1])
            except ValueError:
                raise DataFormatError(
                    f"{path}:{line_no}: endpoints must be integers") from None
            if u_label < 0 or v_label < 0:
                raise DataFormatError(
                    f"{path}:{line_no}: node ids must be non-negative")
            if len(parts) == 3:
                try:
                    float(parts[2])
                except ValueError:
                    raise DataFormatError(
                        f"{path}:{line_no}: edge weight must be numeric") from None
            for label in (u_label, v_label):
                if label not in labels:
                    labels[label] = len(labels)
            edges.append((labels[u_label], labels[v_label]))
    if not edges:
        raise DataFormatError(f"{path}: no edges found")
    return DirectedGraph(len(labels), edges)


def write_edge_list(graph: DirectedGraph, path) -> None:
    """Write one 'u v' line per edge, in sorted edge order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def load_readings(path) -> np.ndarray:
    """Parse a CSV of sensor readings into a float64 (rows, columns) array.

    A header row is detected by any first-line cell failing float
    conversion and is skipped. Blank rows are skipped. Ragged or
    non-numeric data rows raise DataFormatError with the row number.
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        first_data_seen = False
        for row_no, cells in enumerate(reader, start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if not first_data_seen:
                first_data_seen = True
                try:
                    [float(c) for c in cells]
                except ValueError:
                    continue  # header row
            try:
                values = [float(c) for c in cells]
            except ValueError:
                raise DataFormatError(
                    f"{path}:{row_no}: non-numeric value in data row") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise DataFormatError(
                    f"{path}:{row_no}: expected {width} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows found")
    return np.asarray(rows, dtype=np.float64)


def random_gnm_graph(n: int, m: int, rng) -> DirectedGraph:
    """Uniform random directed graph with exactly m distinct edges, no self-loops."""
    if n < 2:
        raise ValueError("need n >= 2")
    slots = n * (n - 1)
    if not 1 <= m <= slots:
        raise ValueError(f"m must be in [1, {slots}] for n={n}")
    picks = rng.choice(slots, size=m, replace=False)
    edges = []
    for idx in picks.tolist():
        u, r = divmod(idx, n - 1)
        edges.append((u, r + (r >= u)))
    return DirectedGraph(n, edges)


def random_powerlaw_graph(n: int, exponent: float, rng) -> DirectedGraph:
    """Random directed graph with heavy-tailed out-degrees.

    Each vertex draws its out-degree from a zipf(exponent) distribution
    clipped to n - 1 and picks that many distinct out-neighbors uniformly.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if exponent <= 1.0:
        raise ValueError("exponent must be > 1")
    degrees = np.minimum(rng.zipf(exponent, size=n), n - 1)
    edges = []
    for v in range(n):
        d = int(degrees[v])
        if d == 0:
            continue
        picks = rng.choice(n - 1, size=d, replace=False)
        for r in picks.tolist():
            edges.append((v, r + (r >= v)))
    return DirectedGraph(n, edges)
