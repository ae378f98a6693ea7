"""Text file formats for graphs, cascades, embeddings and CSV reports.

Every writer goes through :func:`atomic_write` (temp file + rename), and
every parser reports failures as ``DataFormatError`` naming file and line.
"""

from __future__ import annotations

import csv
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cascades import Cascade
from .errors import CascadeEmbedError, DataFormatError
from .graph import Graph, graph_from_labels
from .model import ModelParams


@contextmanager
def atomic_write(path):
    """Yield a text handle; the file appears at ``path`` only if the block succeeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _lines(path):
    """``(line_no, tokens)`` for non-blank, non-comment lines."""
    try:
        with open(path) as fh:
            for no, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if line:
                    yield no, line.split()
    except OSError as e:
        raise DataFormatError(f"cannot read: {e.strerror}", str(path), 0) from e


def _num(tok, kind, path, no):
    try:
        return kind(tok)
    except ValueError:
        raise DataFormatError(f"expected {kind.__name__}, got {tok!r}", str(path), no) from None


# -- graph -------------------------------------------------------------------

def write_graph(g: Graph, path) -> None:
    with atomic_write(path) as fh:
        fh.write(f"nodes {g.node_count}\n")
        for u, c in enumerate(g.community_of.tolist()):
            fh.write(f"label {u} {c}\n")
        for u, v in g.edges.tolist():
            fh.write(f"edge {u} {v}\n")


def read_graph(path) -> Graph:
    n = None
    labels, edges = {}, []
    for no, tok in _lines(path):
        head = tok[0]
        if head == "nodes" and len(tok) == 2 and n is None:
            n = _num(tok[1], int, path, no)
            if n < 0:
                raise DataFormatError("node count must be >= 0", str(path), no)
        elif head in ("label", "edge") and len(tok) == 3:
            if n is None:
                raise DataFormatError("'nodes' header must come first", str(path), no)
            a, b = _num(tok[1], int, path, no), _num(tok[2], int, path, no)
            if not 0 <= a < n or (head == "edge" and not 0 <= b < n):
                raise DataFormatError("node id out of range", str(path), no)
            if head == "label":
                labels[a] = b
            else:
                if a == b:
                    raise DataFormatError("self-loop", str(path), no)
                edges.append((min(a, b), max(a, b)))
        else:
            raise DataFormatError(f"unrecognised line {' '.join(tok)!r}", str(path), no)
    if n is None:
        raise DataFormatError("missing 'nodes' header", str(path), 0)
    if len(labels) != n:
        raise DataFormatError(f"{n - len(labels)} nodes lack a label", str(path), 0)
    edges = np.unique(np.array(edges, dtype=np.int64).reshape(-1, 2), axis=0)
    try:
        return graph_from_labels([labels[u] for u in range(n)], edges)
    except CascadeEmbedError as e:
        raise DataFormatError(str(e), str(path), 0) from e


# -- cascades ----------------------------------------------------------------

def write_cascades(cascades: Iterable[Cascade], path) -> None:
    with atomic_write(path) as fh:
        for c in cascades:
            fh.write(f"cascade {c.cascade_id}\n")
            for u, t in zip(c.nodes.tolist(), c.times.tolist()):
                fh.write(f"inf {u} {t!r}\n")


def read_cascades(path) -> list[Cascade]:
    out, cur, start = [], None, 0

    def close():
        if cur is not None:
            try:
                out.append(Cascade.from_pairs(cur[0], cur[1]))
            except CascadeEmbedError as e:
                raise DataFormatError(str(e), str(path), start) from e

    seen = set()
    for no, tok in _lines(path):
        if tok[0] == "cascade" and len(tok) == 2:
            close()
            cid = _num(tok[1], int, path, no)
            if cid in seen:
                raise DataFormatError(f"duplicate cascade id {cid}", str(path), no)
            seen.add(cid)
            cur, start = (cid, []), no
        elif tok[0] == "inf" and len(tok) == 3:
            if cur is None:
                raise DataFormatError("'inf' before any 'cascade' line", str(path), no)
            u, t = _num(tok[1], int, path, no), _num(tok[2], float, path, no)
            if u < 0 or not np.isfinite(t) or t < 0:
                raise DataFormatError("node must be >= 0 and time finite and >= 0", str(path), no)
            cur[1].append((u, t))
        else:
            raise DataFormatError(f"unrecognised line {' '.join(tok)!r}", str(path), no)
    close()
    return out


# -- embeddings --------------------------------------------------------------

def write_embeddings(params: ModelParams, path, cascade_ids: Sequence[int] | None = None) -> None:
    """Header ``embeddings <nodes> <cascades> <m> <w> <T>``, then ``A``/``M`` rows."""
    ids = range(len(params.M)) if cascade_ids is None else cascade_ids
    with atomic_write(path) as fh:
        fh.write(f"embeddings {len(params.A)} {len(params.M)} {params.m} {params.w!r} {params.T!r}\n")
        for u, row in enumerate(params.A.tolist()):
            fh.write(f"A {u} " + " ".join(repr(x) for x in row) + "\n")
        for c, row in zip(ids, params.M.tolist()):
            fh.write(f"M {c} " + " ".join(repr(x) for x in row) + "\n")


def read_embeddings(path) -> tuple[ModelParams, list[int]]:
    """Parameters and the cascade ID of each ``M`` row, in file order."""
    header = None
    A_rows, M_rows, ids = {}, [], []
    for no, tok in _lines(path):
        if header is None:
            if tok[0] != "embeddings" or len(tok) != 6:
                raise DataFormatError("expected 'embeddings n_nodes n_cascades m w T'", str(path), no)
            n, k, m = (_num(x, int, path, no) for x in tok[1:4])
            w, T = _num(tok[4], float, path, no), _num(tok[5], float, path, no)
            header = (n, k, m, w, T)
            continue
        if tok[0] not in ("A", "M") or len(tok) != header[2] + 2:
            raise DataFormatError(f"expected 'A id' or 'M id' and {header[2]} values", str(path), no)
        i = _num(tok[1], int, path, no)
        vec = [_num(x, float, path, no) for x in tok[2:]]
        if tok[0] == "A":
            if not 0 <= i < header[0] or i in A_rows:
                raise DataFormatError(f"bad or repeated node row {i}", str(path), no)
            A_rows[i] = vec
        else:
            M_rows.append(vec)
            ids.append(i)
    if header is None:
        raise DataFormatError("empty embedding file", str(path), 0)
    n, k, m, w, T = header
    if len(A_rows) != n or len(M_rows) != k:
        raise DataFormatError(f"expected {n} A rows and {k} M rows", str(path), 0)
    A = np.array([A_rows[u] for u in range(n)], dtype=np.float64).reshape(n, m)
    M = np.array(M_rows, dtype=np.float64).reshape(k, m)
    try:
        return ModelParams(A, M, w, T), ids
    except CascadeEmbedError as e:
        raise DataFormatError(str(e), str(path), 1) from e


# -- CSV ---------------------------------------------------------------------

def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataFormatError(f"cannot read: {e.strerror}", str(path), 0) from e
    if not rows:
        raise DataFormatError("empty CSV", str(path), 0)
    return rows[0], rows[1:]


def write_trace(trace: Sequence[float], path) -> None:
    write_csv(path, ["iteration", "loglik"], ((i, float(v)) for i, v in enumerate(trace)))


def write_distance_matrix(D: np.ndarray, path) -> None:
    n = len(D)
    write_csv(path, ["node"] + [str(j) for j in range(n)],
              ([i] + [float(x) for x in D[i]] for i in range(n)))


def write_metrics(metrics: dict, path) -> None:
    write_csv(path, ["metric", "value"], metrics.items())


def write_feature_rows(rows, path) -> None:
    width = len(rows[0].features) if rows else 0
    write_csv(path, ["cascade_id", "label"] + [f"f{i}" for i in range(width)],
              ([r.cascade_id, r.label] + [float(x) for x in r.features] for r in rows))


def read_feature_rows(path):
    from .virality.features import FeatureRow

    header, rows = read_csv(path)
    if header[:2] != ["cascade_id", "label"]:
        raise DataFormatError("feature CSV must start with cascade_id,label", str(path), 1)
    out = []
    for no, row in enumerate(rows, 2):
        if len(row) != len(header):
            raise DataFormatError(f"expected {len(header)} fields", str(path), no)
        out.append(FeatureRow(_num(row[0], int, path, no), np.array([_num(x, float, path, no) for x in row[2:]]),
                              _num(row[1], int, path, no)))
    return out


def write_f1_grid(rows, path) -> None:
    write_csv(path, ["theta", "tau", "features", "f1", "mean_fold_f1", "n_viral"],
              ((r.theta, r.tau, r.features, r.f1, r.mean_fold_f1, r.n_viral) for r in rows))


def write_benchmark(reports, path) -> None:
    write_csv(path, ["workers", "iteration", "phase", "local_ms", "wait_ms", "messages_sent", "worker"],
              (row for rep in reports for row in rep.csv_rows()))

