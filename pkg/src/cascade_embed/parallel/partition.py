"""Static ownership of nodes and cascades by workers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

STRATEGIES = ("block", "hash")


@dataclass(eq=False)
class WorkerPartition:
    """IDs owned by one worker, plus its ghost stores once the engine attaches them."""

    worker_id: int
    nodes: np.ndarray
    cascades: np.ndarray
    ghost_A: object = field(default=None, repr=False)
    ghost_M: object = field(default=None, repr=False)


def _assign(count: int, n_workers: int, strategy: str) -> list[np.ndarray]:
    ids = np.arange(count, dtype=np.int64)
    if strategy == "block":
        return np.array_split(ids, n_workers)
    return [ids[ids % n_workers == p] for p in range(n_workers)]


def partition_entities(node_count: int, cascade_count: int, n_workers: int,
                       strategy: str = "block") -> list[WorkerPartition]:
    """Split nodes and cascades across ``n_workers``.

    ``block`` gives each worker a contiguous ID range (upper/lower halves for
    two workers); ``hash`` assigns ``id mod n_workers``.
    """
    if n_workers < 1:
        raise ConfigError("n_workers must be >= 1")
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown partition strategy {strategy!r}; choose from {STRATEGIES}")
    if n_workers > max(node_count, cascade_count, 1):
        raise ConfigError(f"{n_workers} workers but only {max(node_count, cascade_count)} entities")
    nodes = _assign(node_count, n_workers, strategy)
    cascades = _assign(cascade_count, n_workers, strategy)
    return [WorkerPartition(p, nodes[p], cascades[p]) for p in range(n_workers)]


def owners(partitions: list[WorkerPartition], node_count: int, cascade_count: int):
    """``(proc_of_node, proc_of_cascade)`` lookup arrays."""
    node_owner = np.full(node_count, -1, dtype=np.int64)
    cascade_owner = np.full(cascade_count, -1, dtype=np.int64)
    for part in partitions:
        node_owner[part.nodes] = part.worker_id
        cascade_owner[part.cascades] = part.worker_id
    if (node_owner < 0).any() or (cascade_owner < 0).any():
        raise ConfigError("partitions do not cover every node and cascade")
    return node_owner, cascade_owner
