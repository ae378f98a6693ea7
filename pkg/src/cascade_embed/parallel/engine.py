"""Message-passing parallel SGA.

Each iteration runs two phases, A-update (node params pulled towards the
cascade params) then M-update (the transpose), in the same order as the
sequential trainer.  Inside a phase every worker

    (a) posts one message per (owned entity, remote worker that needs it),
    (b) applies the updates whose both endpoints it owns,
    (c) waits for its expected inbound messages, fills its ghost store and
        applies the remaining updates against the ghost copies.

Phases are separated by a barrier, so a ghost store is written exactly once
per iteration and no message from the next phase can be consumed early.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .._kernels import ascend_rows, build_csr
from ..cascades import Cascade
from ..errors import TrainingError, TransportError
from ..model import ModelParams, NegativeSamples
from ..trainer import (BipartiteGraph, StopRule, TrainConfig, TrainResult, bipartite_log_likelihood,
                       build_bipartite, init_params, prepare)
from .partition import WorkerPartition, owners, partition_entities
from .transport import CASCADE_PARAM, NODE_PARAM, ChannelTransport, ParamMessage, Transport

log = logging.getLogger(__name__)

PHASE_A = "A"  # update A_u from M_c; cascade params travel
PHASE_M = "M"  # update M_c from A_u; node params travel
PHASES = (PHASE_A, PHASE_M)

Observer = Callable[[int, int, str, str], None]


class GhostStore:
    """Read-only staging area for remote parameter vectors.

    Entries carry the iteration that filled them.  :meth:`values` is the only
    read path; it refuses (and counts) any read attempted before the store
    was sealed for the current iteration.
    """

    def __init__(self, ids: np.ndarray, m: int):
        self.ids = np.asarray(ids, dtype=np.int64)
        self.slot = {int(e): i for i, e in enumerate(self.ids)}
        self.array = np.zeros((len(self.ids), m))
        self.tags = np.full(len(self.ids), -1, dtype=np.int64)
        self.sealed = -1
        self.reads = 0
        self.early_reads = 0
        self.writes = 0

    def __len__(self):
        return len(self.ids)

    def write(self, msg: ParamMessage) -> None:
        try:
            i = self.slot[msg.entity_id]
        except KeyError:
            raise TransportError(f"unexpected {msg.kind} for entity {msg.entity_id}") from None
        if self.tags[i] == msg.iteration:
            raise TransportError(f"ghost entry {msg.entity_id} written twice in iteration {msg.iteration}")
        self.array[i] = msg.payload
        self.tags[i] = msg.iteration
        self.writes += 1

    def seal(self, iteration: int) -> None:
        missing = self.ids[self.tags != iteration]
        if len(missing):
            raise TransportError(f"ghost entries {missing[:5].tolist()} missing in iteration {iteration}")
        self.sealed = iteration

    def values(self, iteration: int) -> np.ndarray:
        self.reads += 1
        if self.sealed != iteration or (len(self.tags) and (self.tags != iteration).any()):
            self.early_reads += 1
            raise TransportError(f"ghost read before quiescence in iteration {iteration}")
        return self.array


@dataclass
class PhaseStats:
    worker: int
    iteration: int
    phase: str
    local_ms: float
    wait_ms: float
    remote_ms: float
    messages_sent: int
    messages_received: int


@dataclass
class MessagePlan:
    """Deduplicated sends: ``sends[phase][p]`` is a list of ``(entity_id, dst)``."""

    sends: dict
    expected: dict  # expected[phase][p] = number of inbound messages

    def total(self, phase: str | None = None) -> int:
        phases = PHASES if phase is None else (phase,)
        return sum(len(s) for ph in phases for s in self.sends[ph])


def _dedup_pairs(entity, dst):
    if not len(entity):
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(np.stack([entity, dst], axis=1), axis=0)


def plan_messages(partitions: Sequence[WorkerPartition], bg: BipartiteGraph) -> MessagePlan:
    """Who sends which owned vector to whom, one message per (entity, target worker)."""
    n = len(partitions)
    node_owner, cascade_owner = owners(list(partitions), bg.node_count, bg.cascade_count)
    u, c = bg.nodes, bg.cascades
    sends = {PHASE_A: [[] for _ in range(n)], PHASE_M: [[] for _ in range(n)]}
    expected = {PHASE_A: [0] * n, PHASE_M: [0] * n}
    # phase A: M_c travels to the owners of its nodes; phase M: A_u to the owners of its cascades
    for phase, ent, ent_owner, dst in ((PHASE_A, c, cascade_owner, node_owner[u]),
                                       (PHASE_M, u, node_owner, cascade_owner[c])):
        cross = ent_owner[ent] != dst
        for e, d in _dedup_pairs(ent[cross], dst[cross]).tolist():
            sends[phase][int(ent_owner[e])].append((e, d))
            expected[phase][d] += 1
    return MessagePlan(sends, expected)


class Worker:
    """Owns a slice of A and M and the CSR views restricted to its entities."""

    def __init__(self, part: WorkerPartition, bg: BipartiteGraph, node_owner, cascade_owner,
                 params: ModelParams, plan: MessagePlan):
        self.part = part
        self.p = p = part.worker_id
        m = params.m
        self.A = params.A[part.nodes].copy()
        self.M = params.M[part.cascades].copy()
        node_local = np.full(bg.node_count, -1, dtype=np.int64)
        node_local[part.nodes] = np.arange(len(part.nodes))
        cascade_local = np.full(bg.cascade_count, -1, dtype=np.int64)
        cascade_local[part.cascades] = np.arange(len(part.cascades))

        u, c, t = bg.nodes, bg.cascades, bg.times
        # phase A: rows are owned nodes, columns are cascades (local M or ghost M)
        mine = node_owner[u] == p
        local = mine & (cascade_owner[c] == p)
        remote = mine & ~local
        ghost_m_ids = np.unique(c[remote])
        part.ghost_M = GhostStore(ghost_m_ids, m)
        self.a_local = build_csr(node_local[u[local]], cascade_local[c[local]], t[local], len(part.nodes))
        self.a_remote = build_csr(node_local[u[remote]], np.searchsorted(ghost_m_ids, c[remote]),
                                  t[remote], len(part.nodes))
        # phase M: rows are owned cascades, columns are nodes (local A or ghost A)
        mine = cascade_owner[c] == p
        local = mine & (node_owner[u] == p)
        remote = mine & ~local
        ghost_a_ids = np.unique(u[remote])
        part.ghost_A = GhostStore(ghost_a_ids, m)
        self.m_local = build_csr(cascade_local[c[local]], node_local[u[local]], t[local], len(part.cascades))
        self.m_remote = build_csr(cascade_local[c[remote]], np.searchsorted(ghost_a_ids, u[remote]),
                                  t[remote], len(part.cascades))

        self.sends = {
            PHASE_A: [(int(cascade_local[e]), e, d) for e, d in plan.sends[PHASE_A][p]],
            PHASE_M: [(int(node_local[e]), e, d) for e, d in plan.sends[PHASE_M][p]],
        }
        self.expected = {ph: plan.expected[ph][p] for ph in PHASES}

    def run_phase(self, phase: str, iteration: int, alpha: float, clip: float, w: float,
                  transport: Transport, timeout: float, observer: Observer | None) -> PhaseStats:
        p = self.p
        if phase == PHASE_A:
            target, own_other, kind = self.A, self.M, CASCADE_PARAM
            local, remote, ghost = self.a_local, self.a_remote, self.part.ghost_M
        else:
            target, own_other, kind = self.M, self.A, NODE_PARAM
            local, remote, ghost = self.m_local, self.m_remote, self.part.ghost_A
        notify = observer or (lambda *args: None)

        # (a) asynchronous sends of owned vectors, each once per target worker
        for row, entity, dst in self.sends[phase]:
            transport.send(p, dst, ParamMessage(kind, entity, iteration, own_other[row].copy(), p))
        notify(p, iteration, phase, "sent")

        # (b) updates needing only owned parameters
        t0 = time.perf_counter()
        ascend_rows(target, own_other, local[0], local[1], local[2], w, alpha, clip)
        t1 = time.perf_counter()
        notify(p, iteration, phase, "local-done")

        # (c) wait for every expected inbound message, then remote updates
        for _ in range(self.expected[phase]):
            ghost.write(transport.recv(p, timeout))
        ghost.seal(iteration)
        t2 = time.perf_counter()
        notify(p, iteration, phase, "quiescent")
        if len(remote[1]):
            ascend_rows(target, ghost.values(iteration), remote[0], remote[1], remote[2], w, alpha, clip)
        t3 = time.perf_counter()
        if not np.isfinite(target).all():
            raise TrainingError(f"worker {p}: non-finite parameter in iteration {iteration}", iteration)
        return PhaseStats(p, iteration, phase, (t1 - t0) * 1e3, (t2 - t1) * 1e3, (t3 - t2) * 1e3,
                          len(self.sends[phase]), self.expected[phase])


@dataclass(eq=False)
class ParallelResult(TrainResult):
    partitions: list = field(default_factory=list)
    plan: MessagePlan | None = None
    stats: list = field(default_factory=list)


class ParallelEngine:
    """Long-lived workers with static ownership, driven phase by phase."""

    def __init__(self, bg: BipartiteGraph, params: ModelParams, n_workers: int, strategy: str = "block",
                 transport: Transport | None = None, observer: Observer | None = None,
                 timeout: float = 60.0):
        self.bg = bg
        self.w = params.w
        self.T = params.T
        self.n_workers = n_workers
        self.partitions = partition_entities(bg.node_count, bg.cascade_count, n_workers, strategy)
        self.plan = plan_messages(self.partitions, bg)
        node_owner, cascade_owner = owners(self.partitions, bg.node_count, bg.cascade_count)
        self.workers = [Worker(part, bg, node_owner, cascade_owner, params, self.plan)
                        for part in self.partitions]
        self.transport = transport or ChannelTransport()
        self.transport.connect(n_workers)
        self.observer = observer
        self.timeout = timeout
        self.stats: list[PhaseStats] = []
        self._pool = ThreadPoolExecutor(max_workers=n_workers, thread_name_prefix="sga-worker")

    def close(self):
        self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def iteration(self, it: int, alpha: float, clip: float) -> list[PhaseStats]:
        out = []
        for phase in PHASES:
            futures = [self._pool.submit(wk.run_phase, phase, it, alpha, clip, self.w, self.transport,
                                         self.timeout, self.observer) for wk in self.workers]
            # the join is the inter-phase barrier
            errors = []
            for f in futures:
                try:
                    out.append(f.result())
                except Exception as exc:  # first error wins, but drain every worker
                    errors.append(exc)
            if errors:
                raise errors[0]
            if self.observer is not None:
                self.observer(-1, it, phase, "barrier")
        self.stats.extend(out)
        return out

    def gather(self) -> ModelParams:
        m = self.workers[0].A.shape[1] if self.workers else 0
        A = np.empty((self.bg.node_count, m))
        M = np.empty((self.bg.cascade_count, m))
        for wk in self.workers:
            A[wk.part.nodes] = wk.A
            M[wk.part.cascades] = wk.M
        return ModelParams(A, M, self.w, self.T)


def parallel_train(cascades: Sequence[Cascade], config: TrainConfig, n_workers: int,
                   strategy: str = "block", node_count: int | None = None,
                   negatives: NegativeSamples | None = None, transport: Transport | None = None,
                   observer: Observer | None = None, timeout: float = 60.0,
                   callback=None) -> ParallelResult:
    """Distributed-memory SGA over ``n_workers`` in-process workers.

    With one worker the sequence of floating-point operations is exactly that
    of :func:`cascade_embed.trainer.train`.
    """
    start = time.perf_counter()
    negatives, bg, params = prepare(cascades, config, node_count, negatives)
    trace = [bipartite_log_likelihood(bg, params)]
    stop = StopRule(config)
    it = 0
    with ParallelEngine(bg, params, n_workers, strategy, transport, observer, timeout) as engine:
        for it in range(1, config.iterations + 1):
            try:
                engine.iteration(it, config.stepsize(it - 1), config.clip_value)
            except TrainingError as exc:
                raise TrainingError(f"non-finite parameter after iteration {it}", it) from exc
            params = engine.gather()
            trace.append(bipartite_log_likelihood(bg, params))
            if callback is not None:
                callback(it, params)
            if stop.update(trace[-2], trace[-1]):
                break
        params = engine.gather()
        return ParallelResult(params, trace, negatives, bg, it, time.perf_counter() - start,
                              partitions=engine.partitions, plan=engine.plan, stats=engine.stats)


@dataclass
class BenchmarkReport:
    n_workers: int
    wall_ms: float
    rows: list  # PhaseStats
    edges: int

    @property
    def messages(self) -> int:
        return sum(r.messages_sent for r in self.rows)

    def csv_rows(self):
        for r in self.rows:
            yield (self.n_workers, r.iteration, r.phase, f"{r.local_ms + r.remote_ms:.6f}",
                   f"{r.wait_ms:.6f}", r.messages_sent, r.worker)


def benchmark_iteration(cascades: Sequence[Cascade], config: TrainConfig, n_workers: int,
                        strategy: str = "block", node_count: int | None = None,
                        negatives: NegativeSamples | None = None, repeats: int = 1) -> BenchmarkReport:
    """Wall time of one full parallel iteration with per-worker phase breakdown.

    The best of ``repeats`` runs (each from the same initial parameters) is kept.
    """
    if not cascades:
        node_count = node_count or n_workers
        bg = build_bipartite([], NegativeSamples([], config.d), config.T or 1.0, node_count)
        params = init_params(node_count, 0, config, config.T or 1.0)
    else:
        negatives, bg, params = prepare(cascades, config, node_count, negatives)
    best = None
    for _ in range(max(1, repeats)):
        with ParallelEngine(bg, params.copy(), n_workers, strategy) as engine:
            t0 = time.perf_counter()
            rows = engine.iteration(1, config.stepsize(0), config.clip_value)
            wall = (time.perf_counter() - t0) * 1e3
        if best is None or wall < best.wall_ms:
            best = BenchmarkReport(n_workers, wall, rows, bg.n_edges)
    return best
