from .engine import (BenchmarkReport, GhostStore, MessagePlan, ParallelEngine, ParallelResult,
                     PhaseStats, benchmark_iteration, parallel_train, plan_messages)
from .partition import WorkerPartition, owners, partition_entities
from .transport import (ChannelTransport, InstrumentedTransport, ParamMessage, StalledTransport,
                        Transport)
