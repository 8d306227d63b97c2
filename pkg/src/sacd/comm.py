"""In-process message passing: workers, the allreduce collective, counters.

Each worker runs the solver body in its own thread and only exchanges data
through :meth:`Communicator.allreduce`.  Contributions are exact expansions
(:class:`sacd.kernels.Partials`); the combined value is rounded once, so the
result is bitwise the same for every worker count.

Counted rounds model solver synchronizations (the latency term).  Reductions
that only feed progress logging pass ``count=False`` and are tallied apart.
"""

import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ProtocolError


@dataclass
class CommStats:
    rounds: int = 0
    words: int = 0
    monitor_rounds: int = 0
    monitor_words: int = 0

    def snapshot(self):
        return CommStats(self.rounds, self.words, self.monitor_rounds, self.monitor_words)


def _as_partials(contribution):
    if isinstance(contribution, kernels.Partials):
        return contribution
    return kernels.value_partials(np.asarray(contribution, dtype=np.float64))


class _Rendezvous:
    """Shared meeting point of one worker group; the barrier action reduces."""

    def __init__(self, size, stats):
        self.size = size
        self.stats = stats
        self._slots = [None] * size
        self._result = None
        self._error = None
        self._barrier = threading.Barrier(size, action=self._combine)

    def _combine(self):
        self._result = None
        try:
            parts = [slot[0] for slot in self._slots]
            counted = {slot[1] for slot in self._slots}
            if len(counted) != 1:
                raise ProtocolError("workers disagree on whether the round is counted")
            sizes = {p.size for p in parts}
            if len(sizes) != 1:
                raise ProtocolError(f"contribution lengths differ: {sorted(sizes)}")
            result = kernels.reduce_partials(parts)
            result.setflags(write=False)
            if counted.pop():
                self.stats.rounds += 1
                self.stats.words += result.size
            else:
                self.stats.monitor_rounds += 1
                self.stats.monitor_words += result.size
            self._result = result
        except Exception as exc:  # noqa: BLE001 - re-raised on every rank
            self._error = exc
        finally:
            self._slots = [None] * self.size

    def exchange(self, rank, partials, count):
        if self._error is not None:
            raise ProtocolError("communicator failed earlier") from self._error
        self._slots[rank] = (partials, count)
        self._barrier.wait()
        if self._error is not None:
            raise self._error
        return self._result

    def abort(self):
        self._barrier.abort()


class Communicator:
    """One worker's handle on its group."""

    def __init__(self, rank, rendezvous):
        self.rank = rank
        self._rv = rendezvous

    @property
    def size(self):
        return self._rv.size

    @property
    def stats(self):
        return self._rv.stats

    def allreduce(self, contribution, count=True):
        """Sum contributions over all workers; every worker gets the result.

        The returned array is read-only and shared between workers.
        """
        return self._rv.exchange(self.rank, _as_partials(contribution), count)


def local_comm():
    """Single-worker communicator; collectives still count rounds."""
    return Communicator(0, _Rendezvous(1, CommStats()))


def make_group(size):
    rv = _Rendezvous(size, CommStats())
    return [Communicator(r, rv) for r in range(size)], rv.stats


def run_spmd(body, args_per_rank):
    """Run ``body(comm, *args)`` on every rank concurrently and collect results.

    If any rank fails the barrier is broken so the others stop, and the first
    original exception is re-raised.
    """
    size = len(args_per_rank)
    comms, stats = make_group(size)
    if size == 1:
        return [body(comms[0], *args_per_rank[0])], stats
    results = [None] * size
    errors = [None] * size

    def target(rank):
        try:
            results[rank] = body(comms[rank], *args_per_rank[rank])
        except BaseException as exc:  # noqa: BLE001
            errors[rank] = exc
            comms[rank]._rv.abort()

    threads = [threading.Thread(target=target, args=(r,), name=f"sacd-worker-{r}")
               for r in range(size)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    primary = [e for e in errors if e is not None and not isinstance(e, threading.BrokenBarrierError)]
    if primary:
        raise primary[0]
    if any(e is not None for e in errors):
        raise ProtocolError("worker group broke without a root cause") from errors[0]
    return results, stats


def allreduce_sum(contributions):
    """Reduce a list of per-worker arrays (or expansions) in one counted round.

    Returns ``(result, stats)``; each worker would hold ``result``.
    """
    contributions = list(contributions)

    def body(comm, contribution):
        return comm.allreduce(contribution)

    results, stats = run_spmd(body, [(c,) for c in contributions])
    return results[0], stats


class IndexSampler:
    """Per-worker index stream; equal seeds give equal selections everywhere."""

    def __init__(self, seed, population, block=1, replace=False):
        self.population = population
        self.block = block
        self.replace = replace
        self._rng = np.random.default_rng(seed)

    def draw(self):
        if self.replace:
            return self._rng.integers(0, self.population, size=self.block, dtype=np.int64)
        return self._rng.choice(self.population, size=self.block, replace=False).astype(np.int64)
