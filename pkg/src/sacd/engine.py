"""P-worker execution of the solvers, and the analytic cost model.

A :class:`WorkerGroup` fixes the worker count, the 1D partition and the
shared RNG seed.  :func:`run_distributed` splits the data accordingly and
runs the chosen solver body on every worker concurrently (see
:mod:`sacd.comm`).  Because every reduction is rounded exactly once, the
result does not depend on the worker count.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import lasso, svm
from .comm import allreduce_sum, run_spmd  # noqa: F401  (re-exported)
from .datasets import LabeledDataset, Partition, partition
from .errors import ConfigurationError


@dataclass(frozen=True)
class SolverSpec:
    name: str
    family: str  # "lasso" or "svm"
    accelerate: bool = False
    sa: bool = False
    unit_block: bool = False

    @property
    def axis(self):
        return "rows" if self.family == "lasso" else "cols"

    @property
    def baseline(self):
        """Name of the non-SA counterpart."""
        return self.name[3:] if self.sa else self.name


SOLVERS = {spec.name: spec for spec in (
    SolverSpec("cd", "lasso", unit_block=True),
    SolverSpec("bcd", "lasso"),
    SolverSpec("acccd", "lasso", accelerate=True, unit_block=True),
    SolverSpec("accbcd", "lasso", accelerate=True),
    SolverSpec("sa-cd", "lasso", sa=True, unit_block=True),
    SolverSpec("sa-bcd", "lasso", sa=True),
    SolverSpec("sa-acccd", "lasso", accelerate=True, sa=True, unit_block=True),
    SolverSpec("sa-accbcd", "lasso", accelerate=True, sa=True),
    SolverSpec("svm", "svm", unit_block=True),
    SolverSpec("sa-svm", "svm", sa=True, unit_block=True),
)}


def solver_spec(name) -> SolverSpec:
    try:
        return SOLVERS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None


@dataclass(frozen=True)
class WorkerGroup:
    P: int
    partition: Partition
    shared_seed: int = 0

    @classmethod
    def for_solver(cls, solver, dataset: LabeledDataset, P: int, seed: int = 0):
        return cls(P, partition(dataset, solver_spec(solver).axis, P), seed)


@dataclass
class RunConfig:
    H: int
    s: Optional[int] = None
    block_size: int = 1
    lam: float = 1.0
    loss: str = "L1"
    seed: int = 0
    log_every: int = 1
    callback: Optional[Callable] = None
    sampler_factory: Optional[Callable] = None
    record: bool = True


def build_problem(solver, dataset, config: RunConfig):
    spec = solver_spec(solver)
    if spec.family == "lasso":
        mu = 1 if spec.unit_block else config.block_size
        return lasso.LassoProblem(dataset, config.lam, mu)
    return svm.SvmProblem(dataset, config.lam, config.loss)


def run_distributed(solver, dataset: LabeledDataset, P: int, config: RunConfig,
                    group: Optional[WorkerGroup] = None):
    """Run ``solver`` on ``P`` workers; returns a :class:`SolveResult`.

    The result's ``stats`` carry the counted rounds/words of the whole group.
    """
    spec = solver_spec(solver)
    if group is None:
        group = WorkerGroup(P, partition(dataset, spec.axis, P), config.seed)
    if group.P != P or group.partition.num_workers != P:
        raise ConfigurationError("worker group size does not match P")
    if group.partition.axis != spec.axis:
        raise ConfigurationError(
            f"{solver} needs a {spec.axis} partition, got {group.partition.axis}")
    if spec.sa and config.s is None:
        raise ConfigurationError(f"{solver} requires an unroll depth s")
    s = config.s if spec.sa else None
    problem = build_problem(solver, dataset, config)

    if spec.family == "lasso":
        run = lasso.LassoRun(config.H, group.shared_seed, s, spec.accelerate,
                             config.log_every, config.callback, config.sampler_factory,
                             config.record)
        shards = lasso.make_shards(problem, P, group.partition)
        results, stats = run_spmd(lasso.lasso_worker, [(sh, run) for sh in shards])
        xs = [r.x for r in results]
        if any(not np.array_equal(xs[0], x) for x in xs[1:]):
            raise ConfigurationError("replicated solutions diverged between workers")
        x, state = xs[0], results[0].state
    else:
        run = svm.SvmRun(config.H, group.shared_seed, s, config.log_every,
                         config.callback, config.sampler_factory, config.record)
        shards = svm.make_shards(problem, P, group.partition)
        results, stats = run_spmd(svm.svm_worker, [(sh, run) for sh in shards])
        x = np.concatenate([r.x for r in results])
        state = svm.SvmState(results[0].state.alpha, x, results[0].state.h)
    return lasso.SolveResult(x, results[0].records, stats.snapshot(), state)


def expected_rounds(H, s=None):
    """Counted synchronizations of a run: ``H`` or ``ceil(H/s)``."""
    return H if s is None else -(-H // s)


def expected_words(solver, H, s=None, block_size=1):
    """Words moved by the counted rounds of a run (triangle + projections)."""
    spec = solver_spec(solver)
    mu = 1 if spec.unit_block else block_size
    nproj = {"lasso": 2 if spec.accelerate else 1, "svm": 1}[spec.family]
    steps = [1] * H if not spec.sa else [min(s, H - h) for h in range(0, H, s)]
    return sum(k * mu * (k * mu + 1) // 2 + nproj * k * mu for k in steps)


@dataclass(frozen=True)
class CostPrediction:
    F: float
    M: float
    L: float
    W: float


def predict_costs(algorithm, H, s, mu, P, m, n, f) -> CostPrediction:
    """Leading-order flops, memory, latency and bandwidth with unit constants.

    ``log P`` is floored at 1 so that single-worker runs still pay one
    synchronization per round, matching the round counter.
    """
    if not 0.0 < f <= 1.0:
        raise ConfigurationError("density must be in (0, 1]")
    if min(H, s, mu, P, m, n) <= 0:
        raise ConfigurationError("cost model parameters must be positive")
    spec = solver_spec(algorithm)
    logp = max(1.0, math.log2(P))
    if spec.family == "svm":
        # one sampled row per iteration; dot products run over the n columns
        mu, m, n = 1, n, m
    u = s if spec.sa else 1
    F = H * mu * mu * u * f * m / P + H * mu ** 3
    M = (f * m * n + m) / P + mu * mu * u * u + n
    L = H / u * logp
    W = H * u * mu * mu * logp
    return CostPrediction(F, M, L, W)
