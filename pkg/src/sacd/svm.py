"""Dual coordinate descent for linear SVM-L1/L2 and its s-step form.

Primal: ``min_x 1/2 ||x||^2 + lam * sum_i loss(1 - b_i A_i x)`` with hinge
(L1) or squared hinge (L2) loss.  Dual: ``min_a 1/2 a^T Qbar a - e^T a``
subject to ``0 <= a_i <= nu`` where ``Qbar = Q + gamma I``; L1 uses
``gamma = 0, nu = lam`` and L2 uses ``gamma = 0.5/lam`` with no upper bound.

Workers own contiguous column blocks of ``A`` (and the matching slice of
``x``); the dual vector ``alpha`` and the labels are replicated.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import kernels
from ._loop import SolveResult, drive
from .comm import IndexSampler, local_comm, run_spmd
from .datasets import LabeledDataset, partition
from .errors import ConfigurationError, ContractError
from .matrix import SparseMatrixCSR, spmv, unpack_triangle
from .records import Recorder

LOSSES = ("L1", "L2")


@dataclass(frozen=True, eq=False)
class SvmProblem:
    data: LabeledDataset
    lam: float = 1.0
    loss: str = "L1"

    def __post_init__(self):
        loss = self.loss.upper()
        if loss not in LOSSES:
            raise ConfigurationError(f"loss must be L1 or L2, got {self.loss!r}")
        object.__setattr__(self, "loss", loss)
        if not self.lam > 0.0:
            raise ConfigurationError(f"lambda must be > 0, got {self.lam}")
        if not self.data.is_binary():
            raise ConfigurationError("SVM labels must all be -1 or +1")

    @property
    def gamma(self):
        return 0.0 if self.loss == "L1" else 0.5 / self.lam

    @property
    def nu(self):
        """Upper bound on each dual variable; ``None`` means unbounded."""
        return self.lam if self.loss == "L1" else None

    @property
    def m(self):
        return self.data.num_rows

    @property
    def n(self):
        return self.data.num_cols

    @cached_property
    def full_shard(self):
        return make_shards(self, 1)[0]


@dataclass
class SvmState:
    alpha: np.ndarray
    x: np.ndarray
    h: int = 0

    def copy(self):
        return SvmState(self.alpha.copy(), self.x.copy(), self.h)


@dataclass(eq=False)
class SvmShard:
    A: SparseMatrixCSR  # all rows, local column block
    labels: np.ndarray
    lam: float
    gamma: float
    nu: Optional[float]
    loss: str
    cols: tuple = (0, 0)


def make_shards(problem: SvmProblem, P: int, part=None):
    part = part or partition(problem.data, "cols", P)
    return [SvmShard(problem.data.A.col_block(lo, hi), problem.data.labels,
                     float(problem.lam), problem.gamma, problem.nu, problem.loss, (lo, hi))
            for lo, hi in part.worker_ranges]


def init_state(problem_or_shard) -> SvmState:
    sh = problem_or_shard
    A = sh.A if isinstance(sh, SvmShard) else sh.data.A
    return SvmState(np.zeros(A.num_rows), np.zeros(A.num_cols))


def _clamp(v, nu):
    v = v if v > 0.0 else 0.0
    if nu is not None and v > nu:
        return nu
    return v


def _dual_step(beta, g, eta, nu):
    """Projected Newton step on one dual coordinate (0 when it cannot move)."""
    projected = abs(_clamp(beta - g, nu) - beta)
    if projected != 0.0 and eta > 0.0:
        return _clamp(beta - g / eta, nu) - beta
    return 0.0


def _apply(shard, state, i, theta):
    b = shard.labels[i]
    state.alpha[i] = state.alpha[i] + theta
    kernels.scatter_axpy(shard.A, [i], [theta * b], state.x)


def _svm_iteration(shard, state, sel, comm):
    i = int(sel[0])
    red = comm.allreduce(kernels.sel_partials(shard.A, sel, state.x, gram=True))
    eta = red[0] + shard.gamma
    b = shard.labels[i]
    a_i = state.alpha[i]
    g = b * red[1] - 1.0 + shard.gamma * a_i
    theta = _dual_step(a_i, g, eta, shard.nu)
    if theta != 0.0:
        _apply(shard, state, i, theta)
    state.h += 1


def _svm_epoch(shard, state, sels, comm, h0, after):
    idx = np.concatenate(sels)
    s = len(idx)
    nt = s * (s + 1) // 2
    red = comm.allreduce(kernels.sel_partials(shard.A, idx, state.x, gram=True))
    G = unpack_triangle(red[:nt], s)  # Y^T Y, gamma added on the diagonal only
    xp = red[nt:]
    gamma, nu = shard.gamma, shard.nu
    eta = np.diag(G) + gamma
    bvec = shard.labels[idx]
    alpha_start = state.alpha[idx]
    thetas = np.zeros(s)

    for j in range(s):
        i = int(idx[j])
        b = bvec[j]
        beta = alpha_start[j]
        if j:
            repeats = idx[:j] == i
            if repeats.any():
                beta = beta + thetas[:j][repeats].sum()
        g = b * xp[j] - 1.0 + gamma * beta
        if j:
            g = g + b * (G[j, :j] @ (thetas[:j] * bvec[:j]))
        theta = _dual_step(beta, g, eta[j], nu)
        thetas[j] = theta
        if theta != 0.0:
            _apply(shard, state, i, theta)
        state.h += 1
        after(h0 + j + 1)


def _gap_from_parts(lam, gamma, loss, alpha, labels, Ax, xx):
    margins = 1.0 - labels * Ax
    hinge = np.maximum(margins, 0.0)
    losses = hinge if loss == "L1" else hinge * hinge
    primal = 0.5 * xx + lam * math.fsum(losses)
    dual = -0.5 * xx - 0.5 * gamma * math.fsum(alpha * alpha) + math.fsum(alpha)
    return primal - dual


def _check_feasible(alpha, nu):
    if np.any(alpha < 0.0) or (nu is not None and np.any(alpha > nu)):
        raise ContractError("dual iterate is infeasible")


def duality_gap(problem: SvmProblem, state: SvmState) -> float:
    """``P(x) - D(alpha)`` using ``alpha^T Q alpha = ||x||^2``."""
    _check_feasible(state.alpha, problem.nu)
    x = np.asarray(state.x, dtype=np.float64)
    Ax = spmv(problem.data.A, x)
    return _gap_from_parts(problem.lam, problem.gamma, problem.loss, state.alpha,
                           problem.data.labels, Ax, math.fsum(x * x))


def primal_objective(problem: SvmProblem, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    hinge = np.maximum(1.0 - problem.data.labels * spmv(problem.data.A, x), 0.0)
    losses = hinge if problem.loss == "L1" else hinge * hinge
    return 0.5 * math.fsum(x * x) + problem.lam * math.fsum(losses)


def _metric(shard, state, comm):
    m = shard.A.num_rows
    msg = kernels.concat_partials([
        kernels.sel_partials(shard.A, np.arange(m), state.x, gram=False),
        kernels.sum_partials(state.x * state.x)])
    red = comm.allreduce(msg, count=False)
    return _gap_from_parts(shard.lam, shard.gamma, shard.loss, state.alpha,
                           shard.labels, red[:m], red[m])


@dataclass
class SvmRun:
    H: int
    seed: int = 0
    s: Optional[int] = None
    log_every: int = 1
    callback: Optional[Callable] = None  # callback(h, state) on rank 0; x is local
    sampler_factory: Optional[Callable] = None  # (seed, m, 1) -> sampler
    record: bool = True


def _default_sampler(seed, m, block):
    return IndexSampler(seed, m, block, replace=True)


def svm_worker(comm, shard: SvmShard, run: SvmRun):
    factory = run.sampler_factory or _default_sampler
    sampler = factory(run.seed, shard.A.num_rows, 1)
    state = init_state(shard)
    rec = Recorder(run.H, run.log_every, enabled=run.record)

    def after(h):
        if rec.wants(h):
            rec.add(h, _metric(shard, state, comm), comm.stats)
        if run.callback is not None and comm.rank == 0:
            run.callback(h, state)

    drive(run.H, run.s, sampler.draw,
          lambda sel: _svm_iteration(shard, state, sel, comm),
          lambda sels, h0, cb: _svm_epoch(shard, state, sels, comm, h0, cb),
          after)
    return SolveResult(state.x, rec.records, comm.stats.snapshot(), state)


def solve(problem: SvmProblem, run: SvmRun, workers: int = 1) -> SolveResult:
    shards = [problem.full_shard] if workers == 1 else make_shards(problem, workers)
    results, stats = run_spmd(svm_worker, [(sh, run) for sh in shards])
    x = np.concatenate([r.x for r in results])
    state = SvmState(results[0].state.alpha, x, results[0].state.h)
    return SolveResult(x, results[0].records, stats.snapshot(), state)


def svm_cd_step(problem: SvmProblem, state: SvmState, i: int) -> SvmState:
    """One dual coordinate step on row ``i`` of the full data."""
    if not 0 <= i < problem.m:
        raise ConfigurationError(f"row index {i} out of range")
    new = state.copy()
    _svm_iteration(problem.full_shard, new, np.array([i], dtype=np.int64), local_comm())
    return new


def run_svm_cd(problem, H, seed=0, **kw) -> SolveResult:
    return solve(problem, SvmRun(H, seed, None, **kw))


def sa_svm_run(problem, H, sa, **kw) -> SolveResult:
    return solve(problem, SvmRun(H, sa.seed, sa.s, **kw))
