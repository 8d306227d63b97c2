"""Lasso solvers: randomized (accelerated) block coordinate descent.

Problem: ``min_x 1/2 ||Ax - b||^2 + lam ||x||_1``.

Every solver body runs on one worker holding a contiguous row block of
``A`` (stored transposed, so selected columns are CSR rows) and the matching
slices of the ``R^m`` vectors.  ``R^n`` vectors and scalars are replicated.
The only counted collective per iteration (or per epoch for the s-step
variants) is one fused allreduce of the Gram triangle and the projections.

The s-step ("synchronization-avoiding") variants draw ``s`` blocks up
front, reduce ``Y^T Y`` and ``Y^T [ytil, ztil]`` once, and then recover each
inner iteration's residual projection and coordinate values from those
quantities plus the updates already made inside the epoch.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import kernels
from ._loop import SolveResult, drive
from .comm import IndexSampler, local_comm, run_spmd
from .datasets import LabeledDataset, partition
from .errors import ConfigurationError
from .matrix import SparseMatrixCSR, largest_eigenvalue, spmv, unpack_triangle
from .records import Recorder


@dataclass(frozen=True, eq=False)
class LassoProblem:
    data: LabeledDataset
    lam: float
    block_size: int = 1

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")
        if not 1 <= self.block_size <= self.data.num_cols:
            raise ConfigurationError(
                f"block size must be in [1, {self.data.num_cols}], got {self.block_size}")

    @property
    def n(self):
        return self.data.num_cols

    @property
    def m(self):
        return self.data.num_rows

    @property
    def q(self):
        return -(-self.n // self.block_size)

    @cached_property
    def full_shard(self):
        return make_shards(self, 1)[0]


@dataclass
class AccBCDState:
    theta: float
    y: np.ndarray
    z: np.ndarray
    y_tilde: np.ndarray
    z_tilde: np.ndarray
    h: int = 0

    def solution(self):
        return self.theta * self.theta * self.y + self.z

    def copy(self):
        return AccBCDState(self.theta, self.y.copy(), self.z.copy(),
                           self.y_tilde.copy(), self.z_tilde.copy(), self.h)


@dataclass
class BCDState:
    x: np.ndarray
    residual: np.ndarray
    h: int = 0

    def solution(self):
        return self.x

    def copy(self):
        return BCDState(self.x.copy(), self.residual.copy(), self.h)


@dataclass(frozen=True)
class SAConfig:
    s: int
    seed: int = 0

    def __post_init__(self):
        if self.s < 1:
            raise ConfigurationError(f"s must be >= 1, got {self.s}")


@dataclass(eq=False)
class LassoShard:
    At: SparseMatrixCSR  # local row block of A, transposed (n x m_local)
    b: np.ndarray
    n: int
    lam: float
    mu: int
    q: int
    rows: tuple = (0, 0)


def make_shards(problem: LassoProblem, P: int, part=None):
    part = part or partition(problem.data, "rows", P)
    A, b = problem.data.A, problem.data.labels
    return [LassoShard(A.row_block(lo, hi).transpose(), b[lo:hi].copy(), problem.n,
                       float(problem.lam), problem.block_size, problem.q, (lo, hi))
            for lo, hi in part.worker_ranges]


def soft_threshold(beta, alpha):
    """``sign(beta) * max(|beta| - alpha, 0)``, elementwise."""
    if np.any(np.asarray(alpha) < 0):
        raise ConfigurationError("threshold must be non-negative")
    return np.sign(beta) * np.maximum(np.abs(beta) - alpha, 0.0)


def next_theta(theta):
    t2 = theta * theta
    return (math.sqrt(t2 * t2 + 4.0 * t2) - t2) / 2.0


def lasso_objective(problem: LassoProblem, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    res = spmv(problem.data.A, x) - problem.data.labels
    return 0.5 * math.fsum(res * res) + problem.lam * math.fsum(np.abs(x))


def init_acc_state(shard: LassoShard) -> AccBCDState:
    m_loc = len(shard.b)
    return AccBCDState(shard.mu / shard.n, np.zeros(shard.n), np.zeros(shard.n),
                       np.zeros(m_loc), 0.0 - shard.b)


def init_bcd_state(shard: LassoShard) -> BCDState:
    return BCDState(np.zeros(shard.n), 0.0 - shard.b)


# -- accelerated -------------------------------------------------------------

def _acc_apply(shard, state, sel, dz, theta):
    c = (1.0 - shard.q * theta) / (theta * theta)
    state.z[sel] = state.z[sel] + dz
    kernels.scatter_axpy(shard.At, sel, dz, state.z_tilde)
    state.y[sel] = state.y[sel] - c * dz
    kernels.scatter_axpy(shard.At, sel, -(c * dz), state.y_tilde)


def _acc_iteration(shard, state, sel, comm):
    mu = len(sel)
    nt = mu * (mu + 1) // 2
    red = comm.allreduce(kernels.sel_partials(
        shard.At, sel, np.stack((state.y_tilde, state.z_tilde)), gram=True))
    G = unpack_triangle(red[:nt], mu)
    theta = state.theta
    v = largest_eigenvalue(G)
    if v > 0.0:
        eta = 1.0 / (shard.q * theta * v)
        r = theta * theta * red[nt:nt + mu] + red[nt + mu:]
        zsel = state.z[sel]
        g = zsel - eta * r
        dz = soft_threshold(g, shard.lam * eta) - zsel
        _acc_apply(shard, state, sel, dz, theta)
    state.theta = next_theta(theta)
    state.h += 1


def _acc_epoch(shard, state, sels, comm, h0, after):
    s, mu = len(sels), len(sels[0])
    k = s * mu
    nt = k * (k + 1) // 2
    Y = np.concatenate(sels)
    red = comm.allreduce(kernels.sel_partials(
        shard.At, Y, np.stack((state.y_tilde, state.z_tilde)), gram=True))
    G = unpack_triangle(red[:nt], k)
    py, pz = red[nt:nt + k], red[nt + k:]

    thetas = [state.theta]
    for _ in range(s):
        thetas.append(next_theta(thetas[-1]))
    q = shard.q
    # y-update coefficient of each inner iteration, repeated over its block
    coef = np.repeat([(1.0 - q * th) / (th * th) for th in thetas[:-1]], mu)
    z_start = state.z[Y]
    dz_all = np.zeros(k)
    touched = np.zeros(shard.n)  # sum of this epoch's dz per coordinate

    for j in range(s):
        blk = slice(j * mu, (j + 1) * mu)
        sel = sels[j]
        theta = thetas[j]
        th2 = theta * theta
        v = largest_eigenvalue(G[blk, blk])
        if v > 0.0:
            eta = 1.0 / (q * theta * v)
            r = th2 * py[blk] + pz[blk]
            zsel = z_start[blk]
            if j:
                done = slice(0, j * mu)
                w = th2 * coef[done] - 1.0
                r = r - G[blk, done] @ (w * dz_all[done])
                zsel = zsel + touched[sel]
            g = zsel - eta * r
            dz = soft_threshold(g, shard.lam * eta) - zsel
            dz_all[blk] = dz
            touched[sel] += dz
            _acc_apply(shard, state, sel, dz, theta)
        state.theta = thetas[j + 1]
        state.h += 1
        after(h0 + j + 1)


# -- non-accelerated -----------------------------------------------------------

def _bcd_apply(shard, state, sel, dx):
    state.x[sel] = state.x[sel] + dx
    kernels.scatter_axpy(shard.At, sel, dx, state.residual)


def _bcd_iteration(shard, state, sel, comm):
    mu = len(sel)
    nt = mu * (mu + 1) // 2
    red = comm.allreduce(kernels.sel_partials(shard.At, sel, state.residual, gram=True))
    v = largest_eigenvalue(unpack_triangle(red[:nt], mu))
    if v > 0.0:
        eta = 1.0 / v
        xsel = state.x[sel]
        g = xsel - eta * red[nt:]
        dx = soft_threshold(g, shard.lam * eta) - xsel
        _bcd_apply(shard, state, sel, dx)
    state.h += 1


def _bcd_epoch(shard, state, sels, comm, h0, after):
    s, mu = len(sels), len(sels[0])
    k = s * mu
    nt = k * (k + 1) // 2
    Y = np.concatenate(sels)
    red = comm.allreduce(kernels.sel_partials(shard.At, Y, state.residual, gram=True))
    G = unpack_triangle(red[:nt], k)
    pr = red[nt:]
    x_start = state.x[Y]
    dx_all = np.zeros(k)
    touched = np.zeros(shard.n)

    for j in range(s):
        blk = slice(j * mu, (j + 1) * mu)
        sel = sels[j]
        v = largest_eigenvalue(G[blk, blk])
        if v > 0.0:
            eta = 1.0 / v
            r = pr[blk]
            xsel = x_start[blk]
            if j:
                done = slice(0, j * mu)
                r = r + G[blk, done] @ dx_all[done]
                xsel = xsel + touched[sel]
            g = xsel - eta * r
            dx = soft_threshold(g, shard.lam * eta) - xsel
            dx_all[blk] = dx
            touched[sel] += dx
            _bcd_apply(shard, state, sel, dx)
        state.h += 1
        after(h0 + j + 1)


# -- worker body -----------------------------------------------------------------

@dataclass
class LassoRun:
    """Per-run settings shared by every worker."""

    H: int
    seed: int = 0
    s: Optional[int] = None
    accelerate: bool = True
    log_every: int = 1
    callback: Optional[Callable] = None  # callback(h, state) on rank 0
    sampler_factory: Optional[Callable] = None  # (seed, n, mu) -> sampler
    record: bool = True
    extra: dict = field(default_factory=dict)


def _metric(shard, state, comm, accelerate):
    if accelerate:
        th2 = state.theta * state.theta
        x = th2 * state.y + state.z
        res = th2 * state.y_tilde + state.z_tilde
    else:
        x, res = state.x, state.residual
    sq = comm.allreduce(kernels.sum_partials(res * res), count=False)[0]
    return 0.5 * sq + shard.lam * math.fsum(np.abs(x))


def lasso_worker(comm, shard: LassoShard, run: LassoRun):
    factory = run.sampler_factory or IndexSampler
    sampler = factory(run.seed, shard.n, shard.mu)
    if run.accelerate:
        state = init_acc_state(shard)
        step, epoch = _acc_iteration, _acc_epoch
    else:
        state = init_bcd_state(shard)
        step, epoch = _bcd_iteration, _bcd_epoch
    rec = Recorder(run.H, run.log_every, enabled=run.record)

    def after(h):
        if rec.wants(h):
            rec.add(h, _metric(shard, state, comm, run.accelerate), comm.stats)
        if run.callback is not None and comm.rank == 0:
            run.callback(h, state)

    drive(run.H, run.s,
          sampler.draw,
          lambda sel: step(shard, state, sel, comm),
          lambda sels, h0, cb: epoch(shard, state, sels, comm, h0, cb),
          after)
    return SolveResult(state.solution(), rec.records, comm.stats.snapshot(), state)


def solve(problem: LassoProblem, run: LassoRun, workers: int = 1) -> SolveResult:
    shards = [problem.full_shard] if workers == 1 else make_shards(problem, workers)
    results, stats = run_spmd(lasso_worker, [(sh, run) for sh in shards])
    first = results[0]
    return SolveResult(first.x, first.records, stats.snapshot(), first.state)


# -- public entry points -----------------------------------------------------

def accbcd_step(problem: LassoProblem, state: AccBCDState, sel) -> AccBCDState:
    """One accelerated BCD iteration on the full data; returns a new state."""
    sel = _check_sel(problem, sel)
    new = state.copy()
    _acc_iteration(problem.full_shard, new, sel, local_comm())
    return new


def bcd_step(problem: LassoProblem, state: BCDState, sel) -> BCDState:
    sel = _check_sel(problem, sel)
    new = state.copy()
    _bcd_iteration(problem.full_shard, new, sel, local_comm())
    return new


def _check_sel(problem, sel):
    idx = np.asarray(getattr(sel, "indices", sel), dtype=np.int64).ravel()
    if len(idx) != problem.block_size or len(set(idx.tolist())) != len(idx):
        raise ConfigurationError(
            f"selection must hold {problem.block_size} distinct indices, got {idx}")
    if idx.min() < 0 or idx.max() >= problem.n:
        raise ConfigurationError("selection index out of range")
    return idx


def run_accbcd(problem, H, seed=0, **kw) -> SolveResult:
    return solve(problem, LassoRun(H, seed, None, True, **kw))


def sa_accbcd_run(problem, H, sa: SAConfig, **kw) -> SolveResult:
    return solve(problem, LassoRun(H, sa.seed, sa.s, True, **kw))


def run_bcd(problem, H, seed=0, accelerate=False, **kw) -> SolveResult:
    return solve(problem, LassoRun(H, seed, None, accelerate, **kw))


def sa_bcd_run(problem, H, sa: SAConfig, accelerate=False, **kw) -> SolveResult:
    return solve(problem, LassoRun(H, sa.seed, sa.s, accelerate, **kw))
