"""Chunked, optionally parallel simulation of many pairs.

A *job* is a block of consecutive pair indices sharing one relative angle and
one random-stream setting.  All jobs of a call are flattened into a single
list of pairs, cut into fixed-size chunks and integrated chunk by chunk.
Chunk boundaries never depend on the worker count, and every pair is
advanced elementwise, so results are bit-identical for any number of workers.
"""
from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig, validate
from .guidance import integrate_batch, readout_sign
from .sampling import equilibrium_batch

__all__ = ["CHUNK_SIZE", "WORKERS_ENV", "PairJob", "JobResult", "default_workers", "simulate_jobs"]

CHUNK_SIZE = 4096
WORKERS_ENV = "BOHMBELL_WORKERS"


@dataclass(frozen=True)
class PairJob:
    """Pairs ``start .. start+count-1`` of stream ``setting`` run at angle ``gamma``."""

    gamma: float
    count: int
    setting: tuple[int, ...] = ()
    start: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("a job needs at least one pair")
        if self.start < 0:
            raise ValueError("stream indices are non-negative")


@dataclass(eq=False)
class JobResult:
    """Per-pair arrays for one job; recorded paths have shape ``(n_samples, count)``."""

    job: PairJob
    pair_index: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    zA0: np.ndarray
    zB0: np.ndarray
    zA: np.ndarray
    zB: np.ndarray
    t: np.ndarray
    path_A: np.ndarray | None = None
    path_B: np.ndarray | None = None
    snapshots: dict = field(default_factory=dict)

    @property
    def sA(self) -> np.ndarray:
        return readout_sign(self.zA)

    @property
    def sB(self) -> np.ndarray:
        return readout_sign(self.zB)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(value)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
    return n


def _run_chunk(args):
    zA0, zB0, gamma, config, stride, record_times = args
    res = integrate_batch(zA0, zB0, config, gamma=gamma, stride=stride, record_times=record_times)
    return res.t, res.zA, res.zB, res.snapshots


def simulate_jobs(
    config: ExperimentConfig,
    jobs,
    workers: int | None = None,
    stride: int | None = None,
    record_times=(),
) -> list[JobResult]:
    """Sample equilibrium initial conditions for every job and integrate them.

    ``stride`` keeps every ``stride``-th step of each path (``None`` keeps only
    the final positions).  ``record_times`` adds position snapshots.
    """
    config = validate(config)
    jobs = list(jobs)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    sigma0 = config.physical.sigma0

    init = [equilibrium_batch(config.seed, j.start, j.count, sigma0, j.setting) for j in jobs]
    zA0 = np.concatenate([i[2] for i in init])
    zB0 = np.concatenate([i[3] for i in init])
    gamma = np.concatenate([np.full(j.count, float(j.gamma)) for j in jobs])
    cuts = range(0, zA0.size, CHUNK_SIZE)
    tasks = [
        (zA0[c : c + CHUNK_SIZE], zB0[c : c + CHUNK_SIZE], gamma[c : c + CHUNK_SIZE], config, stride, tuple(record_times))
        for c in cuts
    ]
    if workers == 1 or len(tasks) == 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        methods = multiprocessing.get_all_start_methods()
        ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks)), mp_context=ctx) as pool:
            parts = list(pool.map(_run_chunk, tasks))

    t = parts[0][0]
    path_A = np.concatenate([p[1] for p in parts], axis=1)
    path_B = np.concatenate([p[2] for p in parts], axis=1)
    snaps = {k: tuple(np.concatenate([p[3][k][i] for p in parts]) for i in range(2)) for k in parts[0][3]}

    out, lo = [], 0
    for j, (r, theta, a0, b0) in zip(jobs, init):
        hi = lo + j.count
        keep_paths = stride is not None
        out.append(
            JobResult(
                job=j,
                pair_index=np.arange(j.start, j.start + j.count),
                r=r,
                theta=theta,
                zA0=a0,
                zB0=b0,
                zA=path_A[-1, lo:hi].copy(),
                zB=path_B[-1, lo:hi].copy(),
                t=t,
                path_A=path_A[:, lo:hi] if keep_paths else None,
                path_B=path_B[:, lo:hi] if keep_paths else None,
                snapshots={k: (v[0][lo:hi], v[1][lo:hi]) for k, v in snaps.items()},
            )
        )
        lo = hi
    return out
