"""Benchmark: full re-inversion vs the incremental inverse update.

Both paths replay the same pre-generated stream of B-sample batches against
a full FIFO bank of N_Q samples:

    classic    write the B new kernel rows/columns into K, then direct_inverse(K)
    efficient  gp_insert, i.e. the new kernel rows plus replace_inverse

Timings are medians over the rounds after warmup. After every round, outside
the timed region, the two inverses are compared elementwise.
"""

from __future__ import annotations

import contextlib
import logging
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from threadpoolctl import threadpool_limits

from gplabel.bank import BankMode, MemoryBank
from gplabel.exceptions import InvalidValue, OutOfMemory
from gplabel.gp import GpConfig, gp_insert, gp_warmup
from gplabel.kernel import KernelParams, kernel_matrix
from gplabel.linalg import direct_inverse, inverse_residual
from gplabel.toydata import make_rng

logger = logging.getLogger(__name__)

AGREEMENT_RTOL = 1e-7
BENCH_CLASSES = 10
# K, both inverses, factor/potri workspace and comparison temporaries
MATRICES_IN_FLIGHT = 6


class ThreadMode(StrEnum):
    SINGLE = "single"
    MAX = "max"


class BenchConfig(BaseModel):
    """One benchmark run. Features are standard normals in `feature_dim` dims."""

    model_config = ConfigDict(frozen=True)

    bank_size: int = Field(default=4096, ge=2)
    batch_size: int = Field(default=8, ge=1)
    rounds: int = Field(default=20, ge=1)
    warmup_rounds: int = Field(default=3, ge=0)
    feature_dim: int = Field(default=16, ge=1)
    seed: int = 0
    threads: ThreadMode = ThreadMode.SINGLE
    length_scale: float = Field(default=4.0, gt=0)
    sigma: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _batch_below_bank(self) -> BenchConfig:
        if self.batch_size >= self.bank_size:
            raise ValueError(
                f"batch_size ({self.batch_size}) must be < bank_size ({self.bank_size})"
            )
        return self


@dataclass
class BenchReport:
    config: BenchConfig
    classic_ns_per_update: float
    efficient_ns_per_update: float
    speedup: float
    max_residual: float
    max_disagreement: float
    agreed: bool
    environment: dict[str, str] = field(default_factory=dict)

    def to_kv(self) -> str:
        """key=value lines, config first."""
        lines = [f"{k}={v}" for k, v in self.config.model_dump(mode="json").items()]
        for k, v in asdict(self).items():
            if k in ("config", "environment"):
                continue
            lines.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        lines.extend(f"env.{k}={v}" for k, v in self.environment.items())
        return "\n".join(lines) + "\n"

    def to_row(self, kind: str = "bench") -> dict:
        """Row for the bench results file."""
        return {
            "kind": kind,
            "n_q": self.config.bank_size,
            "batch": self.config.batch_size,
            "rounds": self.config.rounds,
            "threads": self.config.threads.value,
            "classic_ns": self.classic_ns_per_update,
            "efficient_ns": self.efficient_ns_per_update,
            "speedup": self.speedup,
            "max_residual": self.max_residual,
            "cpu": self.environment.get("cpu", ""),
            "cpu_count": self.environment.get("cpu_count", ""),
        }


@dataclass
class SweepResult:
    rows: list[BenchReport]
    classic_slope: float
    efficient_slope: float


def format_ns(ns: float) -> str:
    dt = ns * 1e-9
    if abs(dt) > 10e-3:
        return "%.1f ms" % (dt * 1e3)
    if abs(dt) > 10e-6:
        return "%.1f us" % (dt * 1e6)
    return "%.0f ns" % ns


def environment(threads: ThreadMode) -> dict[str, str]:
    return {
        "cpu": platform.processor() or platform.machine(),
        "cpu_count": str(os.cpu_count() or 0),
        "threads": threads.value,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def required_bytes(bank_size: int) -> int:
    return MATRICES_IN_FLIGHT * bank_size * bank_size * np.dtype(np.float64).itemsize


def _available_bytes() -> int | None:
    try:
        return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def check_memory(bank_size: int) -> None:
    """Raise OutOfMemory when the run's matrices exceed available physical memory."""
    need = required_bytes(bank_size)
    avail = _available_bytes()
    if avail is not None and need > avail:
        raise OutOfMemory(
            f"N_Q={bank_size} needs about {need / 2**30:.2f} GiB "
            f"({need} bytes) but only {avail / 2**30:.2f} GiB is available; "
            "lower --nq or free memory",
            required_bytes=need,
        )


def _thread_limit(mode: ThreadMode):
    if mode is ThreadMode.SINGLE:
        return threadpool_limits(limits=1, user_api="blas")
    return contextlib.nullcontext()


def _stream(config: BenchConfig):
    """Initial bank contents plus one (features, class ids) batch per round."""
    rng = make_rng(config.seed)
    n, d, b = config.bank_size, config.feature_dim, config.batch_size
    initial = rng.standard_normal((n, d))
    initial_ids = rng.integers(0, BENCH_CLASSES, n)
    batches = [
        (rng.standard_normal((b, d)), rng.integers(0, BENCH_CLASSES, b))
        for _ in range(config.warmup_rounds + config.rounds)
    ]
    return initial, initial_ids, batches


def _run(config: BenchConfig) -> BenchReport:
    kernel = KernelParams(length_scale=config.length_scale)
    gp_config = GpConfig(kernel=kernel, sigma=config.sigma, refresh_period=None)
    noise = config.sigma**2
    n, b = config.bank_size, config.batch_size
    initial, initial_ids, batches = _stream(config)

    bank = MemoryBank(n, config.feature_dim, BENCH_CLASSES, BankMode.FIFO)
    bank.insert_batch(initial, initial_ids)
    state = gp_warmup(gp_config, bank)

    feats = initial.copy()
    K = kernel_matrix(feats, None, kernel)
    K[np.diag_indices_from(K)] += noise

    classic_ns: list[int] = []
    efficient_ns: list[int] = []
    max_disagreement = 0.0
    agreed = True
    for r, (new, ids) in enumerate(batches):
        # a warm fifo bank filled in slot order replaces slots round-robin
        slots = (np.arange(b) + r * b) % n

        t0 = time.perf_counter_ns()
        feats[slots] = new
        rows = kernel_matrix(new, feats, kernel)
        K[slots, :] = rows
        K[:, slots] = rows.T
        K[slots, slots] += noise
        classic_inv = direct_inverse(K)
        t1 = time.perf_counter_ns()
        gp_insert(state, new, ids)
        t2 = time.perf_counter_ns()

        if r >= config.warmup_rounds:
            classic_ns.append(t1 - t0)
            efficient_ns.append(t2 - t1)

        scale = float(np.abs(classic_inv).max())
        diff = float(np.abs(state.K_inv - classic_inv).max()) / scale
        max_disagreement = max(max_disagreement, diff)
        if diff > AGREEMENT_RTOL:
            agreed = False
            logger.warning("round %d: inverses disagree by %.3e (relative)", r, diff)
        logger.debug(
            "round %d: classic %s, efficient %s",
            r,
            format_ns(t1 - t0),
            format_ns(t2 - t1),
        )

    classic = float(np.median(classic_ns))
    efficient = float(np.median(efficient_ns))
    return BenchReport(
        config=config,
        classic_ns_per_update=classic,
        efficient_ns_per_update=efficient,
        speedup=classic / efficient,
        max_residual=inverse_residual(K, state.K_inv),
        max_disagreement=max_disagreement,
        agreed=agreed,
        environment=environment(config.threads),
    )


def run_bench(config: BenchConfig) -> BenchReport:
    """Time both update paths on the same stream.

    Raises:
        OutOfMemory: the N_Q x N_Q matrices do not fit.
    """
    check_memory(config.bank_size)
    logger.info(
        "bench: N_Q=%d B=%d rounds=%d (+%d warmup) threads=%s",
        config.bank_size,
        config.batch_size,
        config.rounds,
        config.warmup_rounds,
        config.threads.value,
    )
    try:
        with _thread_limit(config.threads):
            report = _run(config)
    except MemoryError as e:
        need = required_bytes(config.bank_size)
        raise OutOfMemory(
            f"allocation failed for N_Q={config.bank_size} (about {need} bytes)",
            required_bytes=need,
            cause=e,
        )
    logger.info(
        "bench N_Q=%d: classic %s, efficient %s, speedup x%.2f",
        config.bank_size,
        format_ns(report.classic_ns_per_update),
        format_ns(report.efficient_ns_per_update),
        report.speedup,
    )
    return report


def loglog_slope(sizes: list[int], times: list[float]) -> float:
    """Least-squares slope of log(time) against log(size)."""
    if len(sizes) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(sizes), np.log(times), 1)
    return float(slope)


def complexity_sweep(
    sizes: list[int], batch_size: int = 8, **overrides
) -> SweepResult:
    """run_bench over ascending bank sizes, with log-log slopes per path.

    `overrides` are further BenchConfig fields (rounds, threads, ...).
    """
    if not sizes or any(a >= b for a, b in zip(sizes, sizes[1:])):
        raise InvalidValue(f"sweep sizes must be strictly ascending, got {sizes}", key="sweep")
    check_memory(sizes[-1])
    rows = [
        run_bench(BenchConfig(bank_size=n, batch_size=batch_size, **overrides)) for n in sizes
    ]
    result = SweepResult(
        rows=rows,
        classic_slope=loglog_slope(sizes, [r.classic_ns_per_update for r in rows]),
        efficient_slope=loglog_slope(sizes, [r.efficient_ns_per_update for r in rows]),
    )
    logger.info(
        "sweep slopes: classic %.2f, efficient %.2f",
        result.classic_slope,
        result.efficient_slope,
    )
    return result
