"""Synthetic tenant load: six stress workloads with throughput accounting.

One worker process per CPU (threads would serialize on the GIL), pinned
to its CPU, running the requested workload kinds round-robin under the
default scheduling class until stopped. Work content is deterministic
given the seed; FILEIO and the high-frequency timer additionally depend
on OS services. Counters live in the workers and are shipped back once
on shutdown, so there is no shared mutable state with the measurement
thread.
"""

import enum
import multiprocessing
import os
import random
import tempfile
import time
import zlib
from dataclasses import dataclass, field


class WorkloadKind(enum.Enum):
    BSEARCH = "bsearch"
    MATMUL = "matmul"
    COMPRESS = "compress"
    MEMTHRASH = "memthrash"
    FILEIO = "fileio"
    HIGHFREQ_TIMER = "highfreq-timer"


@dataclass(frozen=True)
class LoadConfig:
    """Fixed workload parameters; echoed into every report."""

    bsearch_elements: int = 1 << 20
    bsearch_probes_per_op: int = 512
    matmul_dim: int = 256
    compress_block: int = 1 << 20
    thrash_bytes: int = 64 << 20
    thrash_accesses_per_op: int = 1 << 15
    fileio_bytes: int = 128 << 20
    fileio_chunk: int = 1 << 22
    timer_period_ns: int = 1_000

    def to_json(self):
        return {
            "bsearch_elements": self.bsearch_elements,
            "matmul_dim": self.matmul_dim,
            "compress_block": self.compress_block,
            "thrash_bytes": self.thrash_bytes,
            "fileio_bytes": self.fileio_bytes,
            "timer_period_ns": self.timer_period_ns,
        }


@dataclass
class TenantCell:
    ops: int = 0
    wall_s: float = 0.0
    failed: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def ops_per_s(self) -> float:
        return self.ops / self.wall_s if self.wall_s > 0 else 0.0

    def to_json(self):
        out = {"ops": self.ops, "wall_s": self.wall_s, "ops_per_s": self.ops_per_s}
        if self.failed:
            out["failed"] = self.failed
        if self.extras:
            out["extras"] = self.extras
        return out


@dataclass
class TenantReport:
    cells: dict  # (kind_value, cpu) -> TenantCell
    seed: int
    config: LoadConfig

    def kinds(self) -> set:
        return {kind for kind, _ in self.cells}

    def ops_per_s_by_kind(self) -> dict:
        totals = {}
        for (kind, _), cell in self.cells.items():
            if not cell.failed:
                totals[kind] = totals.get(kind, 0.0) + cell.ops_per_s
        return totals

    def to_json(self):
        return {
            "seed": self.seed,
            "config": self.config.to_json(),
            "cells": {
                f"{kind}@cpu{cpu}": cell.to_json() for (kind, cpu), cell in self.cells.items()
            },
            "ops_per_s_by_kind": self.ops_per_s_by_kind(),
        }


class _BsearchWork:
    def __init__(self, rng, config):
        import array
        import bisect

        self._bisect = bisect.bisect_left
        data = array.array("q", (rng.randrange(2**40) for _ in range(config.bsearch_elements)))
        self._arr = array.array("q", sorted(data))
        self._rng = rng
        self._probes = config.bsearch_probes_per_op

    def step(self):
        arr = self._arr
        find = self._bisect
        rnd = self._rng.randrange
        for _ in range(self._probes):
            find(arr, rnd(2**40))


class _MatmulWork:
    def __init__(self, rng, config):
        import numpy as np

        gen = np.random.default_rng(rng.randrange(2**63))
        dim = config.matmul_dim
        self._a = gen.random((dim, dim))
        self._b = gen.random((dim, dim))

    def step(self):
        self._a @ self._b


class _CompressWork:
    def __init__(self, rng, config):
        self._block = rng.randbytes(config.compress_block)

    def step(self):
        zlib.decompress(zlib.compress(self._block, 1))


class _MemthrashWork:
    def __init__(self, rng, config):
        import numpy as np

        gen = np.random.default_rng(rng.randrange(2**63))
        words = config.thrash_bytes // 8
        self._arena = np.zeros(words, dtype=np.int64)
        # a few pre-drawn scatter patterns, cycled
        self._patterns = [
            gen.integers(0, words, size=config.thrash_accesses_per_op) for _ in range(8)
        ]
        self._i = 0

    def step(self):
        idx = self._patterns[self._i]
        self._i = (self._i + 1) % len(self._patterns)
        self._arena[idx] += 1


class _FileioWork:
    def __init__(self, rng, config, scratch_dir):
        import mmap

        self._mmap_mod = mmap
        fd, self._path = tempfile.mkstemp(prefix="silt_fileio_", dir=scratch_dir)
        self._fd = fd
        os.ftruncate(fd, config.fileio_bytes)
        self._size = config.fileio_bytes
        self._chunk = config.fileio_chunk
        self._block = rng.randbytes(self._chunk)
        self._rng = rng
        self._offset = 0

    def step(self):
        # sequential write, random reads, one mmap pass over a chunk
        os.pwrite(self._fd, self._block, self._offset)
        self._offset = (self._offset + self._chunk) % (self._size - self._chunk)
        for _ in range(8):
            os.pread(self._fd, 1 << 16, self._rng.randrange(self._size - (1 << 16)))
        with self._mmap_mod.mmap(self._fd, self._chunk, offset=0) as view:
            _checksum = zlib.adler32(view[:: 4096])

    def close(self):
        try:
            os.close(self._fd)
            os.unlink(self._path)
        except OSError:
            pass


class _TimerWork:
    """Periodic 1 us ticks; missed periods recorded as overruns.

    Python 3.10 has no clock_nanosleep, so the period is enforced by
    spinning on the monotonic clock; overruns count the periods a late
    wakeup skipped, which keeps delivered + overruns ~= elapsed/period.
    """

    def __init__(self, rng, config):
        self._period = config.timer_period_ns
        self.delivered = 0
        self.overruns = 0
        self._deadline = None

    def step(self):
        now_ns = time.monotonic_ns
        period = self._period
        deadline = self._deadline if self._deadline is not None else now_ns() + period
        # one op == 256 timer periods, to keep stop polling cheap
        for _ in range(256):
            now = now_ns()
            if now < deadline:
                while now < deadline:
                    now = now_ns()
                self.delivered += 1
                deadline += period
            else:
                missed = (now - deadline) // period + 1
                self.overruns += int(missed)
                deadline += missed * period
        self._deadline = deadline

    def extras(self):
        return {
            "requested_period_ns": self._period,
            "delivered": self.delivered,
            "overruns": self.overruns,
        }


def _make_work(kind, rng, config, scratch_dir):
    if kind is WorkloadKind.BSEARCH:
        return _BsearchWork(rng, config)
    if kind is WorkloadKind.MATMUL:
        return _MatmulWork(rng, config)
    if kind is WorkloadKind.COMPRESS:
        return _CompressWork(rng, config)
    if kind is WorkloadKind.MEMTHRASH:
        return _MemthrashWork(rng, config)
    if kind is WorkloadKind.FILEIO:
        return _FileioWork(rng, config, scratch_dir)
    return _TimerWork(rng, config)


def _tenant_main(cpu, kind_values, seed, config, scratch_dir, stop, out_queue):
    try:
        os.sched_setaffinity(0, {cpu})
    except OSError:
        pass  # recorded implicitly: report carries actual host behaviour
    kinds = [WorkloadKind(v) for v in kind_values]
    rng = random.Random((seed << 8) ^ cpu)
    works = {}
    cells = {}
    for kind in kinds:
        cell = TenantCell()
        cells[kind.value] = cell
        try:
            works[kind] = _make_work(kind, rng, config, scratch_dir)
        except OSError as exc:
            cell.failed = f"skipped: {exc}"
    start = time.monotonic()
    try:
        while not stop.is_set():
            for kind, work in works.items():
                cell = cells[kind.value]
                if cell.failed:
                    continue
                try:
                    work.step()
                    cell.ops += 1
                except Exception as exc:  # one failing workload must not sink the rest
                    cell.failed = f"step failed: {exc!r}"
    finally:
        wall = time.monotonic() - start
        for kind, work in works.items():
            cells[kind.value].wall_s = wall
            if isinstance(work, _TimerWork):
                cells[kind.value].extras = work.extras()
            if isinstance(work, _FileioWork):
                work.close()
        out_queue.put((cpu, {k: c.to_json() for k, c in cells.items()}))


@dataclass
class TenantHandle:
    processes: list
    stop: object
    queue: object
    cpus: list
    kinds: list
    seed: int
    config: LoadConfig
    report: TenantReport | None = None


def start_tenants(
    kinds,
    cpus,
    seed: int = 0,
    config: LoadConfig | None = None,
    scratch_dir: str | None = None,
) -> TenantHandle:
    """Launch one pinned worker per CPU cycling `kinds` under SCHED_OTHER."""
    kinds = sorted(set(kinds), key=lambda k: k.value)
    cpus = sorted(set(cpus))
    if not kinds:
        raise ValueError("empty workload set")
    if not cpus:
        raise ValueError("empty cpu set")
    config = config or LoadConfig()
    if scratch_dir is None:
        scratch_dir = os.environ.get("SILT_SCRATCH", tempfile.gettempdir())

    ctx = multiprocessing.get_context(
        "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    )
    stop = ctx.Event()
    queue = ctx.Queue()
    processes = []
    for cpu in cpus:
        proc = ctx.Process(
            target=_tenant_main,
            args=(cpu, [k.value for k in kinds], seed, config, scratch_dir, stop, queue),
            daemon=True,
        )
        proc.start()
        processes.append(proc)
    return TenantHandle(
        processes=processes,
        stop=stop,
        queue=queue,
        cpus=cpus,
        kinds=kinds,
        seed=seed,
        config=config,
    )


def stop_tenants(handle: TenantHandle, grace_s: float = 15.0) -> TenantReport:
    """Stop all workers, join within a grace period, finalize the report."""
    if handle.report is not None:
        return handle.report
    handle.stop.set()
    results = {}
    deadline = time.monotonic() + grace_s
    pending = len(handle.processes)
    while pending and time.monotonic() < deadline:
        try:
            cpu, cells = handle.queue.get(timeout=0.2)
        except Exception:
            continue
        results[cpu] = cells
        pending -= 1
    cells = {}
    for proc, cpu in zip(handle.processes, handle.cpus):
        proc.join(timeout=max(0.0, deadline - time.monotonic()) + 1.0)
        if proc.is_alive():
            proc.terminate()
            proc.join(timeout=5.0)
        worker_result = results.get(cpu)
        for kind in handle.kinds:
            cell = TenantCell()
            if worker_result is None:
                cell.failed = f"worker on cpu {cpu} produced no report (exitcode {proc.exitcode})"
            else:
                data = worker_result.get(kind.value, {})
                cell.ops = data.get("ops", 0)
                cell.wall_s = data.get("wall_s", 0.0)
                cell.failed = data.get("failed", "")
                cell.extras = data.get("extras", {})
            cells[(kind.value, cpu)] = cell
    handle.report = TenantReport(cells=cells, seed=handle.seed, config=handle.config)
    return handle.report
