"""Single-trial measurement loop and latency-trace persistence.

A trial materializes its whole input stream and a full-size timestamp
buffer up front, then runs one tight loop per tuple (or per batch of N
tuples) bracketing the view refresh with clock reads. Nothing inside the
measured loop writes to the console or to files, and the view state is
never reset between replay iterations, so engine-internal index growth
shows up in the data exactly once per stream position.

Trace files: magic "SILT", version u16, u32 header length, JSON header,
u64 delta count, count little-endian u64 deltas, CRC-32 over everything
before it.
"""

import functools
import os
import struct
import zlib
from array import array
from dataclasses import dataclass, field

from . import datagen
from .clock import Calibration, Clock, ClockKind, calibrate
from .datagen import Schema, StreamSpec
from .engine import QueryId, make_view


class HarnessError(Exception):
    pass


class TrialSpecError(HarnessError, ValueError):
    pass


class TrialIntegrityError(HarnessError):
    """The measured data violates a trace invariant; trial discarded."""


class TraceFormatError(HarnessError):
    pass


class TraceVersionError(TraceFormatError):
    pass


class TraceIntegrityError(TraceFormatError):
    pass


_MAGIC = b"SILT"
_VERSION = 1


@dataclass(frozen=True)
class TrialSpec:
    query_id: QueryId
    stream: StreamSpec | None = None
    csv_path: str | None = None
    csv_schema: Schema | None = None
    batch: int = 1
    drop_first: int = 0

    def __post_init__(self):
        if (self.stream is None) == (self.csv_path is None):
            raise TrialSpecError("exactly one of stream/csv_path must be given")
        if self.csv_path is not None and self.csv_schema is None:
            raise TrialSpecError("csv_path needs csv_schema")
        if self.batch < 1:
            raise TrialSpecError("batch must be >= 1")
        if self.drop_first < 0:
            raise TrialSpecError("drop_first must be >= 0")

    def source_description(self) -> dict:
        if self.stream is not None:
            return {
                "kind": "generated",
                "schema": self.stream.schema.value,
                "base_count": self.stream.base_count,
                "seed": self.stream.seed,
                "iterations": self.stream.iterations,
            }
        return {"kind": "csv", "path": self.csv_path, "schema": self.csv_schema.value}


@dataclass
class LatencyTrace:
    deltas: array
    clock_kind: ClockKind
    calibration: Calibration | None
    trial: dict
    host: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.deltas)

    def __eq__(self, other):
        if not isinstance(other, LatencyTrace):
            return NotImplemented
        return (
            self.deltas == other.deltas
            and self.clock_kind == other.clock_kind
            and self.calibration == other.calibration
            and self.trial == other.trial
            and self.host == other.host
        )


@dataclass(frozen=True)
class TrialResult:
    trace: LatencyTrace
    snapshot: object


@functools.lru_cache(maxsize=1)
def _cpu_model() -> str:
    try:
        with open("/proc/cpuinfo", encoding="ascii", errors="replace") as fh:
            for line in fh:
                if line.startswith("model name"):
                    return line.split(":", 1)[1].strip()
    except OSError:
        pass
    return "unknown"


def materialize(spec: TrialSpec):
    if spec.stream is not None:
        return datagen.generate(spec.stream)
    return datagen.load_csv(spec.csv_path, spec.csv_schema)


def run_trial(
    spec: TrialSpec,
    clock: Clock,
    scenario_label: str = "",
    *,
    view=None,
    calibration: Calibration | None = None,
    tree_seed: int = 0,
) -> TrialResult:
    """Run one measurement trial and return its trace plus final snapshot.

    `view` may be supplied pre-built (tests couple a fake clock to the
    view's op counter); otherwise it is created from the spec.
    """
    events = materialize(spec)
    total = len(events)
    if total == 0:
        raise TrialSpecError("empty stream")
    if total % spec.batch != 0:
        raise TrialSpecError(f"batch {spec.batch} does not divide {total} events")
    count = total // spec.batch
    if spec.drop_first >= count:
        raise TrialSpecError("drop_first leaves no samples")

    if clock.kind is ClockKind.CYCLE_COUNTER and calibration is None:
        calibration = calibrate(clock)

    if view is None:
        view = make_view(spec.query_id, tree_seed=tree_seed)
    buf = array("q", bytes(8 * count))

    # host metadata gathered up front: nothing after this point may open
    # files or write to the console until the measured loop is done
    cpu_model = _cpu_model()
    try:
        pinned = sorted(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        pinned = []

    read = clock.read
    apply_event = view.apply
    if spec.batch == 1:
        i = 0
        for event in events:
            before = read()
            apply_event(event)
            buf[i] = read() - before
            i += 1
    else:
        it = iter(events)
        batch = spec.batch
        for i in range(count):
            before = read()
            for _ in range(batch):
                apply_event(next(it))
            buf[i] = read() - before

    deltas = buf[spec.drop_first:] if spec.drop_first else buf
    for idx, delta in enumerate(deltas):
        if delta <= 0:
            raise TrialIntegrityError(
                f"non-positive latency delta at index {idx}: {delta}"
            )

    trace = LatencyTrace(
        deltas=array("Q", deltas),
        clock_kind=clock.kind,
        calibration=calibration,
        trial={
            "query": spec.query_id.value,
            "source": spec.source_description(),
            "batch": spec.batch,
            "drop_first": spec.drop_first,
            "total_events": total,
        },
        host={
            "cpu_model": cpu_model,
            "affinity": pinned,
            "scenario": scenario_label,
            "clock": clock.description,
        },
    )
    return TrialResult(trace=trace, snapshot=view.snapshot())


def export_trace(trace: LatencyTrace, path) -> None:
    import json

    header = json.dumps(
        {
            "clock_kind": trace.clock_kind.value,
            "calibration": trace.calibration.to_json() if trace.calibration else None,
            "trial": trace.trial,
            "host": trace.host,
        },
        sort_keys=True,
    ).encode("utf-8")
    body = bytearray()
    body += _MAGIC
    body += struct.pack("<H", _VERSION)
    body += struct.pack("<I", len(header))
    body += header
    body += struct.pack("<Q", len(trace.deltas))
    body += trace.deltas.tobytes() if not _needs_byteswap() else _swapped(trace.deltas)
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as fh:
        fh.write(bytes(body))


def import_trace(path) -> LatencyTrace:
    import json

    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 2 + 4 + 8 + 4:
        raise TraceFormatError("trace file truncated")
    if blob[:4] != _MAGIC:
        raise TraceFormatError("bad magic, not a trace file")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version > _VERSION:
        raise TraceVersionError(f"trace format version {version} is newer than supported {_VERSION}")
    (crc_stored,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(blob[:-4]) != crc_stored:
        raise TraceIntegrityError("trace checksum mismatch")
    (header_len,) = struct.unpack_from("<I", blob, 6)
    offset = 10
    header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    (count,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    end = offset + 8 * count
    if end != len(blob) - 4:
        raise TraceFormatError("trace delta section truncated")
    deltas = array("Q")
    deltas.frombytes(blob[offset:end])
    if _needs_byteswap():
        deltas.byteswap()
    calibration = header["calibration"]
    return LatencyTrace(
        deltas=deltas,
        clock_kind=ClockKind(header["clock_kind"]),
        calibration=Calibration.from_json(calibration) if calibration else None,
        trial=header["trial"],
        host=header["host"],
    )


def export_deltas_csv(trace: LatencyTrace, path) -> None:
    """One delta per line, for external tools."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for delta in trace.deltas:
            fh.write(f"{delta}\n")


def _needs_byteswap() -> bool:
    import sys

    return sys.byteorder != "little"


def _swapped(deltas: array) -> bytes:
    copy = array("Q", deltas)
    copy.byteswap()
    return copy.tobytes()
