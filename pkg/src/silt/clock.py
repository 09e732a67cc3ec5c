"""Timing sources: CPU cycle counter, kernel monotonic clock, test doubles.

Cycle-counter ticks are not wall time; a Calibration (measured
ticks-per-nanosecond ratio as an exact rational) travels with every
cycle-counter trace. The counter is only offered when the OS advertises
it as invariant (constant rate, never stops); otherwise construction
fails loudly and the caller falls back to the monotonic clock.

The extension module backing the counter is compiled with the system C
compiler on first use and cached under ~/.cache/silt/.
"""

import hashlib
import importlib.util
import os
import platform
import statistics
import subprocess
import sysconfig
import time
import enum
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path


class ClockKind(enum.Enum):
    CYCLE_COUNTER = "cycle-counter"
    MONOTONIC_NS = "monotonic-ns"
    FAKE = "fake"


class ClockError(RuntimeError):
    pass


class ClockUnavailableError(ClockError):
    """Requested timing source cannot be provided on this platform."""


class CalibrationError(ClockError):
    pass


@dataclass(frozen=True)
class Calibration:
    """Measured tick/ns ratio over one busy-wait interval."""

    tick_delta: int
    ns_delta: int
    interval_ns: int

    def __post_init__(self):
        if self.tick_delta <= 0 or self.ns_delta <= 0:
            raise CalibrationError("calibration deltas must be positive")

    @property
    def ticks_per_ns(self) -> Fraction:
        return Fraction(self.tick_delta, self.ns_delta)

    def ticks_to_ns(self, ticks: float) -> float:
        return ticks * self.ns_delta / self.tick_delta

    def to_json(self) -> dict:
        return {
            "tick_delta": self.tick_delta,
            "ns_delta": self.ns_delta,
            "interval_ns": self.interval_ns,
        }

    @classmethod
    def from_json(cls, data) -> "Calibration":
        return cls(data["tick_delta"], data["ns_delta"], data["interval_ns"])


class Clock:
    """A timing source: `read()` returns a 64-bit tick, monotone per thread."""

    def __init__(self, kind: ClockKind, read, description: str):
        self.kind = kind
        self.read = read
        self.description = description


class FakeClock(Clock):
    """Test double replaying a scripted tick sequence.

    The script may be any iterable, including a generator polling live
    state (the complexity tests feed it a view's operation counter).
    """

    def __init__(self, script):
        it = iter(script)

        def read():
            try:
                return next(it)
            except StopIteration:
                raise ClockError("fake clock script exhausted") from None

        super().__init__(ClockKind.FAKE, read, "fake(scripted)")


_CACHE_DIR = Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "silt"
_EXT_MODULE = None


def _compile_extension():
    """Build (once) and import the cycle-counter extension."""
    global _EXT_MODULE
    if _EXT_MODULE is not None:
        return _EXT_MODULE
    source = Path(__file__).with_name("_cyclecounter.c")
    if not source.exists():
        raise ClockUnavailableError("cycle counter source missing from package")
    tag = hashlib.sha256(
        source.read_bytes() + sysconfig.get_config_var("EXT_SUFFIX").encode()
    ).hexdigest()[:16]
    out = _CACHE_DIR / f"_cyclecounter_{tag}{sysconfig.get_config_var('EXT_SUFFIX')}"
    if not out.exists():
        _CACHE_DIR.mkdir(parents=True, exist_ok=True)
        cc = sysconfig.get_config_var("CC") or "cc"
        cmd = [
            cc.split()[0],
            "-O2",
            "-shared",
            "-fPIC",
            f"-I{sysconfig.get_paths()['include']}",
            str(source),
            "-o",
            str(out) + ".tmp",
        ]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=120)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ClockUnavailableError(f"cannot compile cycle counter: {exc}") from exc
        if proc.returncode != 0:
            raise ClockUnavailableError(
                f"cycle counter compilation failed: {proc.stderr.strip()}"
            )
        os.replace(str(out) + ".tmp", out)
    spec = importlib.util.spec_from_file_location("silt._cyclecounter", out)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    _EXT_MODULE = module
    return module


def cycle_counter_support() -> tuple[bool, str]:
    """Probe whether the OS advertises an invariant cycle counter."""
    if platform.machine() not in ("x86_64", "i686", "i386", "AMD64"):
        return False, f"unsupported architecture {platform.machine()}"
    try:
        with open("/proc/cpuinfo", encoding="ascii", errors="replace") as fh:
            for line in fh:
                if line.startswith("flags"):
                    flags = set(line.split(":", 1)[1].split())
                    missing = {"constant_tsc", "nonstop_tsc"} - flags
                    if missing:
                        return False, f"counter not invariant (missing {sorted(missing)})"
                    return True, "invariant counter advertised"
    except OSError as exc:
        return False, f"cannot read cpu flags: {exc}"
    return False, "no cpu flag information"


def make_clock(
    kind: ClockKind,
    *,
    script=None,
    fenced: bool = True,
    require_invariant: bool = True,
) -> Clock:
    """Construct a clock of `kind`.

    `fenced` selects serialized cycle-counter reads (the default; recorded
    in the clock description so it lands in trace metadata).
    `require_invariant=False` skips the invariance probe for comparison
    experiments on machines that do not advertise the flags.
    """
    if kind is ClockKind.FAKE:
        if script is None:
            raise ValueError("fake clock needs a script")
        return FakeClock(script)
    if kind is ClockKind.MONOTONIC_NS:
        return Clock(ClockKind.MONOTONIC_NS, time.monotonic_ns, "clock_gettime(CLOCK_MONOTONIC)")
    ok, reason = cycle_counter_support()
    if not ok and require_invariant:
        raise ClockUnavailableError(f"cycle counter refused: {reason}")
    module = _compile_extension()
    read = module.read_fenced if fenced else module.read_plain
    label = "fenced(lfence/lfence)" if fenced else "unfenced"
    return Clock(ClockKind.CYCLE_COUNTER, read, f"cycle counter, {label}")


def calibrate(clock: Clock, duration_ns: int = 10**8, monotonic=time.monotonic_ns) -> Calibration:
    """Measure ticks/ns for `clock` over a busy-wait of `duration_ns`.

    Bracketed by monotonic reads; `monotonic` is injectable for tests.
    """
    if duration_ns < 10**7:
        raise ValueError("calibration interval must be at least 10 ms")
    read = clock.read
    ns_start = monotonic()
    tick_start = read()
    deadline = ns_start + duration_ns
    ns_end = monotonic()
    while ns_end < deadline:
        ns_end = monotonic()
    tick_end = read()
    ns_end = monotonic()
    tick_delta = tick_end - tick_start
    ns_delta = ns_end - ns_start
    if tick_delta <= 0 or ns_delta <= 0:
        raise CalibrationError(
            f"counter unstable during calibration (dticks={tick_delta}, dns={ns_delta})"
        )
    return Calibration(tick_delta, ns_delta, duration_ns)


@dataclass(frozen=True)
class OverheadStats:
    kind: ClockKind
    samples: int
    mean_ticks: float
    median_ticks: float
    max_ticks: int


def measure_overhead(clock: Clock, n: int) -> OverheadStats:
    """Statistics over n deltas between back-to-back reads."""
    if n < 1:
        raise ValueError("need at least one sample")
    read = clock.read
    stamps = [read() for _ in range(n + 1)]
    deltas = [stamps[i + 1] - stamps[i] for i in range(n)]
    return OverheadStats(
        kind=clock.kind,
        samples=n,
        mean_ticks=sum(deltas) / n,
        median_ticks=statistics.median(deltas),
        max_ticks=max(deltas),
    )
