"""Apply, verify and tear down OS isolation scenarios.

Four independently-degradable features, applied in order: CPU shield
(exclusive cpuset partition, other tasks migrated out), interrupt
redirection (affinity masks excluding the target CPU), pinning of the
calling measurement thread, and SCHED_FIFO for it. Every feature records
whether it was applied, degraded (with the reason and a remediation
hint) or skipped; nothing fails silently and a failed feature is rolled
back before being reported, so no feature is ever left half-configured.

All state mutation happens through apply/teardown pairs; `dry_run`
collects the exact intended writes instead of performing them.
"""

import enum
import os
from dataclasses import dataclass, field
from pathlib import Path

# Module-level so tests can repoint them at fixture trees.
CPUSET_ROOT = Path("/sys/fs/cgroup/cpuset")
IRQ_ROOT = Path("/proc/irq")
SYS_CPU_ROOT = Path("/sys/devices/system/cpu")

SHIELD_GROUP = "silt_shield"
REST_GROUP = "silt_rest"


class IsolationError(Exception):
    pass


class ScenarioLabel(enum.Enum):
    NO_LOAD = "no-load"
    LOAD = "load"
    LOAD_FIFO = "load-fifo"
    LOAD_SHIELD = "load-shield"
    LOAD_SHIELD_FIFO = "load-shield-fifo"

    @property
    def with_load(self) -> bool:
        return self is not ScenarioLabel.NO_LOAD

    @property
    def with_fifo(self) -> bool:
        return self in (ScenarioLabel.LOAD_FIFO, ScenarioLabel.LOAD_SHIELD_FIFO)

    @property
    def with_shield(self) -> bool:
        return self in (ScenarioLabel.LOAD_SHIELD, ScenarioLabel.LOAD_SHIELD_FIFO)


@dataclass(frozen=True)
class ScenarioSpec:
    label: ScenarioLabel
    target_cpu: int
    fifo_priority: int = 80
    shield: bool = False
    redirect_irqs: bool = False
    fifo: bool = False

    def __post_init__(self):
        if not 1 <= self.fifo_priority <= 98:
            raise ValueError("fifo_priority must be in 1..98")
        if self.target_cpu < 0:
            raise ValueError("target_cpu must be >= 0")
        if self.shield != self.label.with_shield or self.fifo != self.label.with_fifo:
            raise ValueError(f"flags inconsistent with scenario label {self.label.value}")
        if self.redirect_irqs and not self.shield:
            raise ValueError("irq redirection is only part of shield scenarios")

    @classmethod
    def for_label(cls, label: ScenarioLabel, target_cpu: int, fifo_priority: int = 80):
        return cls(
            label=label,
            target_cpu=target_cpu,
            fifo_priority=fifo_priority,
            shield=label.with_shield,
            redirect_irqs=label.with_shield,
            fifo=label.with_fifo,
        )


@dataclass
class FeatureOutcome:
    status: str  # "applied" | "degraded" | "skipped"
    detail: str = ""

    def to_json(self):
        return {"status": self.status, "detail": self.detail}


@dataclass
class AppliedScenario:
    spec: ScenarioSpec
    achieved: dict = field(default_factory=dict)
    planned_writes: list = field(default_factory=list)
    dry_run: bool = False
    torn_down: bool = False
    teardown_errors: list = field(default_factory=list)
    # rollback bookkeeping (only for features that actually applied)
    _saved_affinity: set | None = None
    _saved_policy: tuple | None = None
    _moved_tasks: list = field(default_factory=list)
    _created_groups: list = field(default_factory=list)
    _saved_irqs: dict = field(default_factory=dict)
    _saved_default_irq: str | None = None

    def report(self) -> dict:
        return {
            "scenario": self.spec.label.value,
            "target_cpu": self.spec.target_cpu,
            "fifo_priority": self.spec.fifo_priority if self.spec.fifo else None,
            "dry_run": self.dry_run,
            "features": {name: out.to_json() for name, out in self.achieved.items()},
            "planned_writes": list(self.planned_writes),
        }


def _parse_cpu_list(text: str) -> set[int]:
    cpus = set()
    text = text.strip()
    if not text or text == "(null)":
        return cpus
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-", 1)
            cpus.update(range(int(lo), int(hi) + 1))
        else:
            cpus.add(int(part))
    return cpus


def _format_cpu_list(cpus) -> str:
    return ",".join(str(c) for c in sorted(cpus))


def _write_file(path: Path, value: str):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(value)


def _read_file(path: Path) -> str:
    with open(path, encoding="ascii") as fh:
        return fh.read().strip()


def _apply_shield(spec, applied):
    root = CPUSET_ROOT
    if not (root / "cpuset.cpus").exists():
        applied.achieved["shield"] = FeatureOutcome(
            "degraded", f"cpuset cgroup not available at {root}; mount cgroup v1 cpuset"
        )
        return
    try:
        all_cpus = _parse_cpu_list(_read_file(root / "cpuset.cpus"))
        mems = _read_file(root / "cpuset.mems")
    except OSError as exc:
        applied.achieved["shield"] = FeatureOutcome("degraded", f"cannot read cpuset root: {exc}")
        return
    if spec.target_cpu not in all_cpus:
        applied.achieved["shield"] = FeatureOutcome(
            "degraded", f"target cpu {spec.target_cpu} not in cpuset root {sorted(all_cpus)}"
        )
        return
    rest = all_cpus - {spec.target_cpu}
    if not rest:
        applied.achieved["shield"] = FeatureOutcome(
            "degraded", "no CPU left for the rest of the system"
        )
        return

    shield_dir = root / SHIELD_GROUP
    rest_dir = root / REST_GROUP
    if applied.dry_run:
        applied.planned_writes += [
            f"mkdir {shield_dir}",
            f"write {shield_dir}/cpuset.mems <- {mems!r}",
            f"write {shield_dir}/cpuset.cpus <- '{spec.target_cpu}'",
            f"mkdir {rest_dir}",
            f"write {rest_dir}/cpuset.mems <- {mems!r}",
            f"write {rest_dir}/cpuset.cpus <- {_format_cpu_list(rest)!r}",
            f"migrate pid {os.getpid()} -> {shield_dir}/cgroup.procs",
            f"migrate all other tasks from {root}/tasks -> {rest_dir}/tasks",
        ]
        applied.achieved["shield"] = FeatureOutcome("skipped", "dry run")
        return

    try:
        for group_dir, cpus in ((shield_dir, {spec.target_cpu}), (rest_dir, rest)):
            if not group_dir.exists():
                group_dir.mkdir()
            applied._created_groups.append(group_dir)
            _write_file(group_dir / "cpuset.mems", mems)
            _write_file(group_dir / "cpuset.cpus", _format_cpu_list(cpus))
        exclusive = shield_dir / "cpuset.cpu_exclusive"
        if exclusive.exists():
            try:
                _write_file(exclusive, "1")
            except OSError:
                pass  # exclusivity is best-effort; partition still shields

        me = os.getpid()
        _write_file(shield_dir / "cgroup.procs", str(me))
        applied._moved_tasks.append((shield_dir, me))

        unmovable = 0
        moved = 0
        for tid_text in _read_file(root / "tasks").split():
            tid = int(tid_text)
            if tid == me:
                continue
            try:
                _write_file(rest_dir / "tasks", str(tid))
            except OSError:
                unmovable += 1  # kernel thread or exited task
            else:
                applied._moved_tasks.append((rest_dir, tid))
                moved += 1
        applied.achieved["shield"] = FeatureOutcome(
            "applied", f"moved {moved} tasks off cpu {spec.target_cpu}, {unmovable} unmovable"
        )
    except OSError as exc:
        _rollback_shield(applied)
        hint = "requires root and a writable cpuset hierarchy"
        applied.achieved["shield"] = FeatureOutcome("degraded", f"{exc} ({hint})")


def _rollback_shield(applied):
    root = CPUSET_ROOT
    for group_dir, tid in reversed(applied._moved_tasks):
        try:
            _write_file(root / "tasks", str(tid))
        except OSError:
            pass  # task exited
    applied._moved_tasks.clear()
    for group_dir in reversed(applied._created_groups):
        try:
            # anything that joined the group after apply goes back to the root
            for tid_text in _read_file(group_dir / "tasks").split():
                try:
                    _write_file(root / "tasks", tid_text)
                except OSError:
                    pass
            group_dir.rmdir()
        except OSError as exc:
            applied.teardown_errors.append(f"cpuset group {group_dir}: {exc}")
    applied._created_groups.clear()


def _apply_irq(spec, applied):
    if not IRQ_ROOT.exists():
        applied.achieved["irq"] = FeatureOutcome(
            "skipped", f"no interrupt affinity interface at {IRQ_ROOT}"
        )
        return
    irq_dirs = sorted(
        (p for p in IRQ_ROOT.iterdir() if p.name.isdigit()), key=lambda p: int(p.name)
    )
    if not irq_dirs:
        applied.achieved["irq"] = FeatureOutcome(
            "skipped", f"{IRQ_ROOT} exposes no interrupts on this platform"
        )
        return
    default = IRQ_ROOT / "default_smp_affinity"
    if applied.dry_run:
        for irq_dir in irq_dirs:
            applied.planned_writes.append(
                f"write {irq_dir}/smp_affinity_list <- (current minus cpu {spec.target_cpu})"
            )
        if default.exists():
            applied.planned_writes.append(
                f"write {default} <- (current mask minus cpu {spec.target_cpu})"
            )
        applied.achieved["irq"] = FeatureOutcome("skipped", "dry run")
        return

    moved, immovable, untouched = 0, [], 0
    for irq_dir in irq_dirs:
        mask_file = irq_dir / "smp_affinity_list"
        try:
            raw = _read_file(mask_file)
            current = _parse_cpu_list(raw)
        except OSError:
            immovable.append(irq_dir.name)
            continue
        if spec.target_cpu not in current:
            untouched += 1
            continue
        remaining = current - {spec.target_cpu}
        if not remaining:
            immovable.append(f"{irq_dir.name} (only cpu)")
            continue
        try:
            _write_file(mask_file, _format_cpu_list(remaining))
        except OSError:
            immovable.append(irq_dir.name)
        else:
            applied._saved_irqs[irq_dir.name] = raw  # raw text restores bit-exact
            moved += 1
    if default.exists():
        try:
            raw = _read_file(default)
            mask = int(raw, 16)
            new_mask = mask & ~(1 << spec.target_cpu)
            if new_mask and new_mask != mask:
                _write_file(default, f"{new_mask:x}")
                applied._saved_default_irq = raw
        except OSError:
            immovable.append("default_smp_affinity")
    detail = f"{moved} redirected, {untouched} already elsewhere, immovable: {immovable or 'none'}"
    if moved or untouched:
        applied.achieved["irq"] = FeatureOutcome("applied", detail)
    else:
        applied.achieved["irq"] = FeatureOutcome(
            "degraded", detail + " (requires root to write irq masks)"
        )


def _rollback_irq(applied):
    for irq, saved in applied._saved_irqs.items():
        try:
            _write_file(IRQ_ROOT / irq / "smp_affinity_list", saved)
        except OSError as exc:
            applied.teardown_errors.append(f"irq {irq}: {exc}")
    applied._saved_irqs.clear()
    if applied._saved_default_irq is not None:
        try:
            _write_file(IRQ_ROOT / "default_smp_affinity", applied._saved_default_irq)
        except OSError as exc:
            applied.teardown_errors.append(f"default irq mask: {exc}")
        applied._saved_default_irq = None


def _apply_pin(spec, applied):
    if applied.dry_run:
        applied.planned_writes.append(f"sched_setaffinity(self, {{{spec.target_cpu}}})")
        applied.achieved["pin"] = FeatureOutcome("skipped", "dry run")
        return
    try:
        previous = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {spec.target_cpu})
    except OSError as exc:
        applied.achieved["pin"] = FeatureOutcome("degraded", f"{exc} (is the cpu online?)")
    else:
        applied._saved_affinity = previous
        applied.achieved["pin"] = FeatureOutcome("applied", f"pinned to cpu {spec.target_cpu}")


def _apply_fifo(spec, applied):
    if applied.dry_run:
        applied.planned_writes.append(
            f"sched_setscheduler(self, SCHED_FIFO, priority={spec.fifo_priority})"
        )
        applied.achieved["fifo"] = FeatureOutcome("skipped", "dry run")
        return
    try:
        prev_policy = os.sched_getscheduler(0)
        prev_prio = os.sched_getparam(0).sched_priority
        os.sched_setscheduler(0, os.SCHED_FIFO, os.sched_param(spec.fifo_priority))
    except OSError as exc:
        applied.achieved["fifo"] = FeatureOutcome(
            "degraded", f"{exc} (needs CAP_SYS_NICE and a kernel permitting SCHED_FIFO)"
        )
    else:
        applied._saved_policy = (prev_policy, prev_prio)
        applied.achieved["fifo"] = FeatureOutcome(
            "applied", f"SCHED_FIFO priority {spec.fifo_priority}"
        )


def apply_scenario(spec: ScenarioSpec, dry_run: bool = False) -> AppliedScenario:
    """Best-effort application of `spec`, feature by feature, in order."""
    applied = AppliedScenario(spec=spec, dry_run=dry_run)
    if spec.shield:
        _apply_shield(spec, applied)
    else:
        applied.achieved["shield"] = FeatureOutcome("skipped", "not requested by scenario")
    if spec.redirect_irqs:
        _apply_irq(spec, applied)
    else:
        applied.achieved["irq"] = FeatureOutcome("skipped", "not requested by scenario")
    _apply_pin(spec, applied)
    if spec.fifo:
        _apply_fifo(spec, applied)
    else:
        applied.achieved["fifo"] = FeatureOutcome("skipped", "not requested by scenario")
    return applied


def teardown(applied: AppliedScenario) -> None:
    """Restore everything apply_scenario changed; idempotent, never raises."""
    if applied.torn_down or applied.dry_run:
        applied.torn_down = True
        return
    if applied._saved_policy is not None:
        policy, prio = applied._saved_policy
        try:
            os.sched_setscheduler(0, policy, os.sched_param(prio))
        except OSError as exc:
            applied.teardown_errors.append(f"restore scheduler: {exc}")
        applied._saved_policy = None
    _rollback_irq(applied)
    # leave the shield before widening affinity: inside the partition the
    # kernel rejects cpus outside it, and cpuset migration resets affinity
    _rollback_shield(applied)
    if applied._saved_affinity is not None:
        try:
            os.sched_setaffinity(0, applied._saved_affinity)
        except OSError as exc:
            applied.teardown_errors.append(f"restore affinity: {exc}")
        applied._saved_affinity = None
    applied.torn_down = True


@dataclass
class VerificationCheck:
    name: str
    ok: bool
    expected: str
    actual: str

    def to_json(self):
        return {"name": self.name, "ok": self.ok, "expected": self.expected, "actual": self.actual}


@dataclass
class VerificationReport:
    checks: list
    warnings: list

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def mismatches(self):
        return [c for c in self.checks if not c.ok]

    def to_json(self):
        return {
            "ok": self.ok,
            "checks": [c.to_json() for c in self.checks],
            "warnings": list(self.warnings),
        }


def verify_scenario(applied: AppliedScenario) -> VerificationReport:
    """Diff live OS state against the scenario spec (not against intent)."""
    spec = applied.spec
    checks = []
    warnings = []

    try:
        affinity = os.sched_getaffinity(0)
    except OSError:
        affinity = set()
    checks.append(
        VerificationCheck(
            "pin",
            affinity == {spec.target_cpu},
            f"affinity == {{{spec.target_cpu}}}",
            f"affinity == {sorted(affinity)}",
        )
    )

    policy = os.sched_getscheduler(0)
    is_fifo = policy == os.SCHED_FIFO
    if spec.fifo:
        prio = os.sched_getparam(0).sched_priority
        checks.append(
            VerificationCheck(
                "fifo",
                is_fifo and prio == spec.fifo_priority,
                f"SCHED_FIFO priority {spec.fifo_priority}",
                f"policy={policy} priority={prio}",
            )
        )
    else:
        checks.append(
            VerificationCheck(
                "fifo", not is_fifo, "not SCHED_FIFO (no priority over tenants)", f"policy={policy}"
            )
        )

    if spec.shield:
        shield_dir = CPUSET_ROOT / SHIELD_GROUP
        rest_dir = CPUSET_ROOT / REST_GROUP
        try:
            shield_cpus = _parse_cpu_list(_read_file(shield_dir / "cpuset.cpus"))
            rest_cpus = _parse_cpu_list(_read_file(rest_dir / "cpuset.cpus"))
            member = str(os.getpid()) in _read_file(shield_dir / "cgroup.procs").split()
            ok = (
                shield_cpus == {spec.target_cpu}
                and spec.target_cpu not in rest_cpus
                and member
            )
            actual = (
                f"shield={sorted(shield_cpus)} rest={sorted(rest_cpus)} member={member}"
            )
        except OSError as exc:
            ok = False
            actual = f"unreadable: {exc}"
        checks.append(
            VerificationCheck(
                "shield",
                ok,
                f"cpu {spec.target_cpu} exclusive to measurement partition",
                actual,
            )
        )

    irq_outcome = applied.achieved.get("irq")
    if spec.redirect_irqs and irq_outcome is not None and irq_outcome.status != "skipped":
        offenders = []
        for irq_dir in IRQ_ROOT.iterdir():
            if not irq_dir.name.isdigit():
                continue
            if irq_dir.name in applied._saved_irqs or not applied._saved_irqs:
                try:
                    current = _parse_cpu_list(_read_file(irq_dir / "smp_affinity_list"))
                except OSError:
                    continue
                if spec.target_cpu in current:
                    offenders.append(irq_dir.name)
        applied_ok = irq_outcome.status == "applied"
        checks.append(
            VerificationCheck(
                "irq",
                applied_ok and not offenders,
                f"redirected irqs exclude cpu {spec.target_cpu}",
                f"moved={sorted(applied._saved_irqs)} still targeting: {offenders or 'none'}",
            )
        )

    _warn_smt_and_freq(spec.target_cpu, warnings)
    return VerificationReport(checks=checks, warnings=warnings)


def _warn_smt_and_freq(target_cpu: int, warnings: list):
    siblings_file = (
        SYS_CPU_ROOT / f"cpu{target_cpu}" / "topology" / "thread_siblings_list"
    )
    try:
        siblings = _parse_cpu_list(_read_file(siblings_file)) - {target_cpu}
        if siblings:
            warnings.append(
                f"SMT siblings of cpu {target_cpu} are online: {sorted(siblings)}; "
                "disable SMT for stable latencies"
            )
    except OSError:
        pass
    governor_file = SYS_CPU_ROOT / f"cpu{target_cpu}" / "cpufreq" / "scaling_governor"
    try:
        governor = _read_file(governor_file)
        if governor != "performance":
            warnings.append(
                f"cpu {target_cpu} frequency governor is {governor!r}; "
                "expect frequency-induced jitter"
            )
    except OSError:
        pass
    for boost_file, active in ((SYS_CPU_ROOT / "cpufreq" / "boost", "1"),
                               (SYS_CPU_ROOT / "intel_pstate" / "no_turbo", "0")):
        try:
            if _read_file(boost_file) == active:
                warnings.append("frequency boost is enabled; expect clock-speed jitter")
                break
        except OSError:
            continue


def snapshot_inspected_state(include_irqs: bool = True) -> dict:
    """Capture the OS state this module can mutate, for pristine-diff tests."""
    state = {}
    try:
        state["affinity"] = sorted(os.sched_getaffinity(0))
    except OSError:
        state["affinity"] = None
    state["policy"] = os.sched_getscheduler(0)
    state["priority"] = os.sched_getparam(0).sched_priority
    for name in (SHIELD_GROUP, REST_GROUP):
        group_dir = CPUSET_ROOT / name
        if group_dir.exists():
            try:
                state[f"cpuset:{name}"] = _read_file(group_dir / "cpuset.cpus")
            except OSError:
                state[f"cpuset:{name}"] = "present"
        else:
            state[f"cpuset:{name}"] = None
    if include_irqs and IRQ_ROOT.exists():
        irqs = {}
        for irq_dir in IRQ_ROOT.iterdir():
            if irq_dir.name.isdigit():
                try:
                    irqs[irq_dir.name] = _read_file(irq_dir / "smp_affinity_list")
                except OSError:
                    pass
        state["irqs"] = irqs
        default = IRQ_ROOT / "default_smp_affinity"
        if default.exists():
            try:
                state["default_irq"] = _read_file(default)
            except OSError:
                pass
    return state
