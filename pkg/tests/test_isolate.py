"""Isolation scenarios: flag wiring, degradation, dry runs, live round trips.

Unit tests run against fixture trees or the unprivileged subset; the
full shield/teardown round trip runs only where a writable cpuset v1
hierarchy exists (it restores everything it changes).
"""

import os

import pytest

from silt import isolate
from silt.isolate import (
    AppliedScenario,
    ScenarioLabel,
    ScenarioSpec,
    apply_scenario,
    snapshot_inspected_state,
    teardown,
    verify_scenario,
)


def _cpuset_writable() -> bool:
    root = isolate.CPUSET_ROOT
    return (root / "cpuset.cpus").exists() and os.access(root, os.W_OK)


def _ncpus() -> int:
    return len(os.sched_getaffinity(0))


privileged_shield = pytest.mark.skipif(
    not (_cpuset_writable() and os.geteuid() == 0 and _ncpus() >= 2),
    reason="needs root, >=2 cpus, writable cpuset v1 hierarchy",
)


class TestScenarioSpec:
    def test_labels_determine_flags(self):
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD_FIFO, target_cpu=1)
        assert spec.shield and spec.fifo and spec.redirect_irqs
        spec = ScenarioSpec.for_label(ScenarioLabel.NO_LOAD, target_cpu=0)
        assert not (spec.shield or spec.fifo or spec.redirect_irqs)
        assert not ScenarioLabel.NO_LOAD.with_load
        assert ScenarioLabel.LOAD_FIFO.with_load

    def test_inconsistent_flags_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(label=ScenarioLabel.NO_LOAD, target_cpu=0, shield=True)
        with pytest.raises(ValueError):
            ScenarioSpec(label=ScenarioLabel.LOAD_FIFO, target_cpu=0)  # fifo flag unset

    def test_priority_range(self):
        with pytest.raises(ValueError):
            ScenarioSpec.for_label(ScenarioLabel.LOAD_FIFO, 0, fifo_priority=0)
        with pytest.raises(ValueError):
            ScenarioSpec.for_label(ScenarioLabel.LOAD_FIFO, 0, fifo_priority=99)


class TestNoLoad:
    def test_only_pinning_applied(self):
        target = sorted(os.sched_getaffinity(0))[-1]
        applied = apply_scenario(ScenarioSpec.for_label(ScenarioLabel.NO_LOAD, target))
        try:
            assert applied.achieved["pin"].status == "applied"
            for feature in ("shield", "irq", "fifo"):
                assert applied.achieved[feature].status == "skipped"
                assert "not requested" in applied.achieved[feature].detail
            report = verify_scenario(applied)
            assert report.ok, report.mismatches()
        finally:
            teardown(applied)

    def test_verify_detects_external_unpin(self):
        cpus = os.sched_getaffinity(0)
        target = sorted(cpus)[-1]
        applied = apply_scenario(ScenarioSpec.for_label(ScenarioLabel.NO_LOAD, target))
        try:
            os.sched_setaffinity(0, cpus)  # operator interference
            report = verify_scenario(applied)
            assert not report.ok
            assert any(c.name == "pin" for c in report.mismatches())
        finally:
            teardown(applied)


class TestDegradation:
    def test_unprivileged_features_degrade_with_reasons(self, monkeypatch, tmp_path):
        monkeypatch.setattr(isolate, "CPUSET_ROOT", tmp_path / "does-not-exist")

        def deny(*args):
            raise PermissionError(1, "Operation not permitted")

        monkeypatch.setattr(os, "sched_setscheduler", deny)
        target = sorted(os.sched_getaffinity(0))[-1]
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD_FIFO, target)
        applied = apply_scenario(spec)
        try:
            assert applied.achieved["shield"].status == "degraded"
            assert "cpuset" in applied.achieved["shield"].detail
            assert applied.achieved["fifo"].status == "degraded"
            assert "CAP_SYS_NICE" in applied.achieved["fifo"].detail
            assert applied.achieved["pin"].status == "applied"
        finally:
            teardown(applied)
        assert applied.teardown_errors == []

    def test_teardown_restores_only_what_applied(self, monkeypatch, tmp_path):
        monkeypatch.setattr(isolate, "CPUSET_ROOT", tmp_path / "missing")
        calls = []
        real_setscheduler = os.sched_setscheduler

        def tracking(*args):
            calls.append(args)
            return real_setscheduler(*args)

        monkeypatch.setattr(os, "sched_setscheduler", tracking)
        target = sorted(os.sched_getaffinity(0))[-1]
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD, target)  # no fifo
        applied = apply_scenario(spec)
        teardown(applied)
        assert calls == []  # fifo never touched, so never restored


class TestIrqFixture:
    @pytest.fixture
    def irq_tree(self, monkeypatch, tmp_path):
        root = tmp_path / "irq"
        for irq, mask in (("3", "0-1"), ("7", "0"), ("9", "1")):
            (root / irq).mkdir(parents=True)
            (root / irq / "smp_affinity_list").write_text(mask)
        monkeypatch.setattr(isolate, "IRQ_ROOT", root)
        return root

    def test_masks_exclude_target_and_restore(self, irq_tree):
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD, target_cpu=1)
        applied = AppliedScenario(spec=spec)
        isolate._apply_irq(spec, applied)
        assert applied.achieved["irq"].status == "applied"
        assert (irq_tree / "3" / "smp_affinity_list").read_text() == "0"
        assert (irq_tree / "7" / "smp_affinity_list").read_text() == "0"  # untouched
        # irq 9 has only the target cpu: immovable, left alone
        assert (irq_tree / "9" / "smp_affinity_list").read_text() == "1"
        assert "9 (only cpu)" in applied.achieved["irq"].detail
        isolate._rollback_irq(applied)
        assert (irq_tree / "3" / "smp_affinity_list").read_text() == "0-1"

    def test_empty_interface_skips(self, monkeypatch, tmp_path):
        empty = tmp_path / "irq-empty"
        empty.mkdir()
        monkeypatch.setattr(isolate, "IRQ_ROOT", empty)
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD, target_cpu=1)
        applied = AppliedScenario(spec=spec)
        isolate._apply_irq(spec, applied)
        assert applied.achieved["irq"].status == "skipped"


class TestDryRun:
    def test_dry_run_writes_nothing(self):
        before = snapshot_inspected_state()
        target = sorted(os.sched_getaffinity(0))[-1]
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD_FIFO, target)
        applied = apply_scenario(spec, dry_run=True)
        assert snapshot_inspected_state() == before
        assert any("sched_setaffinity" in w for w in applied.planned_writes)
        assert any("sched_setscheduler" in w for w in applied.planned_writes)
        if (isolate.CPUSET_ROOT / "cpuset.cpus").exists() and _ncpus() >= 2:
            assert any("cpuset" in w for w in applied.planned_writes)
        teardown(applied)  # no-op
        assert snapshot_inspected_state() == before


class TestTeardown:
    def test_idempotent(self):
        target = sorted(os.sched_getaffinity(0))[-1]
        applied = apply_scenario(ScenarioSpec.for_label(ScenarioLabel.NO_LOAD, target))
        teardown(applied)
        state = snapshot_inspected_state()
        teardown(applied)
        assert snapshot_inspected_state() == state

    def test_apply_teardown_is_identity(self):
        before = snapshot_inspected_state()
        target = sorted(os.sched_getaffinity(0))[-1]
        applied = apply_scenario(ScenarioSpec.for_label(ScenarioLabel.LOAD_FIFO, target))
        teardown(applied)
        assert snapshot_inspected_state() == before


@privileged_shield
class TestLiveShield:
    def test_shield_round_trip(self):
        before = snapshot_inspected_state()
        target = sorted(os.sched_getaffinity(0))[-1]
        spec = ScenarioSpec.for_label(ScenarioLabel.LOAD_SHIELD_FIFO, target)
        applied = apply_scenario(spec)
        try:
            assert applied.achieved["shield"].status == "applied", applied.achieved
            report = verify_scenario(applied)
            shield_checks = [c for c in report.checks if c.name == "shield"]
            assert shield_checks and shield_checks[0].ok, report.to_json()
            pin_checks = [c for c in report.checks if c.name == "pin"]
            assert pin_checks[0].ok
        finally:
            teardown(applied)
        assert applied.teardown_errors == []
        assert snapshot_inspected_state() == before
