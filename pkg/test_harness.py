#!/usr/bin/env python3
"""
Tests for the Monte Carlo engine, the sweep CSV and the property suite.
"""

import csv
import io
import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from mash_sim.config import SystemConfig
from mash_sim.core import (
    CSV_COLUMNS,
    SweepPlan,
    SweepRunner,
    TrialResult,
    aggregate,
    no_jammer,
    run_sweep,
    run_trial,
    simulate_frame,
    write_csv_atomic,
)
from mash_sim.jammers import JammerSpec
from mash_sim.receivers import RECEIVERS, ReceiverFamily, register_receiver
from mash_sim.utils import InvalidParameterError, SingularSystemError, SweepFailedError, ThroughputMonitor
from mash_sim.verify import VerifyOptions, run_verify

CFG = SystemConfig()


def _ber(jammer: JammerSpec, receiver: str, snr_db: float, frames: int) -> float:
    return aggregate([run_trial(CFG, jammer, receiver, snr_db, i) for i in range(frames)]).ber


def _quick_plan(frames: int = 3) -> SweepPlan:
    return SweepPlan(
        cfg=CFG,
        snr_points_db=[0.0, 10.0],
        jammer_specs=[JammerSpec.from_name('barrage'), JammerSpec.from_name('multidata', 10)],
        receiver_names=['mash-l', 'baseline-lmmse'],
        frames_per_point=frames,
    )


def test_trials_are_deterministic():
    spec = JammerSpec.from_name('dynamic', 10)
    first = run_trial(CFG, spec, 'mash-l', 5.0, 7)
    again = run_trial(CFG, spec, 'mash-l', 5.0, 7)
    assert first == again
    assert first.trial_index == 7
    assert run_trial(CFG, spec, 'mash-l', 5.0, 8).trial_seed != first.trial_seed


def test_trials_are_paired_across_receivers():
    """Same trial index, same channels and bits, whatever the receiver."""
    spec = JammerSpec.from_name('barrage')
    mash = simulate_frame(CFG, spec, 'mash-l', 10.0, 4)
    baseline = simulate_frame(CFG, spec, 'baseline-lmmse', 10.0, 4)
    assert np.array_equal(mash.channels.ue_channel, baseline.channels.ue_channel)
    assert np.array_equal(mash.signals.data_bits, baseline.signals.data_bits)
    assert mash.noise_var == pytest.approx(baseline.noise_var, rel=1e-12)

    clean = run_trial(CFG, no_jammer(), 'unmitigated', 0.0, 2)
    reference = run_trial(CFG, spec, 'jammerless', 0.0, 2)
    assert clean.bit_errors == reference.bit_errors
    assert clean.mer_num == pytest.approx(reference.mer_num)


def test_aggregate():
    results = [
        TrialResult(bit_errors=2, bits_total=100, mer_num=1.0, mer_den=10.0, est_rank=1, trial_seed=0),
        TrialResult(bit_errors=0, bits_total=100, mer_num=3.0, mer_den=10.0, est_rank=3, trial_seed=1),
    ]
    metrics = aggregate(results)
    assert metrics.ber == pytest.approx(0.01)
    assert metrics.mer_percent == pytest.approx(20.0)
    assert metrics.mean_est_rank == pytest.approx(2.0)
    assert metrics.frames == 2

    with pytest.raises(InvalidParameterError, match="empty"):
        aggregate([])


def test_csv_schema():
    plan = SweepPlan(cfg=CFG, snr_points_db=[10.0], jammer_specs=[JammerSpec.from_name('barrage')],
                     receiver_names=['mash-l'], frames_per_point=10)
    rows = list(csv.reader(io.StringIO(run_sweep(plan))))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2
    assert rows[1][:4] == ['barrage', 'mash-l', '10', '10']
    assert rows[1][7] == '0'
    assert float(rows[1][4]) < 0.01


def test_sweep_is_independent_of_parallelism():
    plan = _quick_plan()
    serial = run_sweep(plan, parallelism=1)
    parallel = run_sweep(plan, parallelism=4)
    assert serial == parallel
    assert len(serial.strip().splitlines()) == 1 + 2 * 2 * 2


def test_runner_reports_progress_and_throughput():
    plan = _quick_plan(frames=2)
    seen = []
    monitor = ThroughputMonitor()
    outcomes = SweepRunner(parallelism=2, monitor=monitor).run(plan, progress=lambda done, total: seen.append((done, total)))

    assert len(outcomes) == 8
    assert seen[-1] == (16, 16)
    summary = monitor.get_performance_summary()
    assert summary['trials_processed'] == 16
    assert summary['failed_trials'] == 0


def test_failing_trials_abort_the_sweep():
    def broken(frame, pilots, noise_var, options):
        raise SingularSystemError("broken receiver")

    register_receiver('broken', ReceiverFamily.BASELINE, broken)
    try:
        plan = SweepPlan(cfg=CFG, snr_points_db=[10.0], jammer_specs=[no_jammer()],
                         receiver_names=['broken'], frames_per_point=3)
        with pytest.raises(SweepFailedError, match="3 of 3"):
            run_sweep(plan)
    finally:
        RECEIVERS.pop('broken')


def test_plan_validation():
    plan = SweepPlan(cfg=CFG, snr_points_db=[], jammer_specs=[no_jammer()], receiver_names=['mash-l'])
    with pytest.raises(InvalidParameterError):
        plan.validate()
    with pytest.raises(InvalidParameterError):
        SweepRunner(parallelism=0)


def test_atomic_csv_write():
    with tempfile.TemporaryDirectory() as tmp:
        target = Path(tmp) / "out" / "sweep.csv"
        write_csv_atomic(target, "a,b\n1,2\n")
        write_csv_atomic(target, "a,b\n3,4\n")
        assert target.read_text(encoding='utf-8') == "a,b\n3,4\n"
        assert [p.name for p in target.parent.iterdir()] == ["sweep.csv"]


def test_trace_stage_norms():
    trace = simulate_frame(CFG, JammerSpec.from_name('pilot'), 'mash-l', math.inf, 0, detect=False)
    norms = trace.stage_norms()
    assert norms['N0'] == 0.0
    assert 'S_D error' not in norms
    assert norms['J W'] ** 2 == pytest.approx(1000.0 * norms['H X'] ** 2 / 16, rel=1e-9)


def test_ber_decreases_with_snr():
    bers = [_ber(no_jammer(), 'jammerless', snr, 3) for snr in (-10.0, 0.0, 10.0)]
    assert bers[0] > bers[1] > bers[2]


def test_mash_performs_alike_against_single_antenna_jammers():
    bers = {name: _ber(JammerSpec.from_name(name), 'mash-l', 0.0, 20)
            for name in ('barrage', 'data', 'pilot', 'sparse')}
    reference = bers['barrage']
    for name, ber in bers.items():
        assert 0.8 <= ber / reference <= 1.25, f"{name}: {ber} vs barrage {reference}"


def test_mash_matches_baseline_against_barrage():
    barrage = JammerSpec.from_name('barrage')
    ratio = _ber(barrage, 'mash-l', 0.0, 20) / _ber(barrage, 'baseline-lmmse', 0.0, 20)
    assert 0.8 <= ratio <= 1.25


def test_baseline_fails_against_multidata_jammer():
    spec = JammerSpec.from_name('multidata', 10)
    mash = aggregate([run_trial(CFG, spec, 'mash-l', 10.0, i) for i in range(20)])
    baseline = aggregate([run_trial(CFG, spec, 'baseline-lmmse', 10.0, i) for i in range(20)])
    assert baseline.ber >= 10 * mash.ber
    assert baseline.mer_percent > 100.0
    assert mash.mer_percent < 50.0


def test_repeat_jammer_gains_nothing_over_eigenbeam():
    """Multi-antenna jammers are held against the multi-antenna barrage jammer."""
    repeat = _ber(JammerSpec.from_name('repeat', 10), 'mash-l', 10.0, 20)
    eigenbeam = _ber(JammerSpec.from_name('eigenbeam', 10), 'mash-l', 10.0, 20)
    assert 0.5 <= repeat / eigenbeam <= 2.0


def test_mitigation_beats_doing_nothing():
    barrage = JammerSpec.from_name('barrage')
    assert _ber(barrage, 'mash-l', 0.0, 10) < _ber(barrage, 'unmitigated', 0.0, 10)
    assert _ber(no_jammer(), 'baseline-lmmse', 10.0, 10) <= 2 * _ber(no_jammer(), 'jammerless', 10.0, 10) + 5e-4


def test_verify_passes_with_secret_codebooks():
    options = VerifyOptions(instances=5, duality_instances=10, codebooks=400, form_instances=50)
    report = run_verify(CFG, options)
    assert report.passed, [(c.name, c.statistic, c.detail) for c in report.failures()]
    assert len(report.checks) == 1 + 8 + 1 + 1 + 8 + 1


def test_verify_flags_permutation_codebooks():
    options = VerifyOptions(instances=2, duality_instances=2, codebooks=400, form_instances=2,
                            codebook_kind='permutation')
    checks = {check.name: check for check in run_verify(CFG, options).checks}
    assert not checks["temporal Haar uniformity"].passed
    assert checks["embed/raise duality"].passed


def test_verify_names_redundancy_precondition():
    options = VerifyOptions(instances=3, duality_instances=2, codebooks=50, form_instances=2)
    checks = {check.name: check for check in run_verify(CFG.replace(redundancy=4), options).checks}
    nulling = checks["noiseless nulling (eigenbeam)"]
    assert not nulling.passed
    assert "R ≥ I*" in nulling.detail


def run_all_tests():
    """Run all tests."""
    print("=" * 60)
    print("MASH Simulator - Harness Tests")
    print("=" * 60)

    tests = [
        test_trials_are_deterministic,
        test_trials_are_paired_across_receivers,
        test_aggregate,
        test_csv_schema,
        test_sweep_is_independent_of_parallelism,
        test_runner_reports_progress_and_throughput,
        test_failing_trials_abort_the_sweep,
        test_plan_validation,
        test_atomic_csv_write,
        test_trace_stage_norms,
        test_ber_decreases_with_snr,
        test_mash_performs_alike_against_single_antenna_jammers,
        test_mash_matches_baseline_against_barrage,
        test_baseline_fails_against_multidata_jammer,
        test_repeat_jammer_gains_nothing_over_eigenbeam,
        test_mitigation_beats_doing_nothing,
        test_verify_passes_with_secret_codebooks,
        test_verify_flags_permutation_codebooks,
        test_verify_names_redundancy_precondition,
    ]
    for test in tests:
        test()
        print(f"{test.__name__} ✓")

    print("All harness tests passed! ✓")


if __name__ == "__main__":
    run_all_tests()
