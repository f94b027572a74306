#!/usr/bin/env python3
"""
Tests for configuration loading, presets and the small utilities.
"""

import json
import math
import re
import sys
import tempfile
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from mash_sim.config import ConfigManager, SystemConfig, apply_preset, list_presets
from mash_sim.utils import InvalidParameterError, ThroughputMonitor, parse_number_list, trial_streams


def test_default_scenario():
    cfg = SystemConfig()
    cfg.validate()
    assert (cfg.bs_antennas, cfg.num_ues, cfg.jammer_antennas) == (64, 16, 10)
    assert (cfg.frame_len, cfg.redundancy, cfg.pilot_len) == (100, 16, 16)
    assert cfg.data_len == 68
    assert cfg.payload_len == 84
    assert cfg.rho_db == 30.0


def test_scenario_validation_names_the_invariant():
    cases = {
        'T = U': dict(pilot_len=8),
        'I < B': dict(jammer_antennas=64),
        'D >= 1': dict(redundancy=84),
        'lmmse_form': dict(lmmse_form='medium'),
        'rank_factor': dict(rank_factor=0.0),
        'rho_db': dict(rho_db=math.inf),
        'snr_db': dict(snr_db=-math.inf),
    }
    for fragment, changes in cases.items():
        with pytest.raises(InvalidParameterError, match=re.escape(fragment)):
            SystemConfig().replace(**changes).validate()


def test_toml_config_file():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "scenario.toml"
        path.write_text(
            'rho_db = 20.0\n'
            'master_seed = 9\n'
            'frames_per_point = 7\n'
            'jammers = ["barrage", "repeat"]\n'
            'snr_points_db = [0, 5]\n'
            'unknown_key = 1\n',
            encoding='utf-8',
        )
        manager = ConfigManager(path)

    assert manager.config.rho_db == 20.0
    assert manager.config.master_seed == 9
    assert manager.sweep.frames_per_point == 7
    assert manager.sweep.jammers == ('barrage', 'repeat')
    assert manager.sweep.snr_points_db == (0.0, 5.0)
    assert manager.validate_config()


def test_json_config_file():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "scenario.json"
        path.write_text(json.dumps({'lmmse_form': 'large', 'parallelism': 2}), encoding='utf-8')
        manager = ConfigManager(path)

    assert manager.config.lmmse_form == 'large'
    assert manager.sweep.parallelism == 2


def test_unreadable_config_file():
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "broken.toml"
        path.write_text('rho_db = = 3\n', encoding='utf-8')
        with pytest.raises(InvalidParameterError, match="cannot read config"):
            ConfigManager(path)


def test_overrides_skip_missing_values():
    manager = ConfigManager()
    manager.update_from_args(rho_db=None, master_seed=5, snr_db=3, receivers=['mash-p'])
    assert manager.config.rho_db == 30.0
    assert manager.config.master_seed == 5
    assert manager.config.snr_db == 3.0
    assert manager.sweep.receivers == ('mash-p',)

    manager.update_from_args(pilot_len=8)
    assert not manager.validate_config()

    manager.reset_to_defaults()
    assert manager.validate_config()
    assert manager.as_dict()['pilot_len'] == 16


def test_presets():
    assert set(list_presets()) == {'full', 'quick', 'acceptance'}

    manager = ConfigManager()
    assert apply_preset(manager, 'quick')
    assert manager.sweep.frames_per_point == 20
    assert manager.sweep.snr_points_db == (0.0, 10.0)
    assert not apply_preset(manager, 'missing')

    for name in list_presets():
        apply_preset(manager, name)
        assert manager.validate_config()


def test_number_lists():
    assert parse_number_list("0,5,10") == (0.0, 5.0, 10.0)
    assert parse_number_list("-10:15:5") == (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0)
    assert parse_number_list("inf") == (math.inf,)

    with pytest.raises(InvalidParameterError):
        parse_number_list("0:10:0")
    with pytest.raises(InvalidParameterError):
        parse_number_list(" ")


def test_trial_streams_are_reproducible():
    first = [rng.random() for rng in trial_streams(3, 5, 4)]
    again = [rng.random() for rng in trial_streams(3, 5, 4)]
    other = [rng.random() for rng in trial_streams(3, 6, 4)]
    assert first == again
    assert len(set(first)) == 4
    assert first != other


def test_throughput_monitor_counts_trials():
    monitor = ThroughputMonitor()
    monitor.start_monitoring()
    for failed in (False, False, True):
        monitor.record_trial(0.002, failed=failed)
    monitor.stop_monitoring()

    summary = monitor.get_performance_summary()
    assert summary['trials_processed'] == 3
    assert summary['failed_trials'] == 1
    assert summary['mean_trial_ms'] == pytest.approx(2.0)


def run_all_tests():
    """Run all tests."""
    print("=" * 60)
    print("MASH Simulator - Configuration Tests")
    print("=" * 60)

    tests = [
        test_default_scenario,
        test_scenario_validation_names_the_invariant,
        test_toml_config_file,
        test_json_config_file,
        test_unreadable_config_file,
        test_overrides_skip_missing_values,
        test_presets,
        test_number_lists,
        test_trial_streams_are_reproducible,
        test_throughput_monitor_counts_trials,
    ]
    for test in tests:
        test()
        print(f"{test.__name__} ✓")

    print("All configuration tests passed! ✓")


if __name__ == "__main__":
    run_all_tests()
