#!/usr/bin/env python3
"""
Tests for the air interface: channels, frames, layouts and normalizations.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))

from mash_sim.airlink import (
    add_noise,
    gen_channels,
    gen_frame_signals,
    hadamard_pilots,
    layout_baseline,
    layout_mash,
    qpsk_map,
    scale_jammer,
    training_positions,
)
from mash_sim.codebook import derive_codebook
from mash_sim.config import SystemConfig
from mash_sim.linalg import gaussian_matrix
from mash_sim.utils import CannotNormalizeError, InvalidParameterError, InvalidShapeError

CFG = SystemConfig()


def test_channels_have_power_control():
    rng = np.random.default_rng(21)
    channels = gen_channels(CFG, rng)
    assert channels.ue_channel.shape == (64, 16)
    assert channels.jammer_channel.shape == (64, 10)

    low, high = 10 ** (-3 / 20), 10 ** (3 / 20)
    assert np.all((channels.ue_gains >= low) & (channels.ue_gains <= high))


def test_qpsk_gray_mapping():
    symbols = qpsk_map(np.array([0, 0, 0, 1, 1, 0, 1, 1]))
    expected = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2)
    assert_allclose(symbols, expected)
    assert_allclose(np.abs(symbols), 1.0)


def test_hadamard_pilots_are_orthogonal():
    pilots = hadamard_pilots(16)
    assert_allclose(pilots @ pilots.conj().T, 16 * np.eye(16))
    assert set(np.unique(pilots.real)) == {-1.0, 1.0}

    with pytest.raises(InvalidParameterError, match="power of 2"):
        hadamard_pilots(12)


def test_frame_signals_shapes():
    signals = gen_frame_signals(CFG, np.random.default_rng(22))
    assert signals.pilots.shape == (16, 16)
    assert signals.data.shape == (16, 68)
    assert signals.data_bits.size == 16 * 68 * 2
    assert signals.payload.shape == (16, 84)
    assert_allclose(qpsk_map(signals.data_bits).reshape(16, 68), signals.data)


def test_training_positions_are_evenly_spread():
    expected = [0, 6, 12, 18, 25, 31, 37, 43, 50, 56, 62, 68, 75, 81, 87, 93]
    assert_array_equal(training_positions(100, 16), expected)


def test_baseline_layout_interleaves_zero_samples():
    signals = gen_frame_signals(CFG, np.random.default_rng(23))
    layout = layout_baseline(signals, CFG)

    positions = np.concatenate([layout.training_idx, layout.pilot_idx, layout.data_idx])
    assert_array_equal(np.sort(positions), np.arange(100))
    assert_array_equal(layout.tx[:, layout.training_idx], 0)
    assert_array_equal(layout.tx[:, layout.pilot_idx], signals.pilots)
    assert_array_equal(layout.tx[:, layout.data_idx], signals.data)

    with pytest.raises(InvalidShapeError):
        layout_baseline(signals, CFG.replace(frame_len=101))


def test_mash_layout_keeps_energy():
    signals = gen_frame_signals(CFG, np.random.default_rng(24))
    tx = layout_mash(signals, derive_codebook(b"k", 100, 16))
    assert tx.shape == (16, 100)
    assert math.isclose(np.linalg.norm(tx), np.linalg.norm(signals.payload), rel_tol=1e-12)


def test_scale_jammer_hits_rho():
    rng = np.random.default_rng(25)
    channels = gen_channels(CFG, rng)
    tx = layout_baseline(gen_frame_signals(CFG, rng), CFG).tx
    raw = gaussian_matrix(10, 100, 1.0, rng)

    for rho_db in (0.0, 30.0):
        waveform = scale_jammer(raw, channels.jammer_channel, channels.ue_channel, tx, rho_db)
        energy = np.linalg.norm(channels.jammer_channel @ waveform) ** 2
        target = 10 ** (rho_db / 10) * np.linalg.norm(channels.ue_channel @ tx) ** 2 / 16
        assert math.isclose(energy, target, rel_tol=1e-9)

    with pytest.raises(CannotNormalizeError):
        scale_jammer(np.zeros((10, 100)), channels.jammer_channel, channels.ue_channel, tx, 30.0)


def test_noise_follows_snr():
    rng = np.random.default_rng(26)
    channels = gen_channels(CFG, rng)
    tx = layout_baseline(gen_frame_signals(CFG, rng), CFG).tx
    clean = channels.ue_channel @ tx

    received, noise_var = add_noise(clean, channels.ue_channel, tx, 10.0, rng)
    expected = np.linalg.norm(clean) ** 2 / (64 * 100 * 10.0)
    assert math.isclose(noise_var, expected, rel_tol=1e-12)
    measured = np.linalg.norm(received - clean) ** 2 / (64 * 100)
    assert abs(measured - noise_var) < 0.05 * noise_var

    noiseless, zero = add_noise(clean, channels.ue_channel, tx, math.inf, rng)
    assert zero == 0.0
    assert_array_equal(noiseless, clean)

    with pytest.raises(InvalidParameterError):
        add_noise(clean, channels.ue_channel, tx, math.nan, rng)
    with pytest.raises(InvalidParameterError, match="inf"):
        add_noise(clean, channels.ue_channel, tx, -math.inf, rng)


def run_all_tests():
    """Run all tests."""
    print("=" * 60)
    print("MASH Simulator - Air Interface Tests")
    print("=" * 60)

    tests = [
        test_channels_have_power_control,
        test_qpsk_gray_mapping,
        test_hadamard_pilots_are_orthogonal,
        test_frame_signals_shapes,
        test_training_positions_are_evenly_spread,
        test_baseline_layout_interleaves_zero_samples,
        test_mash_layout_keeps_energy,
        test_scale_jammer_hits_rho,
        test_noise_follows_snr,
    ]
    for test in tests:
        test()
        print(f"{test.__name__} ✓")

    print("All air interface tests passed! ✓")


if __name__ == "__main__":
    run_all_tests()
