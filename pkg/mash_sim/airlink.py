"""
Air interface: channels, legitimate frames, frame layouts, noise and the
jammer/SNR power normalizations.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from .codebook import SecretCodebook, embed
from .config import SystemConfig
from .linalg import gaussian_matrix
from .utils import CannotNormalizeError, InvalidParameterError, InvalidShapeError

POWER_CONTROL_DB = 3.0
QPSK_SCALE = 1.0 / np.sqrt(2.0)


@dataclass
class ChannelRealization:
    """UE channel H (B x U), jammer channel J (B x I) and per-UE gains."""
    ue_channel: np.ndarray
    jammer_channel: np.ndarray
    ue_gains: np.ndarray


@dataclass
class FrameSignals:
    """Pilots S_T (U x T), QPSK data S_D (U x D) and the bits behind S_D."""
    pilots: np.ndarray
    data: np.ndarray
    data_bits: np.ndarray

    @property
    def payload(self) -> np.ndarray:
        """S = [S_T, S_D], the length-K signal each UE sends."""
        return np.hstack([self.pilots, self.data])


@dataclass
class BaselineLayout:
    """Interleaved (non-MASH) frame and the nominal sample positions."""
    tx: np.ndarray
    training_idx: np.ndarray
    pilot_idx: np.ndarray
    data_idx: np.ndarray


def gen_channels(cfg: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """
    Rayleigh channels with +/-3 dB UE power control.

    Column u of H is g_u * h_u with h_u ~ CN(0, I_B) and g_u = 10^(p_u/20),
    p_u uniform on [-3, 3] dB. J has i.i.d. CN(0, 1) entries.
    """
    gains_db = rng.uniform(-POWER_CONTROL_DB, POWER_CONTROL_DB, size=cfg.num_ues)
    gains = 10.0 ** (gains_db / 20.0)
    ue_channel = gaussian_matrix(cfg.bs_antennas, cfg.num_ues, 1.0, rng) * gains
    jammer_channel = gaussian_matrix(cfg.bs_antennas, cfg.jammer_antennas, 1.0, rng)
    return ChannelRealization(ue_channel=ue_channel, jammer_channel=jammer_channel, ue_gains=gains)


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """
    Gray-coded QPSK: (b0, b1) -> ((1 - 2 b0) + i (1 - 2 b1)) / sqrt(2).

    Args:
        bits: Flat array of 0/1 values, even length

    Returns:
        Flat array of len(bits) / 2 symbols
    """
    bits = np.asarray(bits, dtype=np.int8).reshape(-1, 2)
    return QPSK_SCALE * ((1 - 2 * bits[:, 0]) + 1j * (1 - 2 * bits[:, 1]))


def hadamard_pilots(num_ues: int) -> np.ndarray:
    """Sylvester Hadamard pilots with +/-1 entries (unit symbol energy)."""
    try:
        return scipy.linalg.hadamard(num_ues).astype(complex)
    except ValueError as e:
        raise InvalidParameterError(
            f"no Hadamard construction for U={num_ues} (needs a power of 2)") from e


def gen_frame_signals(cfg: SystemConfig, rng: np.random.Generator) -> FrameSignals:
    """Hadamard pilots and Gray-coded QPSK data from fresh random bits."""
    pilots = hadamard_pilots(cfg.num_ues)
    bits = rng.integers(0, 2, size=cfg.num_ues * cfg.data_len * 2, dtype=np.uint8)
    data = qpsk_map(bits).reshape(cfg.num_ues, cfg.data_len)
    return FrameSignals(pilots=pilots, data=data, data_bits=bits)


def layout_mash(signals: FrameSignals, codebook: SecretCodebook) -> np.ndarray:
    """MASH frame ``X = [S_T, S_D] @ C_par``."""
    payload = signals.payload
    if payload.shape[1] != codebook.payload_len:
        raise InvalidShapeError(
            f"T + D = {payload.shape[1]} does not match K = {codebook.payload_len}")
    return embed(payload, codebook)


def training_positions(frame_len: int, redundancy: int) -> np.ndarray:
    """Evenly spread training samples floor(j * L / R), j = 0..R-1."""
    return np.array([(j * frame_len) // redundancy for j in range(redundancy)], dtype=int)


def layout_baseline(signals: FrameSignals, cfg: SystemConfig) -> BaselineLayout:
    """
    Interleave [S_T, S_D] with R evenly spread zero (training) samples.
    """
    payload = signals.payload
    frame_len = cfg.frame_len
    if cfg.redundancy + payload.shape[1] != frame_len:
        raise InvalidShapeError(
            f"R + T + D = {cfg.redundancy + payload.shape[1]} does not match L = {frame_len}")

    training_idx = training_positions(frame_len, cfg.redundancy)
    remaining = np.setdiff1d(np.arange(frame_len), training_idx)
    pilot_len = signals.pilots.shape[1]

    tx = np.zeros((payload.shape[0], frame_len), dtype=complex)
    tx[:, remaining] = payload
    return BaselineLayout(
        tx=tx,
        training_idx=training_idx,
        pilot_idx=remaining[:pilot_len],
        data_idx=remaining[pilot_len:],
    )


def scale_jammer(raw_waveform: np.ndarray, jammer_channel: np.ndarray, ue_channel: np.ndarray,
                 tx: np.ndarray, rho_db: float) -> np.ndarray:
    """
    Scale W so that ||J W||^2 = 10^(rho/10) * ||H X||^2 / U.

    The realized frame energy stands in for the expectation over S.
    """
    interference_energy = np.linalg.norm(jammer_channel @ raw_waveform) ** 2
    if interference_energy == 0:
        raise CannotNormalizeError("jammer is silent for the whole frame")

    num_ues = ue_channel.shape[1]
    target = 10.0 ** (rho_db / 10.0) * np.linalg.norm(ue_channel @ tx) ** 2 / num_ues
    return np.sqrt(target / interference_energy) * raw_waveform


def add_noise(clean: np.ndarray, ue_channel: np.ndarray, tx: np.ndarray, snr_db: float,
              rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """
    Add white Gaussian noise at the average SNR ||H X||^2 / E||N||^2.

    Returns:
        (Y, N0); an infinite SNR returns the clean frame and N0 = 0
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise InvalidParameterError(f"snr_db must be a number or +inf, got {snr_db}")
    if math.isinf(snr_db):
        return clean.copy(), 0.0

    bs_antennas, frame_len = clean.shape
    signal_energy = np.linalg.norm(ue_channel @ tx) ** 2
    noise_var = signal_energy / (bs_antennas * frame_len * 10.0 ** (snr_db / 10.0))
    noise = gaussian_matrix(bs_antennas, frame_len, noise_var, rng)
    return clean + noise, float(noise_var)
