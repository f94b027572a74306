"""
Jammer models.

Every jammer transmits w_k = A_k w~_k at sample k; the kinds below fix how
A_k and w~_k evolve over a frame. Jammers that time their bursts do so on
the nominal baseline sample positions: they never learn the MASH codebook.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from .linalg import compact_svd, gaussian_matrix
from .utils import InvalidParameterError, InvalidShapeError, MissingContextError


class JammerKind(Enum):
    """Jammer behaviors, valued by their stable CLI names."""
    NONE = "none"
    BARRAGE = "barrage"
    DATA = "data"
    PILOT = "pilot"
    SPARSE = "sparse"
    EIGENBEAM = "eigenbeam"
    MULTIDATA = "multidata"
    DYNAMIC = "dynamic"
    REPEAT = "repeat"


SINGLE_ANTENNA_KINDS = frozenset({JammerKind.BARRAGE, JammerKind.DATA,
                                  JammerKind.PILOT, JammerKind.SPARSE})
BARRAGE_KINDS = frozenset({JammerKind.BARRAGE, JammerKind.EIGENBEAM})


@dataclass(frozen=True)
class JammerSpec:
    """One jammer behavior and its parameters."""
    kind: JammerKind
    antennas: int = 10
    sparse_fraction: float = 0.1
    active_row_cap: int = 8
    hold_prob: float = 0.95
    repeat_delay: int = 1

    def __post_init__(self):
        if self.kind in SINGLE_ANTENNA_KINDS:
            object.__setattr__(self, 'antennas', 1)

        if self.antennas < 1:
            raise InvalidParameterError(f"jammer needs at least one antenna, got {self.antennas}")
        if not 0 < self.sparse_fraction <= 1:
            raise InvalidParameterError(f"sparse_fraction must be in (0, 1], got {self.sparse_fraction}")
        if not 0 <= self.hold_prob <= 1:
            raise InvalidParameterError(f"hold_prob must be in [0, 1], got {self.hold_prob}")
        if self.active_row_cap < 1:
            raise InvalidParameterError(f"active_row_cap must be positive, got {self.active_row_cap}")
        if self.kind == JammerKind.DYNAMIC and self.active_row_cap > self.antennas:
            raise InvalidParameterError(
                f"active_row_cap ({self.active_row_cap}) exceeds the antenna count ({self.antennas})")
        if self.repeat_delay < 1:
            raise InvalidParameterError(f"repeat_delay must be at least 1, got {self.repeat_delay}")

    @property
    def is_active(self) -> bool:
        return self.kind != JammerKind.NONE

    @classmethod
    def from_name(cls, name: str, antennas: int = 10, **params) -> "JammerSpec":
        """
        Build a spec from its CLI name.

        Args:
            name: One of the JammerKind values (e.g. "barrage", "dynamic")
            antennas: I for the multi-antenna kinds
            **params: Other JammerSpec fields

        Returns:
            JammerSpec; the dynamic jammer's row cap is clipped to I
        """
        try:
            kind = JammerKind(name.strip().lower())
        except ValueError as e:
            valid = ', '.join(k.value for k in JammerKind)
            raise InvalidParameterError(f"unknown jammer {name!r}; expected one of: {valid}") from e

        if kind == JammerKind.DYNAMIC and 'active_row_cap' not in params:
            params['active_row_cap'] = min(8, antennas)
        return cls(kind=kind, antennas=antennas, **params)


@dataclass
class JammerContext:
    """What a jammer may observe: nominal baseline positions, X and J."""
    training_idx: np.ndarray
    pilot_idx: np.ndarray
    data_idx: np.ndarray
    tx: Optional[np.ndarray] = None
    jammer_channel: Optional[np.ndarray] = None


def is_barrage(kind: JammerKind) -> bool:
    """Whether the kind's temporal extension is uniform on the unit sphere without any codebook."""
    return kind in BARRAGE_KINDS


def dynamic_beamformers(spec: JammerSpec, frame_len: int, rng: np.random.Generator) -> List[np.ndarray]:
    """
    Per-sample beamforming matrices A_k of the dynamic jammer.

    Each draw activates min(active_row_cap, I) uniformly chosen rows with
    i.i.d. CN(0, 1) entries; A_{k+1} = A_k with probability hold_prob.
    Held matrices are the same object, so ``len({id(a) for a in ...})``
    counts the distinct draws.
    """
    antennas = spec.antennas
    support_size = min(spec.active_row_cap, antennas)

    def draw() -> np.ndarray:
        support = rng.choice(antennas, size=support_size, replace=False)
        beamformer = np.zeros((antennas, antennas), dtype=complex)
        beamformer[support] = gaussian_matrix(support_size, antennas, 1.0, rng)
        return beamformer

    beamformers = [draw()]
    for _ in range(1, frame_len):
        if rng.random() < spec.hold_prob:
            beamformers.append(beamformers[-1])
        else:
            beamformers.append(draw())
    return beamformers


def _bursts(antennas: int, frame_len: int, columns: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    waveform = np.zeros((antennas, frame_len), dtype=complex)
    waveform[:, columns] = gaussian_matrix(antennas, len(columns), 1.0, rng)
    return waveform


def gen_jammer_waveform(spec: JammerSpec, ctx: JammerContext, frame_len: int,
                        rng: np.random.Generator) -> np.ndarray:
    """
    Generate the unnormalized I x L waveform W_raw of one frame.

    Args:
        spec: Jammer behavior
        ctx: Nominal positions plus X (repeat) and J (eigenbeam)
        frame_len: L
        rng: Random stream

    Returns:
        W_raw, to be scaled with ``airlink.scale_jammer``
    """
    kind = spec.kind
    antennas = spec.antennas

    if kind == JammerKind.NONE:
        return np.zeros((antennas, frame_len), dtype=complex)

    if kind == JammerKind.BARRAGE:
        return gaussian_matrix(antennas, frame_len, 1.0, rng)

    if kind in (JammerKind.DATA, JammerKind.MULTIDATA):
        return _bursts(antennas, frame_len, ctx.data_idx, rng)

    if kind == JammerKind.PILOT:
        return _bursts(antennas, frame_len, ctx.pilot_idx, rng)

    if kind == JammerKind.SPARSE:
        count = math.ceil(spec.sparse_fraction * frame_len)
        columns = np.sort(rng.choice(frame_len, size=count, replace=False))
        return _bursts(antennas, frame_len, columns, rng)

    if kind == JammerKind.EIGENBEAM:
        if ctx.jammer_channel is None:
            raise MissingContextError("eigenbeamforming jammer needs its channel J")
        if ctx.jammer_channel.shape[1] != antennas:
            raise InvalidShapeError(
                f"J has {ctx.jammer_channel.shape[1]} columns, jammer has {antennas} antennas")
        right = compact_svd(ctx.jammer_channel).right
        return right @ gaussian_matrix(right.shape[1], frame_len, 1.0, rng)

    if kind == JammerKind.DYNAMIC:
        beamformers = dynamic_beamformers(spec, frame_len, rng)
        symbols = gaussian_matrix(antennas, frame_len, 1.0, rng)
        return np.stack([a @ symbols[:, k] for k, a in enumerate(beamformers)], axis=1)

    if kind == JammerKind.REPEAT:
        if ctx.tx is None:
            raise MissingContextError("repeat jammer needs the transmitted UE signal X")
        num_ues = ctx.tx.shape[0]
        if antennas > num_ues:
            raise InvalidParameterError(
                f"repeat jammer with I={antennas} antennas needs at least I UEs, got U={num_ues}")
        delay = spec.repeat_delay
        waveform = np.zeros((antennas, frame_len), dtype=complex)
        if delay < frame_len:
            waveform[:, delay:] = ctx.tx[:antennas, :frame_len - delay]
        return waveform

    raise InvalidParameterError(f"unsupported jammer kind: {kind}")
