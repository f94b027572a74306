"""
Jammer-mitigating receivers.

MASH receivers work on the raised frame ``[Y_J, Y_T, Y_D]``; the baselines
work on the interleaved frame, sliced into the same three blocks by the
nominal training/pilot/data positions. Receivers are looked up by name in
``RECEIVERS`` so the harness can run any of them, including ones
registered later with ``register_receiver``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .airlink import BaselineLayout
from .linalg import compact_svd, hermitian_part, hermitian_solve
from .utils import InvalidParameterError, InvalidShapeError, MissingContextError, MitigationInfeasibleError

NUMERICAL_FLOOR = 1e-10


@dataclass(frozen=True)
class ReceiverOptions:
    """Knobs shared by the receivers."""
    rank_factor: float = 2.0
    lmmse_form: str = "small"
    chest_noise_term: bool = False


@dataclass
class RaisedFrame:
    """
    Training (B x R), pilot (B x T) and data (B x D) blocks of a frame.

    Frames gathered from an interleaved layout keep the received matrix and
    the layout so the baseline receivers can be called on them.
    """
    training: np.ndarray
    pilot: np.ndarray
    data: np.ndarray
    received: Optional[np.ndarray] = None
    layout: Optional[BaselineLayout] = None

    @classmethod
    def from_raised(cls, raised: np.ndarray, redundancy: int, pilot_len: int) -> "RaisedFrame":
        """Slice a raised MASH frame column-wise into R, T and D blocks."""
        if redundancy + pilot_len > raised.shape[1]:
            raise InvalidShapeError(
                f"R + T = {redundancy + pilot_len} exceeds the frame length {raised.shape[1]}")
        return cls(
            training=raised[:, :redundancy],
            pilot=raised[:, redundancy:redundancy + pilot_len],
            data=raised[:, redundancy + pilot_len:],
        )

    @classmethod
    def from_layout(cls, received: np.ndarray, layout: BaselineLayout) -> "RaisedFrame":
        """Gather the blocks of an interleaved frame by their nominal positions."""
        return cls(
            training=received[:, layout.training_idx],
            pilot=received[:, layout.pilot_idx],
            data=received[:, layout.data_idx],
            received=received,
            layout=layout,
        )

    @property
    def bs_antennas(self) -> int:
        return self.training.shape[0]

    @property
    def redundancy(self) -> int:
        return self.training.shape[1]

    def numerical_floor(self) -> float:
        """Singular values below this are round-off, not interference."""
        energy = sum(np.linalg.norm(block) ** 2 for block in (self.training, self.pilot, self.data))
        return NUMERICAL_FLOOR * float(np.sqrt(energy))


@dataclass
class DetectionResult:
    """Soft data estimates, hard bits and per-stage diagnostics."""
    symbols: np.ndarray
    bits: np.ndarray
    est_rank: Optional[int] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """
    Hard QPSK decisions, inverse of ``airlink.qpsk_map``.

    A part that is exactly zero decodes as bit 0.
    """
    flat = np.asarray(symbols).reshape(-1)
    bits = np.empty((flat.size, 2), dtype=np.uint8)
    bits[:, 0] = flat.real < 0
    bits[:, 1] = flat.imag < 0
    return bits.reshape(-1)


def estimate_rank(training: np.ndarray, noise_var: float, factor: float = 2.0,
                  floor: float = 0.0) -> int:
    """
    Count singular values of the training block above factor * sqrt(B * N0).

    Args:
        training: B x R jammer-training block
        noise_var: N0
        factor: Multiple of the noise edge sqrt(B * N0)
        floor: Absolute lower bound on the threshold (round-off guard)

    Returns:
        Estimated interference rank I*, at most R
    """
    if noise_var < 0:
        raise InvalidParameterError(f"N0 must be non-negative, got {noise_var}")
    if factor <= 0:
        raise InvalidParameterError(f"rank factor must be positive, got {factor}")
    if training.size == 0:
        return 0

    threshold = max(factor * np.sqrt(training.shape[0] * noise_var), floor)
    singular_values = np.linalg.svd(training, compute_uv=False)
    return int(min(np.count_nonzero(singular_values > threshold), training.shape[1]))


def jammer_projector(training: np.ndarray, noise_var: float, factor: float = 2.0,
                     floor: float = 0.0) -> Tuple[np.ndarray, int]:
    """
    Projector onto the orthogonal complement of the estimated jammer subspace.

    Returns:
        (P, I*) with P = I_B - U U^H, U the I* leading left singular vectors
    """
    bs_antennas = training.shape[0]
    rank = estimate_rank(training, noise_var, factor, floor)
    if rank >= bs_antennas:
        raise MitigationInfeasibleError(
            f"estimated interference rank {rank} leaves no dimensions out of B={bs_antennas}")

    projector = np.eye(bs_antennas, dtype=complex)
    if rank:
        scope = compact_svd(training, rank_tol=0.0).left[:, :rank]
        projector -= scope @ scope.conj().T
    return projector, rank


def pilot_energy(pilots: np.ndarray) -> float:
    """c in S_T S_T^H = c I_U for orthogonal pilots."""
    return float(np.linalg.norm(pilots) ** 2 / pilots.shape[0])


def ls_channel_estimate(pilot_block: np.ndarray, pilots: np.ndarray) -> np.ndarray:
    """Unbiased LS estimate ``Y_T S_T^H / c``."""
    return pilot_block @ pilots.conj().T / pilot_energy(pilots)


def lmmse_equalize(channel: np.ndarray, data_block: np.ndarray, noise_var: float) -> np.ndarray:
    """``(H^H H + N0 I_U)^{-1} H^H Y_D``."""
    gram = hermitian_part(channel.conj().T @ channel) + noise_var * np.eye(channel.shape[1])
    return hermitian_solve(gram, channel.conj().T @ data_block)


def _result(symbols: np.ndarray, est_rank: Optional[int], **diagnostics: float) -> DetectionResult:
    return DetectionResult(symbols=symbols, bits=qpsk_demap(symbols), est_rank=est_rank,
                           diagnostics={k: float(v) for k, v in diagnostics.items()})


def _projection_detect(frame: RaisedFrame, pilots: np.ndarray, noise_var: float,
                       factor: float) -> DetectionResult:
    if frame.redundancy < 1:
        raise InvalidParameterError("projection receiver needs R >= 1 training samples")

    projector, rank = jammer_projector(frame.training, noise_var, factor, frame.numerical_floor())
    pilot_block = projector @ frame.pilot
    data_block = projector @ frame.data

    channel = ls_channel_estimate(pilot_block, pilots)
    symbols = lmmse_equalize(channel, data_block, noise_var)
    return _result(
        symbols, rank,
        training_energy=np.linalg.norm(frame.training) ** 2,
        projected_training_energy=np.linalg.norm(projector @ frame.training) ** 2,
        pilot_residual=np.linalg.norm(pilot_block - channel @ pilots),
    )


def receiver_mash_projection(frame: RaisedFrame, pilots: np.ndarray, noise_var: float,
                             factor: float = 2.0) -> DetectionResult:
    """
    MASH orthogonal-projection receiver.

    The I* leading left singular vectors of Y_J span the jammer scope; the
    projector nulls it in the pilot and data blocks, then LS channel
    estimation and LMMSE detection run on the projected blocks.
    """
    return _projection_detect(frame, pilots, noise_var, factor)


def _covariance_channel_estimate(frame: RaisedFrame, pilots: np.ndarray, noise_var: float,
                                 form: str, chest_noise_term: bool) -> np.ndarray:
    training = frame.training
    redundancy = frame.redundancy
    energy = pilot_energy(pilots)
    matched = frame.pilot @ pilots.conj().T / energy
    extra = noise_var if chest_noise_term else 0.0

    if form == 'large':
        covariance = training @ training.conj().T / redundancy
        system = np.eye(frame.bs_antennas) + (hermitian_part(covariance) + extra * np.eye(frame.bs_antennas)) / energy
        return hermitian_solve(hermitian_part(system), matched)

    # Woodbury: only an R x R system
    shrink = 1.0 + extra / energy
    inner = shrink * energy * redundancy * np.eye(redundancy) + training.conj().T @ training
    correction = training @ hermitian_solve(hermitian_part(inner), training.conj().T @ matched)
    return (matched - correction) / shrink


def _covariance_detect(frame: RaisedFrame, channel: np.ndarray, noise_var: float,
                       form: str) -> np.ndarray:
    training = frame.training
    redundancy = frame.redundancy
    num_ues = channel.shape[1]

    if form == 'large':
        covariance = training @ training.conj().T / redundancy
        system = channel @ channel.conj().T + noise_var * np.eye(frame.bs_antennas) + covariance
        return channel.conj().T @ hermitian_solve(hermitian_part(system), frame.data)

    # Push-through identity: a (U + R) x (U + R) system instead of B x B
    stacked = np.hstack([channel, training / np.sqrt(redundancy)])
    system = noise_var * np.eye(num_ues + redundancy) + stacked.conj().T @ stacked
    filt = hermitian_solve(hermitian_part(system), stacked.conj().T)
    return filt[:num_ues] @ frame.data


def _lmmse_detect(frame: RaisedFrame, pilots: np.ndarray, noise_var: float,
                  form: str, chest_noise_term: bool) -> DetectionResult:
    if frame.redundancy < 1:
        raise InvalidParameterError("LMMSE receiver needs R >= 1 training samples")
    if form not in ('large', 'small'):
        raise InvalidParameterError(f"LMMSE form must be 'large' or 'small', got {form!r}")

    channel = _covariance_channel_estimate(frame, pilots, noise_var, form, chest_noise_term)
    symbols = _covariance_detect(frame, channel, noise_var, form)
    return _result(
        symbols, None,
        training_energy=np.linalg.norm(frame.training) ** 2,
        pilot_residual=np.linalg.norm(frame.pilot - channel @ pilots),
    )


def receiver_mash_lmmse(frame: RaisedFrame, pilots: np.ndarray, noise_var: float,
                        form: str = "small", chest_noise_term: bool = False) -> DetectionResult:
    """
    MASH LMMSE receiver driven by C_J = Y_J Y_J^H / R.

    ``form="large"`` inverts the two B x B matrices directly; ``form="small"``
    uses the R x R and (U + R) x (U + R) rewrites. Both give the same
    estimate up to round-off. Thermal noise is left out of the channel
    estimator unless ``chest_noise_term`` is set.
    """
    return _lmmse_detect(frame, pilots, noise_var, form, chest_noise_term)


def receiver_baseline_lmmse(received: np.ndarray, layout: BaselineLayout, pilots: np.ndarray,
                            noise_var: float, form: str = "small",
                            chest_noise_term: bool = False) -> DetectionResult:
    """LMMSE baseline: covariance from the interleaved zero-symbol samples."""
    if layout.training_idx.size == 0:
        raise InvalidParameterError("LMMSE baseline needs a non-empty training period")
    frame = RaisedFrame.from_layout(received, layout)
    return _lmmse_detect(frame, pilots, noise_var, form, chest_noise_term)


def receiver_baseline_projection(received: np.ndarray, layout: BaselineLayout, pilots: np.ndarray,
                                 noise_var: float, factor: float = 2.0) -> DetectionResult:
    """Training-period projection without subspace embedding."""
    frame = RaisedFrame.from_layout(received, layout)
    return _projection_detect(frame, pilots, noise_var, factor)


def _jammerless_detect(frame: RaisedFrame, pilots: np.ndarray, noise_var: float) -> DetectionResult:
    channel = ls_channel_estimate(frame.pilot, pilots)
    symbols = lmmse_equalize(channel, frame.data, noise_var)
    return _result(symbols, None, pilot_residual=np.linalg.norm(frame.pilot - channel @ pilots))


def receiver_jammerless(received: np.ndarray, layout: BaselineLayout, pilots: np.ndarray,
                        noise_var: float) -> DetectionResult:
    """LS channel estimation and LMMSE detection; the training samples are ignored."""
    return _jammerless_detect(RaisedFrame.from_layout(received, layout), pilots, noise_var)


class ReceiverFamily(Enum):
    """Which frame layout a receiver expects."""
    MASH = "mash"
    BASELINE = "baseline"


DetectFn = Callable[[RaisedFrame, np.ndarray, float, ReceiverOptions], DetectionResult]


@dataclass(frozen=True)
class ReceiverEntry:
    """A named receiver: its layout family, whether it runs jammer-free, and its detector."""
    name: str
    family: ReceiverFamily
    detect: DetectFn
    jammer_free: bool = False

    @property
    def uses_mash(self) -> bool:
        return self.family == ReceiverFamily.MASH


RECEIVERS: Dict[str, ReceiverEntry] = {}


def register_receiver(name: str, family: ReceiverFamily, detect: DetectFn,
                      jammer_free: bool = False) -> ReceiverEntry:
    """Add (or replace) a receiver under a stable name."""
    entry = ReceiverEntry(name=name, family=family, detect=detect, jammer_free=jammer_free)
    RECEIVERS[name] = entry
    return entry


def get_receiver(name: str) -> ReceiverEntry:
    try:
        return RECEIVERS[name.strip().lower()]
    except KeyError as e:
        valid = ', '.join(RECEIVERS)
        raise InvalidParameterError(f"unknown receiver {name!r}; expected one of: {valid}") from e


def _interleaved(frame: RaisedFrame) -> Tuple[np.ndarray, BaselineLayout]:
    if frame.received is None or frame.layout is None:
        raise MissingContextError("baseline receivers need a frame gathered from an interleaved layout")
    return frame.received, frame.layout


def _baseline_lmmse(frame, pilots, n0, opt):
    received, layout = _interleaved(frame)
    return receiver_baseline_lmmse(received, layout, pilots, n0, opt.lmmse_form, opt.chest_noise_term)


def _baseline_projection(frame, pilots, n0, opt):
    received, layout = _interleaved(frame)
    return receiver_baseline_projection(received, layout, pilots, n0, opt.rank_factor)


def _jammerless(frame, pilots, n0, opt):
    received, layout = _interleaved(frame)
    return receiver_jammerless(received, layout, pilots, n0)


register_receiver('mash-p', ReceiverFamily.MASH,
                  lambda frame, pilots, n0, opt: receiver_mash_projection(frame, pilots, n0, opt.rank_factor))
register_receiver('mash-l', ReceiverFamily.MASH,
                  lambda frame, pilots, n0, opt: receiver_mash_lmmse(frame, pilots, n0, opt.lmmse_form,
                                                                     opt.chest_noise_term))
register_receiver('baseline-lmmse', ReceiverFamily.BASELINE, _baseline_lmmse)
register_receiver('baseline-projection', ReceiverFamily.BASELINE, _baseline_projection)
register_receiver('jammerless', ReceiverFamily.BASELINE, _jammerless, jammer_free=True)
register_receiver('unmitigated', ReceiverFamily.BASELINE, _jammerless)
