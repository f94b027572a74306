"""
Monte Carlo engine: single trials, metric aggregation and parameter sweeps.
"""

import csv
import io
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .airlink import (
    BaselineLayout,
    ChannelRealization,
    FrameSignals,
    add_noise,
    gen_channels,
    gen_frame_signals,
    layout_baseline,
    layout_mash,
    scale_jammer,
)
from .codebook import SecretCodebook, derive_codebook, raise_frame
from .config import SystemConfig
from .jammers import JammerContext, JammerKind, JammerSpec, gen_jammer_waveform
from .receivers import (
    DetectionResult,
    RaisedFrame,
    ReceiverEntry,
    ReceiverOptions,
    estimate_rank,
    get_receiver,
)
from .utils import (
    CannotNormalizeError,
    InvalidParameterError,
    MashError,
    MissingContextError,
    SweepFailedError,
    ThroughputMonitor,
    trial_seed_sequence,
    trial_streams,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('jammer', 'receiver', 'snr_db', 'frames', 'ber',
               'mer_percent', 'mean_est_rank', 'trial_errors')
MAX_TRIAL_ERROR_FRACTION = 1e-3

# Child streams of one trial, in spawn order
_CHANNEL, _SIGNAL, _JAMMER, _NOISE = range(4)


@dataclass
class TrialResult:
    """Error counts and MER terms of one frame."""
    bit_errors: int
    bits_total: int
    mer_num: float
    mer_den: float
    est_rank: int
    trial_seed: int
    trial_index: int = 0


@dataclass
class CellMetrics:
    """Aggregated metrics of one (jammer, receiver, SNR) cell."""
    ber: float
    mer_percent: float
    mean_est_rank: float
    frames: int


@dataclass
class FrameTrace:
    """Every intermediate quantity of one simulated frame."""
    cfg: SystemConfig
    jammer: JammerSpec
    receiver: ReceiverEntry
    trial_index: int
    trial_seed: int
    channels: ChannelRealization
    signals: FrameSignals
    layout: BaselineLayout
    codebook: Optional[SecretCodebook]
    tx: np.ndarray
    waveform: np.ndarray
    received: np.ndarray
    noise_var: float
    frame: RaisedFrame
    detection: Optional[DetectionResult]
    jammer_silent: bool = False

    @property
    def interference(self) -> np.ndarray:
        return self.channels.jammer_channel @ self.waveform

    def result(self) -> TrialResult:
        """Reduce the trace to the counts the sweep accumulates."""
        detection = self.detection
        if detection is None:
            raise MissingContextError("frame was simulated without detection")
        est_rank = detection.est_rank
        if est_rank is None:
            est_rank = estimate_rank(self.frame.training, self.noise_var,
                                     self.cfg.rank_factor, self.frame.numerical_floor())
        return TrialResult(
            bit_errors=int(np.count_nonzero(detection.bits != self.signals.data_bits)),
            bits_total=int(self.signals.data_bits.size),
            mer_num=float(np.linalg.norm(detection.symbols - self.signals.data)),
            mer_den=float(np.linalg.norm(self.signals.data)),
            est_rank=int(est_rank),
            trial_seed=self.trial_seed,
            trial_index=self.trial_index,
        )

    def stage_norms(self) -> Dict[str, float]:
        """Frobenius norms per pipeline stage, for the trial dump."""
        channels = self.channels
        clean = channels.ue_channel @ self.tx
        norms = {
            'H': np.linalg.norm(channels.ue_channel),
            'J': np.linalg.norm(channels.jammer_channel),
            'S_T': np.linalg.norm(self.signals.pilots),
            'S_D': np.linalg.norm(self.signals.data),
            'X': np.linalg.norm(self.tx),
            'H X': np.linalg.norm(clean),
            'W': np.linalg.norm(self.waveform),
            'J W': np.linalg.norm(self.interference),
            'Y': np.linalg.norm(self.received),
            'N0': self.noise_var,
            'Y_J': np.linalg.norm(self.frame.training),
            'Y_T': np.linalg.norm(self.frame.pilot),
            'Y_D': np.linalg.norm(self.frame.data),
        }
        if self.detection is not None:
            norms['S_D estimate'] = np.linalg.norm(self.detection.symbols)
            norms['S_D error'] = np.linalg.norm(self.detection.symbols - self.signals.data)
            norms.update(self.detection.diagnostics)
        return {name: float(value) for name, value in norms.items()}


@dataclass
class SweepPlan:
    """Grid of (jammer, receiver, SNR) cells, each run for frames_per_point trials."""
    cfg: SystemConfig
    snr_points_db: Sequence[float]
    jammer_specs: Sequence[JammerSpec]
    receiver_names: Sequence[str]
    frames_per_point: int = 200

    def validate(self):
        if self.frames_per_point < 1:
            raise InvalidParameterError(f"frames_per_point must be at least 1, got {self.frames_per_point}")
        if not self.snr_points_db or not self.jammer_specs or not self.receiver_names:
            raise InvalidParameterError("sweep plan needs at least one SNR point, jammer and receiver")
        self.cfg.validate()
        for name in self.receiver_names:
            get_receiver(name)

    def cells(self) -> List[Tuple[JammerSpec, str, float]]:
        return [(jammer, receiver, float(snr))
                for jammer in self.jammer_specs
                for receiver in self.receiver_names
                for snr in self.snr_points_db]


def receiver_options(cfg: SystemConfig) -> ReceiverOptions:
    return ReceiverOptions(rank_factor=cfg.rank_factor, lmmse_form=cfg.lmmse_form,
                           chest_noise_term=cfg.chest_noise_term)


def simulate_frame(cfg: SystemConfig, jammer: JammerSpec, receiver: Union[str, ReceiverEntry],
                   snr_db: float, trial_index: int,
                   codebook: Optional[SecretCodebook] = None, detect: bool = True) -> FrameTrace:
    """
    Run the whole uplink for one frame and keep every intermediate result.

    channels -> frame signals -> layout (MASH or interleaved) -> jammer
    waveform -> rho scaling -> noise -> raising (MASH only) -> receiver.

    Args:
        cfg: Scenario; ``jammer_antennas`` is taken from the jammer spec
        jammer: Jammer behavior (kind NONE for a clean channel)
        receiver: Receiver name or registry entry
        snr_db: Average SNR in dB (inf for no noise)
        trial_index: Selects the trial's random substreams
        codebook: Use this codebook instead of deriving one from the secret
        detect: Run the receiver; False stops after raising

    Returns:
        FrameTrace of the frame
    """
    entry = get_receiver(receiver) if isinstance(receiver, str) else receiver
    jammed = jammer.is_active and not entry.jammer_free
    scenario = cfg.replace(jammer_antennas=jammer.antennas, snr_db=float(snr_db))
    scenario.validate()

    trial_seed = int(trial_seed_sequence(scenario.master_seed, trial_index).generate_state(1, np.uint64)[0])
    streams = trial_streams(scenario.master_seed, trial_index, 4)

    channels = gen_channels(scenario, streams[_CHANNEL])
    signals = gen_frame_signals(scenario, streams[_SIGNAL])
    layout = layout_baseline(signals, scenario)

    if entry.uses_mash:
        if codebook is None:
            frame_index = trial_index if scenario.codebook_refresh else 0
            codebook = derive_codebook(scenario.secret_bytes, scenario.frame_len,
                                       scenario.redundancy, frame_index)
        tx = layout_mash(signals, codebook)
    else:
        codebook = None
        tx = layout.tx

    ue_channel = channels.ue_channel
    jammer_channel = channels.jammer_channel
    clean = ue_channel @ tx

    waveform = np.zeros((jammer.antennas, scenario.frame_len), dtype=complex)
    jammer_silent = False
    if jammed:
        ctx = JammerContext(training_idx=layout.training_idx, pilot_idx=layout.pilot_idx,
                            data_idx=layout.data_idx, tx=tx, jammer_channel=jammer_channel)
        raw = gen_jammer_waveform(jammer, ctx, scenario.frame_len, streams[_JAMMER])
        try:
            waveform = scale_jammer(raw, jammer_channel, ue_channel, tx, scenario.rho_db)
        except CannotNormalizeError:
            logger.debug(f"Trial {trial_index}: {jammer.kind.value} jammer silent, recorded as jammer-off")
            jammer_silent = True

    received, noise_var = add_noise(clean + jammer_channel @ waveform, ue_channel, tx,
                                    scenario.snr_db, streams[_NOISE])

    if entry.uses_mash:
        frame = RaisedFrame.from_raised(raise_frame(received, codebook),
                                        scenario.redundancy, scenario.pilot_len)
    else:
        frame = RaisedFrame.from_layout(received, layout)

    detection = None
    if detect:
        detection = entry.detect(frame, signals.pilots, noise_var, receiver_options(scenario))

    return FrameTrace(
        cfg=scenario, jammer=jammer, receiver=entry, trial_index=trial_index,
        trial_seed=trial_seed, channels=channels, signals=signals, layout=layout,
        codebook=codebook, tx=tx, waveform=waveform, received=received,
        noise_var=noise_var, frame=frame, detection=detection, jammer_silent=jammer_silent,
    )


def run_trial(cfg: SystemConfig, jammer: JammerSpec, receiver: Union[str, ReceiverEntry],
              snr_db: float, trial_index: int) -> TrialResult:
    """One frame reduced to its TrialResult; deterministic in (master_seed, trial_index)."""
    return simulate_frame(cfg, jammer, receiver, snr_db, trial_index).result()


def aggregate(results: Sequence[TrialResult]) -> CellMetrics:
    """
    Combine trials: BER over all bits, MER as a ratio of summed norms.

    Raises:
        InvalidParameterError: no results
    """
    if not results:
        raise InvalidParameterError("cannot aggregate an empty list of trial results")

    bit_errors = sum(r.bit_errors for r in results)
    bits_total = sum(r.bits_total for r in results)
    mer_num = math.fsum(r.mer_num for r in results)
    mer_den = math.fsum(r.mer_den for r in results)

    return CellMetrics(
        ber=bit_errors / bits_total,
        mer_percent=100.0 * mer_num / mer_den,
        mean_est_rank=sum(r.est_rank for r in results) / len(results),
        frames=len(results),
    )


@dataclass
class CellOutcome:
    """Results of one cell, with the number of excluded trials."""
    jammer: str
    receiver: str
    snr_db: float
    results: List[TrialResult] = field(default_factory=list)
    trial_errors: int = 0

    def metrics(self) -> Optional[CellMetrics]:
        return aggregate(self.results) if self.results else None


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def format_csv(outcomes: Sequence[CellOutcome]) -> str:
    """Render cells as CSV with the fixed column order and 6 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for outcome in outcomes:
        metrics = outcome.metrics()
        if metrics is None:
            ber = mer = rank = 'nan'
            frames = 0
        else:
            ber, mer, rank = _fmt(metrics.ber), _fmt(metrics.mer_percent), _fmt(metrics.mean_est_rank)
            frames = metrics.frames
        writer.writerow([outcome.jammer, outcome.receiver, _fmt(outcome.snr_db), frames,
                         ber, mer, rank, outcome.trial_errors])
    return buffer.getvalue()


def write_csv_atomic(path: Path, text: str):
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


class SweepRunner:
    """
    Run sweep plans on a bounded worker pool.

    Work items are single trials; results are collected in submission
    order, so the output does not depend on the number of workers.
    """

    def __init__(self, parallelism: int = 4, monitor: Optional[ThroughputMonitor] = None):
        """
        Initialize the sweep runner.

        Args:
            parallelism: Number of worker threads
            monitor: Optional throughput monitor fed with every trial
        """
        if parallelism < 1:
            raise InvalidParameterError(f"parallelism must be at least 1, got {parallelism}")
        self.parallelism = parallelism
        self.monitor = monitor
        self.logger = logging.getLogger(__name__)

    def _run_one(self, item: Tuple[int, JammerSpec, ReceiverEntry, float, int, SystemConfig]):
        cell_index, jammer, entry, snr_db, trial_index, cfg = item
        start = time.time()
        try:
            result = run_trial(cfg, jammer, entry, snr_db, trial_index)
            error = None
        except (MashError, np.linalg.LinAlgError) as e:
            result = None
            error = f"{type(e).__name__}: {e}"
        if self.monitor:
            self.monitor.record_trial(time.time() - start, failed=error is not None)
        return cell_index, trial_index, result, error

    def run(self, plan: SweepPlan,
            progress: Optional[Callable[[int, int], None]] = None) -> List[CellOutcome]:
        """
        Execute every trial of the plan.

        Args:
            plan: Sweep grid
            progress: Called with (finished, total) after each trial

        Returns:
            One CellOutcome per cell in plan order

        Raises:
            SweepFailedError: more than 0.1 % of the trials raised
        """
        plan.validate()
        cells = plan.cells()
        outcomes = [CellOutcome(jammer=jammer.kind.value, receiver=receiver, snr_db=snr)
                    for jammer, receiver, snr in cells]
        items = [(index, jammer, get_receiver(receiver), snr, trial, plan.cfg)
                 for index, (jammer, receiver, snr) in enumerate(cells)
                 for trial in range(plan.frames_per_point)]
        total = len(items)

        self.logger.info(f"Sweep: {len(cells)} cells x {plan.frames_per_point} frames "
                         f"on {self.parallelism} workers")

        if self.monitor:
            self.monitor.start_monitoring()
        try:
            with ThreadPoolExecutor(max_workers=self.parallelism) as executor:
                for finished, (cell_index, trial_index, result, error) in enumerate(
                        executor.map(self._run_one, items), start=1):
                    outcome = outcomes[cell_index]
                    if error is None:
                        outcome.results.append(result)
                    else:
                        outcome.trial_errors += 1
                        self.logger.warning(f"Trial {trial_index} of {outcome.jammer}/"
                                            f"{outcome.receiver}@{outcome.snr_db:g} dB excluded: {error}")
                    if progress:
                        progress(finished, total)
        finally:
            if self.monitor:
                self.monitor.stop_monitoring()

        for outcome in outcomes:
            metrics = outcome.metrics()
            if metrics is not None:
                self.logger.debug(f"{outcome.jammer}/{outcome.receiver}@{outcome.snr_db:g} dB: "
                                  f"BER={metrics.ber:.3e} MER={metrics.mer_percent:.1f}%")

        failed = sum(o.trial_errors for o in outcomes)
        if failed > MAX_TRIAL_ERROR_FRACTION * total:
            raise SweepFailedError(f"{failed} of {total} trials raised errors")
        self.logger.info(f"Sweep finished: {total - failed} trials, {failed} excluded")
        return outcomes

    def run_sweep(self, plan: SweepPlan,
                  progress: Optional[Callable[[int, int], None]] = None) -> str:
        """Execute the plan and render the CSV document."""
        return format_csv(self.run(plan, progress))


def run_sweep(plan: SweepPlan, parallelism: int = 1) -> str:
    """CSV of the whole plan; byte-identical for every parallelism level."""
    return SweepRunner(parallelism).run_sweep(plan)


def no_jammer() -> JammerSpec:
    """Spec of a clean channel."""
    return JammerSpec(kind=JammerKind.NONE, antennas=1)
