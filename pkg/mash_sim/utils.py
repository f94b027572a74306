"""
Shared plumbing: the error hierarchy, seeded random substreams and the
sweep throughput monitor.
"""

import hashlib
import threading
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
import psutil


class MashError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidDimensionError(MashError, ValueError):
    """A matrix dimension is out of range."""


class InvalidParameterError(MashError, ValueError):
    """A scalar or configuration parameter is out of range."""


class InvalidPartitionError(MashError, ValueError):
    """The redundancy R does not split the frame length L."""


class InvalidShapeError(MashError, ValueError):
    """Matrix shapes are not conformable."""


class SingularSystemError(MashError, np.linalg.LinAlgError):
    """A linear system is not positive definite."""


class ComputationError(MashError, np.linalg.LinAlgError):
    """A factorization failed to converge."""


class DegenerateInputError(MashError):
    """The input has no content to analyse (e.g. zero interference)."""


class CannotNormalizeError(MashError):
    """The jammer is silent for the whole frame and cannot be scaled."""


class MissingContextError(MashError):
    """A jammer needs context (channel, transmit signal) that was not given."""


class MitigationInfeasibleError(MashError):
    """The estimated interference rank leaves no dimensions for the UEs."""


class SweepFailedError(MashError):
    """Too many trials of a sweep raised errors."""


def trial_seed_sequence(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """
    Seed sequence of one Monte Carlo trial.

    Args:
        master_seed: Seed of the whole experiment
        trial_index: Index of the trial (frame) within a cell

    Returns:
        SeedSequence independent of every other (master_seed, trial_index) pair
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))


def trial_streams(master_seed: int, trial_index: int, count: int) -> List[np.random.Generator]:
    """Independent generators for the stages of one trial."""
    children = trial_seed_sequence(master_seed, trial_index).spawn(count)
    return [np.random.default_rng(child) for child in children]


def secret_stream(secret: bytes, frame_index: int = 0) -> np.random.Generator:
    """
    Deterministic generator expanded from a shared secret.

    The secret is hashed into the entropy of a SeedSequence; the frame index
    selects an independent child so the codebook can be refreshed per frame.
    """
    digest = hashlib.sha256(bytes(secret)).digest()
    entropy = int.from_bytes(digest, "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy, spawn_key=(frame_index,)))


@dataclass
class ThroughputStats:
    """Throughput statistics container."""
    trials_per_second: float = 0.0
    trial_time: float = 0.0
    cpu_usage: float = 0.0
    memory_usage: float = 0.0
    trials_processed: int = 0
    failed_trials: int = 0


class ThroughputMonitor:
    """
    Sweep throughput monitoring: trial rate plus process CPU and memory.
    """

    def __init__(self, update_interval: float = 1.0):
        self.update_interval = update_interval
        self.stats = ThroughputStats()
        self.start_time = time.time()
        self.last_update = self.start_time
        self.trial_times: List[float] = []
        self.max_trial_history = 500

        self.process = psutil.Process()
        self.cpu_percent = 0.0

        self._lock = threading.Lock()
        self._monitoring = False
        self._monitor_thread = None

    def start_monitoring(self):
        """Start background CPU/memory sampling."""
        if not self._monitoring:
            self._monitoring = True
            self.start_time = time.time()
            self._monitor_thread = threading.Thread(target=self._monitor_process, daemon=True)
            self._monitor_thread.start()

    def stop_monitoring(self):
        """Stop background sampling."""
        self._monitoring = False
        if self._monitor_thread:
            self._monitor_thread.join(timeout=1.0)
            self._monitor_thread = None

    def _monitor_process(self):
        while self._monitoring:
            try:
                self.cpu_percent = self.process.cpu_percent()
                self.stats.memory_usage = self.process.memory_info().rss / 1024 / 1024
                time.sleep(0.5)
            except Exception:
                pass

    def record_trial(self, trial_time: float, failed: bool = False):
        """
        Record one finished trial.

        Args:
            trial_time: Wall time spent in the trial, in seconds
            failed: Whether the trial raised and was excluded
        """
        with self._lock:
            self.trial_times.append(trial_time)
            if len(self.trial_times) > self.max_trial_history:
                self.trial_times.pop(0)

            self.stats.trials_processed += 1
            self.stats.failed_trials += int(failed)
            self.stats.trial_time = trial_time

            elapsed = time.time() - self.start_time
            if elapsed > 0:
                self.stats.trials_per_second = self.stats.trials_processed / elapsed

            current_time = time.time()
            if current_time - self.last_update >= self.update_interval:
                self.stats.cpu_usage = self.cpu_percent
                self.last_update = current_time

    def get_performance_summary(self) -> Dict[str, Any]:
        """
        Get a summary of the sweep throughput.

        Returns:
            Dictionary with throughput metrics
        """
        runtime = time.time() - self.start_time
        mean_trial = sum(self.trial_times) / len(self.trial_times) if self.trial_times else 0.0

        return {
            'trials_per_second': round(self.stats.trials_per_second, 2),
            'mean_trial_ms': round(mean_trial * 1000, 3),
            'cpu_usage_percent': round(self.stats.cpu_usage, 1),
            'memory_usage_mb': round(self.stats.memory_usage, 1),
            'trials_processed': self.stats.trials_processed,
            'failed_trials': self.stats.failed_trials,
            'runtime_seconds': round(runtime, 1),
        }


def parse_number_list(text: str) -> Tuple[float, ...]:
    """
    Parse a comma list ("0,5,10") or an inclusive range ("-10:15:5").

    "inf" is accepted for a noiseless point.
    """
    text = text.strip()
    if not text:
        raise InvalidParameterError("empty number list")

    if ':' in text:
        parts = [float(p) for p in text.split(':')]
        if len(parts) != 3 or parts[2] <= 0:
            raise InvalidParameterError(f"range must be start:stop:step with step > 0, got {text!r}")
        start, stop, step = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(max(count, 0)))

    return tuple(float(p) for p in text.split(',') if p.strip())
