"""
MASH Simulator - Secret Subspace Embedding Against Smart Jammers
Link-level Monte Carlo simulator of a jammed massive MU-MIMO uplink with
secret temporal subspace embedding and raising-based jammer mitigation.
"""

__version__ = "1.0.0"
__description__ = "Monte Carlo simulator for MASH jammer mitigation in massive MU-MIMO"

from .codebook import SecretCodebook, derive_codebook, embed, raise_frame, verify_barrage_transform
from .config import ConfigManager, SweepDefaults, SystemConfig
from .core import SweepPlan, SweepRunner, aggregate, run_sweep, run_trial, simulate_frame
from .jammers import JammerKind, JammerSpec, gen_jammer_waveform
from .receivers import RECEIVERS, get_receiver, register_receiver
from .utils import MashError, ThroughputMonitor
from .verify import VerifyOptions, run_verify

__all__ = [
    'SecretCodebook',
    'derive_codebook',
    'embed',
    'raise_frame',
    'verify_barrage_transform',
    'ConfigManager',
    'SweepDefaults',
    'SystemConfig',
    'SweepPlan',
    'SweepRunner',
    'aggregate',
    'run_sweep',
    'run_trial',
    'simulate_frame',
    'JammerKind',
    'JammerSpec',
    'gen_jammer_waveform',
    'RECEIVERS',
    'get_receiver',
    'register_receiver',
    'MashError',
    'ThroughputMonitor',
    'VerifyOptions',
    'run_verify',
]
