"""
Property suite behind ``main.py verify``.

Each check draws seeded instances through the same pipeline the sweeps
use and reports pass/fail with the measured statistic.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
from scipy import stats

from .airlink import gen_channels, gen_frame_signals, hadamard_pilots, qpsk_map
from .codebook import (
    SecretCodebook,
    derive_codebook,
    identity_codebook,
    permutation_codebook,
    raise_frame,
    verify_barrage_transform,
)
from .config import SystemConfig
from .core import simulate_frame
from .jammers import JammerKind, JammerSpec, is_barrage
from .linalg import compact_svd, gaussian_matrix
from .receivers import RaisedFrame, jammer_projector, receiver_mash_lmmse
from .utils import DegenerateInputError, InvalidParameterError, trial_streams

logger = logging.getLogger(__name__)

CODEBOOK_KINDS = ('secret', 'permutation', 'identity')
DUALITY_TOL = 1e-10
NULLING_TOL = 1e-8
FORM_TOL = 1e-8

# Fifth child of a trial seed; the frame pipeline uses the first four
_CHECK_STREAM = 4

JAMMED_KINDS = [kind for kind in JammerKind if kind != JammerKind.NONE]


@dataclass(frozen=True)
class VerifyOptions:
    """Instance counts and the codebook source of a verification run."""
    instances: int = 50
    duality_instances: int = 100
    codebooks: int = 2000
    form_instances: int = 1000
    significance: float = 0.01
    codebook_kind: str = 'secret'

    def validate(self):
        for name in ('instances', 'duality_instances', 'codebooks', 'form_instances'):
            if getattr(self, name) < 1:
                raise InvalidParameterError(f"{name} must be at least 1, got {getattr(self, name)}")
        if not 0 < self.significance < 1:
            raise InvalidParameterError(f"significance must be in (0, 1), got {self.significance}")
        if self.codebook_kind not in CODEBOOK_KINDS:
            raise InvalidParameterError(
                f"codebook_kind must be one of {CODEBOOK_KINDS}, got {self.codebook_kind!r}")


@dataclass
class PropertyCheck:
    """Outcome of one property."""
    name: str
    passed: bool
    statistic: str
    detail: str = ""


@dataclass
class VerificationReport:
    checks: List[PropertyCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[PropertyCheck]:
        return [check for check in self.checks if not check.passed]


CodebookFactory = Callable[[int], SecretCodebook]


def codebook_factory(cfg: SystemConfig, kind: str = 'secret') -> CodebookFactory:
    """Codebook for instance ``i``: the secret's per-frame refresh or a non-Haar control."""
    if kind == 'secret':
        return lambda i: derive_codebook(cfg.secret_bytes, cfg.frame_len, cfg.redundancy, i)
    if kind == 'permutation':
        return lambda i: permutation_codebook(
            cfg.frame_len, cfg.redundancy, trial_streams(cfg.master_seed, i, _CHECK_STREAM + 1)[_CHECK_STREAM])
    if kind == 'identity':
        return lambda i: identity_codebook(cfg.frame_len, cfg.redundancy)
    raise InvalidParameterError(f"unknown codebook kind {kind!r}")


def _noiseless(cfg: SystemConfig, spec: JammerSpec, index: int, codebook: SecretCodebook):
    return simulate_frame(cfg, spec, 'mash-p', math.inf, index, codebook=codebook, detect=False)


def check_duality(cfg: SystemConfig, options: VerifyOptions, codebooks: CodebookFactory) -> PropertyCheck:
    """Raising an embedded frame leaves the first R columns empty and returns H S."""
    worst = 0.0
    for i in range(options.duality_instances):
        streams = trial_streams(cfg.master_seed, i, 2)
        ue_channel = gen_channels(cfg, streams[0]).ue_channel
        signal = gen_frame_signals(cfg, streams[1]).payload
        codebook = codebooks(i)

        reference = ue_channel @ signal
        raised = ue_channel @ signal @ codebook.c_par @ codebook.matrix.conj().T
        scale = np.linalg.norm(reference)
        leak = np.linalg.norm(raised[:, :cfg.redundancy]) / scale
        payload_error = np.linalg.norm(raised[:, cfg.redundancy:] - reference) / scale
        worst = max(worst, leak, payload_error)

    return PropertyCheck(
        name="embed/raise duality",
        passed=worst <= DUALITY_TOL,
        statistic=f"max relative residual {worst:.2e} over {options.duality_instances} frames",
    )


def check_transform(cfg: SystemConfig, kind: JammerKind, options: VerifyOptions,
                    codebooks: CodebookFactory) -> PropertyCheck:
    """Raising keeps the singular values and the spatial scope of J W."""
    spec = JammerSpec.from_name(kind.value, cfg.jammer_antennas)
    worst_sigma = 0.0
    worst_angle = 0.0
    skipped = 0

    for i in range(options.instances):
        codebook = codebooks(i)
        trace = _noiseless(cfg, spec, i, codebook)
        try:
            report = verify_barrage_transform(trace.channels.jammer_channel, trace.waveform, codebook)
        except DegenerateInputError:
            skipped += 1
            continue
        worst_sigma = max(worst_sigma, report.max_sigma_deviation)
        worst_angle = max(worst_angle, report.max_angle)

    checked = options.instances - skipped
    return PropertyCheck(
        name=f"singular values and scope ({kind.value})",
        passed=checked > 0 and worst_sigma <= 1e-10 and worst_angle <= 1e-8,
        statistic=f"max sigma deviation {worst_sigma:.2e}, max angle {worst_angle:.2e} rad",
        detail=f"{skipped} silent instances skipped" if skipped else "",
    )


def _first_coordinate_ks(cfg: SystemConfig, spec: JammerSpec, draws: int,
                         codebooks: CodebookFactory, raised: bool) -> float:
    """KS p-value of |e_1^H v|^2 against Beta(1, L - 1), v the leading temporal direction."""
    samples = np.empty(draws)
    for i in range(draws):
        codebook = codebooks(i)
        trace = _noiseless(cfg, spec, i, codebook)
        interference = trace.interference
        if raised:
            interference = interference @ codebook.matrix.conj().T
        direction = compact_svd(interference).right[:, 0]
        samples[i] = np.abs(direction[0]) ** 2
    return float(stats.kstest(samples, stats.beta(1, cfg.frame_len - 1).cdf).pvalue)


def check_haar_uniformity(cfg: SystemConfig, options: VerifyOptions,
                          codebooks: CodebookFactory) -> PropertyCheck:
    """A rank-1 pilot jammer's raised temporal direction is uniform on the sphere."""
    spec = JammerSpec.from_name('pilot')
    p_value = _first_coordinate_ks(cfg, spec, options.codebooks, codebooks, raised=True)
    return PropertyCheck(
        name="temporal Haar uniformity",
        passed=p_value > options.significance,
        statistic=f"KS p = {p_value:.3g} over {options.codebooks} codebooks",
        detail=f"codebook source: {options.codebook_kind}",
    )


def check_barrage_definition(cfg: SystemConfig, options: VerifyOptions) -> PropertyCheck:
    """Without any codebook only barrage-type jammers have a uniform temporal extension."""
    plain = codebook_factory(cfg, 'identity')
    outcomes = []
    passed = True
    for kind in (JammerKind.BARRAGE, JammerKind.EIGENBEAM, JammerKind.PILOT):
        spec = JammerSpec.from_name(kind.value, cfg.jammer_antennas)
        p_value = _first_coordinate_ks(cfg, spec, options.codebooks, plain, raised=False)
        uniform = p_value > options.significance
        passed &= uniform == is_barrage(kind)
        outcomes.append(f"{kind.value} p={p_value:.3g}")
    return PropertyCheck(
        name="barrage definition",
        passed=passed,
        statistic=", ".join(outcomes),
        detail="barrage and eigenbeam uniform, pilot not",
    )


def check_nulling(cfg: SystemConfig, kind: JammerKind, options: VerifyOptions,
                  codebooks: CodebookFactory) -> PropertyCheck:
    """Noiseless frame: the projector from Y_J removes J W from the whole raised frame."""
    spec = JammerSpec.from_name(kind.value, cfg.jammer_antennas)
    worst = 0.0
    max_rank = 0

    for i in range(options.instances):
        codebook = codebooks(i)
        trace = _noiseless(cfg, spec, i, codebook)
        interference = trace.interference @ codebook.matrix.conj().T
        energy = np.linalg.norm(interference)
        if energy == 0:
            continue
        max_rank = max(max_rank, compact_svd(trace.interference).rank)

        frame = RaisedFrame.from_raised(raise_frame(trace.received, codebook),
                                        cfg.redundancy, cfg.pilot_len)
        projector, _ = jammer_projector(frame.training, 0.0, cfg.rank_factor, frame.numerical_floor())
        worst = max(worst, np.linalg.norm(projector @ interference) / energy)

    detail = ""
    precondition = max_rank <= cfg.redundancy
    if not precondition:
        detail = f"precondition R ≥ I* violated (I*={max_rank} > R={cfg.redundancy})"
    return PropertyCheck(
        name=f"noiseless nulling ({kind.value})",
        passed=precondition and worst <= NULLING_TOL,
        statistic=f"max residual {worst:.2e}, max I* {max_rank}",
        detail=detail,
    )


def check_lmmse_forms(cfg: SystemConfig, options: VerifyOptions) -> PropertyCheck:
    """The B x B and the R x R / (U + R) x (U + R) LMMSE forms give the same estimate."""
    bs_antennas, num_ues = cfg.bs_antennas, cfg.num_ues
    redundancy = max(cfg.redundancy, 1)
    pilots = hadamard_pilots(num_ues)
    worst = 0.0

    for i in range(options.form_instances):
        rng = trial_streams(cfg.master_seed, i, _CHECK_STREAM + 1)[_CHECK_STREAM]
        antennas = 1 if i % 2 == 0 else min(10, bs_antennas - 1)
        noise_var = 10.0 ** rng.uniform(-4.0, 0.0)

        ue_channel = gaussian_matrix(bs_antennas, num_ues, 1.0, rng)
        jammer_channel = gaussian_matrix(bs_antennas, antennas, 1.0, rng)
        bits = rng.integers(0, 2, size=num_ues * cfg.data_len * 2)
        data = qpsk_map(bits).reshape(num_ues, cfg.data_len)

        def block(clean: np.ndarray) -> np.ndarray:
            cols = clean.shape[1]
            return (clean + jammer_channel @ gaussian_matrix(antennas, cols, 1.0, rng)
                    + gaussian_matrix(bs_antennas, cols, noise_var, rng))

        frame = RaisedFrame(
            training=block(np.zeros((bs_antennas, redundancy), dtype=complex)),
            pilot=block(ue_channel @ pilots),
            data=block(ue_channel @ data),
        )
        large = receiver_mash_lmmse(frame, pilots, noise_var, form='large').symbols
        small = receiver_mash_lmmse(frame, pilots, noise_var, form='small').symbols
        worst = max(worst, np.linalg.norm(large - small) / np.linalg.norm(large))

    return PropertyCheck(
        name="LMMSE form equivalence",
        passed=worst <= FORM_TOL,
        statistic=f"max relative difference {worst:.2e} over {options.form_instances} instances",
    )


def run_verify(cfg: SystemConfig, options: VerifyOptions = VerifyOptions()) -> VerificationReport:
    """
    Run every property check on the scenario.

    Args:
        cfg: Scenario (geometry, rho, seed, secret)
        options: Instance counts and codebook source

    Returns:
        VerificationReport; ``report.passed`` is False if any check failed
    """
    cfg.validate()
    options.validate()
    codebooks = codebook_factory(cfg, options.codebook_kind)
    report = VerificationReport()

    def record(check: PropertyCheck):
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(level, f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.statistic}")
        report.checks.append(check)

    record(check_duality(cfg, options, codebooks))
    for kind in JAMMED_KINDS:
        record(check_transform(cfg, kind, options, codebooks))
    record(check_haar_uniformity(cfg, options, codebooks))
    record(check_barrage_definition(cfg, options))
    for kind in JAMMED_KINDS:
        record(check_nulling(cfg, kind, options, codebooks))
    record(check_lmmse_forms(cfg, options))

    return report
