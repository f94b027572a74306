#!/usr/bin/env python3
"""
MASH Simulator
Monte Carlo BER/MER study of secret subspace embedding against smart jammers
in a massive MU-MIMO uplink.

Version: 1.0.0
"""

import sys
import logging
import math
from pathlib import Path
from typing import Optional

import click
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeElapsedColumn
from rich.logging import RichHandler

# Add the project root to Python path
sys.path.insert(0, str(Path(__file__).parent))

from mash_sim import __version__
from mash_sim.config import LMMSE_FORMS, ConfigManager, apply_preset, list_presets
from mash_sim.core import CellOutcome, SweepPlan, SweepRunner, format_csv, simulate_frame, write_csv_atomic
from mash_sim.jammers import JammerKind, JammerSpec
from mash_sim.receivers import RECEIVERS
from mash_sim.utils import InvalidParameterError, ThroughputMonitor, parse_number_list
from mash_sim.verify import CODEBOOK_KINDS, VerificationReport, VerifyOptions, run_verify


# Setup rich console
console = Console(stderr=True)

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    datefmt="[%X]",
    handlers=[RichHandler(console=console, rich_tracebacks=True)]
)
logger = logging.getLogger(__name__)


def display_banner():
    """Display application banner."""
    banner = f"""
    ╔══════════════════════════════════════════════════════════════╗
    ║                     MASH SIMULATOR v{__version__:<8}                 ║
    ║         Secret subspace embedding vs. smart jammers          ║
    ║                                                              ║
    ║  • Haar codebooks derived from a shared secret               ║
    ║  • Eight jammer behaviors, MASH and baseline receivers       ║
    ║  • Deterministic, parallel Monte Carlo sweeps to CSV         ║
    ╚══════════════════════════════════════════════════════════════╝
    """
    console.print(Panel(banner, style="bold blue"))


def display_scenario(manager: ConfigManager):
    """Display the scenario in a formatted table."""
    cfg = manager.config
    table = Table(title="Scenario", style="cyan")
    table.add_column("Parameter", style="bold")
    table.add_column("Value")

    table.add_row("Antennas B / UEs U", f"{cfg.bs_antennas} / {cfg.num_ues}")
    table.add_row("Frame L = R + T + D", f"{cfg.frame_len} = {cfg.redundancy} + {cfg.pilot_len} + {cfg.data_len}")
    table.add_row("Jammer antennas I", str(cfg.jammer_antennas))
    table.add_row("rho", f"{cfg.rho_db:g} dB")
    table.add_row("Master seed", str(cfg.master_seed))
    table.add_row("Codebook refresh", "per frame" if cfg.codebook_refresh else "fixed")
    table.add_row("LMMSE form", cfg.lmmse_form)
    table.add_row("Rank factor", f"{cfg.rank_factor:g}")

    console.print(table)


def display_results(outcomes: list[CellOutcome]):
    """Display per-cell metrics."""
    table = Table(title="Results", style="green")
    for column in ("Jammer", "Receiver", "SNR [dB]", "BER", "MER [%]", "Mean I*", "Excluded"):
        table.add_column(column, style="bold" if column == "Jammer" else None)

    for outcome in outcomes:
        metrics = outcome.metrics()
        if metrics is None:
            values = ("-", "-", "-")
        else:
            values = (f"{metrics.ber:.3e}", f"{metrics.mer_percent:.1f}", f"{metrics.mean_est_rank:.2f}")
        table.add_row(outcome.jammer, outcome.receiver, f"{outcome.snr_db:g}", *values,
                      str(outcome.trial_errors))

    console.print(table)


def display_performance(monitor: ThroughputMonitor):
    stats = monitor.get_performance_summary()

    perf_table = Table(title="Performance Summary", style="yellow")
    perf_table.add_column("Metric", style="bold")
    perf_table.add_column("Value")

    perf_table.add_row("Trials/s", f"{stats['trials_per_second']:.1f}")
    perf_table.add_row("Mean trial time", f"{stats['mean_trial_ms']:.2f} ms")
    perf_table.add_row("Trials Processed", str(stats['trials_processed']))
    perf_table.add_row("Failed Trials", str(stats['failed_trials']))
    perf_table.add_row("Runtime", f"{stats['runtime_seconds']:.1f}s")
    perf_table.add_row("CPU Usage", f"{stats['cpu_usage_percent']:.1f}%")
    perf_table.add_row("Memory Usage", f"{stats['memory_usage_mb']:.1f} MB")

    console.print(perf_table)


def display_report(report: VerificationReport):
    table = Table(title="Verification", style="magenta")
    table.add_column("Property", style="bold")
    table.add_column("Result")
    table.add_column("Statistic")
    table.add_column("Detail")

    for check in report.checks:
        verdict = "[green]PASS[/green]" if check.passed else "[red]FAIL[/red]"
        table.add_row(check.name, verdict, check.statistic, check.detail)

    console.print(table)


def load_settings(config_path: Optional[str], preset: Optional[str], **overrides) -> ConfigManager:
    """Preset, then config file, then command-line flags."""
    manager = ConfigManager()
    if preset and not apply_preset(manager, preset):
        raise InvalidParameterError(f"unknown preset {preset!r}; available: {', '.join(list_presets())}")
    if config_path:
        manager.config_path = Path(config_path)
        manager.load_config()
    manager.update_from_args(**overrides)
    if not manager.validate_config():
        raise InvalidParameterError("configuration is invalid (see log)")
    return manager


def split_names(text: Optional[str]) -> Optional[tuple[str, ...]]:
    if text is None:
        return None
    return tuple(name.strip() for name in text.split(',') if name.strip())


def scenario_options(func):
    """Options shared by every subcommand."""
    options = [
        click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                     help='Flat key/value config file (.toml or .json)'),
        click.option('--preset', type=click.Choice(list_presets()), help='Named preset'),
        click.option('--rho-db', type=float, help='Jammer-to-UE power ratio rho in dB'),
        click.option('--seed', type=int, help='Master seed'),
        click.option('--redundancy', type=int, help='Redundancy R'),
        click.option('--jammer-antennas', type=int, help='Jammer antennas I (multi-antenna kinds)'),
        click.option('--lmmse-form', type=click.Choice(LMMSE_FORMS), help='LMMSE matrix form'),
        click.option('--rank-factor', type=float, help='Rank threshold factor on sqrt(B*N0)'),
        click.option('--fixed-codebook', is_flag=True, default=None,
                     help='Use one codebook for all frames instead of refreshing it'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def settings_from(config_path, preset, rho_db, seed, redundancy, jammer_antennas, lmmse_form,
                  rank_factor, fixed_codebook, **sweep_overrides) -> ConfigManager:
    return load_settings(
        config_path, preset,
        rho_db=rho_db, master_seed=seed, redundancy=redundancy, jammer_antennas=jammer_antennas,
        lmmse_form=lmmse_form, rank_factor=rank_factor,
        codebook_refresh=False if fixed_codebook else None,
        **sweep_overrides,
    )


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Verbose logging')
@click.version_option(__version__)
@click.pass_context
def cli(ctx: click.Context, verbose: bool):
    """
    MASH Simulator

    Simulate a jammed massive MU-MIMO uplink and compare MASH receivers
    against baselines that see the raw interleaved frame.

    Receivers: mash-p, mash-l, baseline-lmmse, baseline-projection,
    jammerless, unmitigated

    Jammers: barrage, data, pilot, sparse, eigenbeam, multidata, dynamic, repeat
    """
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose

    # Setup logging level
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def fail(ctx: click.Context, error: Exception):
    console.print(f"[red]Error: {error}[/red]")
    if ctx.obj.get('verbose'):
        console.print_exception()
    ctx.exit(1)


@cli.command()
@scenario_options
@click.option('--jammers', help='Comma-separated jammer kinds')
@click.option('--receivers', help='Comma-separated receiver names')
@click.option('--snr', help='SNR points in dB: "0,5,10" or "start:stop:step"')
@click.option('--frames', type=int, help='Frames per (jammer, receiver, SNR) point')
@click.option('--parallelism', type=int, help='Worker threads')
@click.option('--out', type=click.Path(dir_okay=False), help='CSV output path (stdout if omitted)')
@click.option('--no-performance', is_flag=True, help='Disable throughput monitoring')
@click.pass_context
def sweep(ctx: click.Context, jammers: Optional[str], receivers: Optional[str], snr: Optional[str],
          frames: Optional[int], parallelism: Optional[int], out: Optional[str], no_performance: bool,
          **scenario):
    """Run a BER/MER sweep and write the CSV."""
    display_banner()
    try:
        manager = settings_from(
            **scenario,
            jammers=split_names(jammers),
            receivers=split_names(receivers),
            snr_points_db=parse_number_list(snr) if snr else None,
            frames_per_point=frames,
            parallelism=parallelism,
        )
        cfg, defaults = manager.config, manager.sweep
        display_scenario(manager)

        plan = SweepPlan(
            cfg=cfg,
            snr_points_db=defaults.snr_points_db,
            jammer_specs=[JammerSpec.from_name(name, cfg.jammer_antennas) for name in defaults.jammers],
            receiver_names=list(defaults.receivers),
            frames_per_point=defaults.frames_per_point,
        )
        monitor = None if no_performance else ThroughputMonitor()
        runner = SweepRunner(defaults.parallelism, monitor=monitor)

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TaskProgressColumn(),
            TimeElapsedColumn(),
            console=console
        ) as progress:
            task = progress.add_task("Simulating frames...", total=None)
            outcomes = runner.run(plan, progress=lambda done, total: progress.update(task, completed=done, total=total))

        display_results(outcomes)
        text = format_csv(outcomes)
        if out:
            write_csv_atomic(Path(out), text)
            console.print(f"[green]Wrote {len(outcomes)} rows to {out}[/green]")
        else:
            click.echo(text, nl=False)

        if monitor:
            display_performance(monitor)

    except KeyboardInterrupt:
        console.print("\n[yellow]Sweep interrupted by user; no CSV written[/yellow]")
        ctx.exit(130)
    except Exception as e:
        fail(ctx, e)


@cli.command()
@scenario_options
@click.option('--instances', type=int, default=50, show_default=True, help='Instances per jammer kind')
@click.option('--codebooks', type=int, default=2000, show_default=True, help='Codebooks for the KS tests')
@click.option('--form-instances', type=int, default=1000, show_default=True,
              help='Instances for the LMMSE form comparison')
@click.option('--codebook', 'codebook_kind', type=click.Choice(CODEBOOK_KINDS), default='secret',
              show_default=True, help='Codebook source (permutation and identity are negative controls)')
@click.pass_context
def verify(ctx: click.Context, instances: int, codebooks: int, form_instances: int, codebook_kind: str,
           **scenario):
    """Check the algebraic and statistical properties; exits nonzero on any failure."""
    display_banner()
    try:
        manager = settings_from(**scenario)
        display_scenario(manager)
        options = VerifyOptions(instances=instances, codebooks=codebooks,
                                form_instances=form_instances, codebook_kind=codebook_kind)

        with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
                      console=console) as progress:
            progress.add_task("Running property checks...", total=None)
            report = run_verify(manager.config, options)

        display_report(report)
    except KeyboardInterrupt:
        console.print("\n[yellow]Verification interrupted by user[/yellow]")
        ctx.exit(130)
    except Exception as e:
        fail(ctx, e)

    if report.passed:
        console.print("[green]All properties hold[/green]")
    else:
        console.print(f"[red]{len(report.failures())} properties failed[/red]")
        ctx.exit(1)


@cli.command()
@scenario_options
@click.option('--jammer', 'jammer_name', type=click.Choice([k.value for k in JammerKind]), default='barrage',
              show_default=True)
@click.option('--receiver', 'receiver_name', type=click.Choice(list(RECEIVERS)), default='mash-l',
              show_default=True)
@click.option('--snr', type=float, default=10.0, show_default=True, help='SNR in dB (inf for no noise)')
@click.option('--index', 'trial_index', type=int, default=0, show_default=True, help='Trial index')
@click.pass_context
def trial(ctx: click.Context, jammer_name: str, receiver_name: str, snr: float, trial_index: int, **scenario):
    """Simulate one frame and dump per-stage matrix norms."""
    try:
        manager = settings_from(**scenario)
        cfg = manager.config
        spec = JammerSpec.from_name(jammer_name, cfg.jammer_antennas)
        trace = simulate_frame(cfg, spec, receiver_name, snr, trial_index)
        result = trace.result()

        table = Table(title=f"Trial {trial_index}: {jammer_name} / {receiver_name} @ {snr:g} dB", style="cyan")
        table.add_column("Stage", style="bold")
        table.add_column("Frobenius norm")
        for stage, value in trace.stage_norms().items():
            table.add_row(stage, f"{value:.6g}")
        console.print(table)

        summary = Table(title="Outcome", style="green")
        summary.add_column("Metric", style="bold")
        summary.add_column("Value")
        summary.add_row("Trial seed", f"{result.trial_seed:#018x}")
        summary.add_row("Bit errors", f"{result.bit_errors} / {result.bits_total}")
        summary.add_row("MER", f"{100.0 * result.mer_num / result.mer_den:.2f}%")
        summary.add_row("Estimated I*", str(result.est_rank))
        summary.add_row("Jammer silent", "yes" if trace.jammer_silent else "no")
        if math.isinf(snr):
            summary.add_row("Noise", "none")
        console.print(summary)
    except Exception as e:
        fail(ctx, e)


@cli.command()
def presets():
    """List the named presets."""
    table = Table(title="Presets", style="cyan")
    table.add_column("Name", style="bold")
    table.add_column("Jammers")
    table.add_column("Receivers")
    table.add_column("SNR [dB]")
    table.add_column("Frames")

    manager = ConfigManager()
    for name in list_presets():
        apply_preset(manager, name)
        sweep_defaults = manager.sweep
        table.add_row(name, ", ".join(sweep_defaults.jammers), ", ".join(sweep_defaults.receivers),
                      ", ".join(f"{v:g}" for v in sweep_defaults.snr_points_db),
                      str(sweep_defaults.frames_per_point))

    console.print(table)


if __name__ == "__main__":
    cli()
