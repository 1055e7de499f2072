"""
Command-line entry point: `python -m welfare_order.cli`.
"""
import functools
import sys
from pathlib import Path

import click
import uvicorn

from welfare_order import settings
from welfare_order.errors import InvalidInputError, WelfareOrderError
from welfare_order.models.regimes import Adaptivity, Horizon
from welfare_order.schemas.assumptions import parse_assumptions
from welfare_order.schemas.pipeline import parse_welfare
from welfare_order.schemas.simulate import PRESETS
from welfare_order.utils.assumptions import build_mask, resolve_directions
from welfare_order.utils.dataset import (
    drop_instruments,
    estimate_p,
    load_dataset,
    read_distribution,
    write_distribution,
)
from welfare_order.utils.matrices import build_problem, write_triplets
from welfare_order.utils.ordering import to_dot
from welfare_order.utils.pipeline import (
    inference_report,
    order_distribution,
    preset_distribution,
    regime_bounds,
    run_pipeline,
    write_report,
)
from welfare_order.utils.simulate import (
    dgp_horizon,
    exact_distribution,
    sample_data,
    true_q,
    write_sample,
)
from welfare_order.utils.statespace import build_layout


def _integers(text: str):
    if not text:
        return []
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as error:
        raise InvalidInputError(f"expected comma separated integers, got {text!r}") from error


def handle_errors(command):
    """Turn service errors into a message on stderr and the error's exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except WelfareOrderError as error:
            click.echo(f"error: {error}", err=True)
            sys.exit(error.exit_code)

    return wrapper


DISTRIBUTION_OPTIONS = (
    click.option("--p", "p_path", type=click.Path(dir_okay=False), help="Distribution JSON"),
    click.option("--in", "data_path", type=click.Path(dir_okay=False), help="Unit-level CSV"),
    click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Exact p of a preset"),
    click.option("--drop-z", multiple=True, type=int, help="Ignore the instrument of period t"),
)

MODEL_OPTIONS = (
    click.option("--assumptions", default="", help="e.g. M1,M2,L-short,K"),
    click.option("--welfare", default="terminal", help="terminal or weights:w1,...,wT"),
    click.option("--no-markov", is_flag=True, help="Full-history period maps"),
    click.option("--adaptivity", type=click.Choice([a.value for a in Adaptivity]), default="full"),
    click.option("--project", is_flag=True, help="Project an infeasible p"),
    click.option("--solver", type=click.Choice(["simplex", "highs"]), default=None),
)


def _apply(options, command):
    for option in reversed(options):
        command = option(command)
    return command


def distribution_options(command):
    """Options naming where the observed distribution comes from."""
    return _apply(DISTRIBUTION_OPTIONS, command)


def model_options(command):
    """Options fixing the maintained model."""
    return _apply(MODEL_OPTIONS, command)


def _distribution(p_path, data_path, preset, drop_z):
    sources = [value for value in (p_path, data_path, preset) if value]
    if len(sources) != 1:
        raise InvalidInputError("give exactly one of --p, --in, --preset")
    if data_path:
        return estimate_p(load_dataset(data_path, drop_z=drop_z))
    distribution = read_distribution(p_path) if p_path else preset_distribution(preset)
    if drop_z:
        flags = [
            flag and t not in drop_z
            for t, flag in enumerate(distribution.horizon.instrumented, start=1)
        ]
        distribution = drop_instruments(distribution, flags)
    return distribution


def _assumptions(text, no_markov):
    assumptions = parse_assumptions(text)
    if not no_markov and not assumptions.markov:
        assumptions = assumptions.copy(update={"markov": True})
    return assumptions


@click.group()
@click.option("--log-level", default=None, help="Defaults to LOG_LEVEL")
def cli(log_level):
    """Sharp partial ordering of dynamic treatment regimes."""
    settings.configure_logging(log_level)


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="positive")
@click.option("--n", "n", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--p-out", type=click.Path(dir_okay=False), help="Also write the exact distribution")
@click.option("--n-draws", type=int, default=None, help="Monte Carlo draws for --p-out")
@handle_errors
def simulate(preset, n, seed, out, p_out, n_draws):
    """Draw a synthetic sample from a preset process."""
    config = PRESETS[preset]
    write_sample(sample_data(config, n, seed), out)
    click.echo(f"wrote {n} units to {out}")
    if p_out:
        layout = build_layout(dgp_horizon(config), markov=True)
        q = true_q(config, layout, n_draws, seed)
        write_distribution(exact_distribution(config, layout, q=q), p_out)
        click.echo(f"wrote exact distribution to {p_out}")


@cli.command()
@click.option("--in", "data_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--drop-z", multiple=True, type=int, help="Ignore the instrument of period t")
@handle_errors
def estimate(data_path, out, drop_z):
    """Estimate cell probabilities from unit-level data."""
    distribution = estimate_p(load_dataset(data_path, drop_z=drop_z))
    write_distribution(distribution, out)
    click.echo(f"estimated p from {distribution.n} units, wrote {out}")


@cli.command()
@distribution_options
@model_options
@click.option("--eps-sign", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--dot", type=click.Path(dir_okay=False), default=None)
@click.option("--sort-cap", type=int, default=None)
@click.option("--regimes", default="", help="Regimes with welfare bounds, e.g. 1,4")
@click.option("--certify", is_flag=True, help="Exact re-certification near the threshold")
@handle_errors
def order(
    p_path, data_path, preset, drop_z, assumptions, welfare, no_markov, adaptivity, project,
    solver, eps_sign, out, dot, sort_cap, regimes, certify,
):  # pylint: disable=too-many-arguments,too-many-locals
    """Sharp partial order of all regimes."""
    distribution = _distribution(p_path, data_path, preset, drop_z)
    run = order_distribution(
        distribution,
        _assumptions(assumptions, no_markov),
        welfare_spec=parse_welfare(welfare, distribution.horizon.periods),
        adaptivity=Adaptivity(adaptivity),
        eps_sign=eps_sign,
        solver=solver,
        project=project,
        sort_cap=sort_cap,
        bound_regimes=_integers(regimes) or None,
        certify=certify,
    )
    if out:
        write_report(run.report, out)
    if dot:
        Path(dot).write_text(to_dot(run.order), encoding="utf-8")
    click.echo(f"edges: {run.report.edges}")
    click.echo(f"identified set: {run.report.identified_set}")


@cli.command()
@distribution_options
@model_options
@click.option("--regimes", default="", help="e.g. 1,4; defaults to all")
@handle_errors
def bounds(
    p_path, data_path, preset, drop_z, assumptions, welfare, no_markov, adaptivity, project, solver,
    regimes,
):  # pylint: disable=too-many-arguments
    """Welfare and regret bounds of selected regimes."""
    distribution = _distribution(p_path, data_path, preset, drop_z)
    observed, rows = regime_bounds(
        distribution,
        _assumptions(assumptions, no_markov),
        welfare_spec=parse_welfare(welfare, distribution.horizon.periods),
        adaptivity=Adaptivity(adaptivity),
        regimes=_integers(regimes),
        project=project,
        solver=solver,
    )
    click.echo(f"observed welfare: {observed:.6f}")
    for row in rows:
        click.echo(
            f"regime {row.regime}: [{row.lower:.6f}, {row.upper:.6f}] "
            f"regret [{row.regret_lower:.6f}, {row.regret_upper:.6f}]"
        )


@cli.command()
@distribution_options
@model_options
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--reps", type=int, default=None)
@click.option("--mode", type=click.Choice(["vertex", "resolve"]), default="resolve")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@handle_errors
def infer(
    p_path, data_path, preset, drop_z, assumptions, welfare, no_markov, adaptivity, project,
    solver, alpha, reps, mode, seed, out,
):  # pylint: disable=too-many-arguments,too-many-locals
    """Confidence set for the identified set."""
    distribution = _distribution(p_path, data_path, preset, drop_z)
    run = order_distribution(
        distribution,
        _assumptions(assumptions, no_markov),
        welfare_spec=parse_welfare(welfare, distribution.horizon.periods),
        adaptivity=Adaptivity(adaptivity),
        solver=solver,
        project=project,
    )
    inference = inference_report(run, distribution, alpha, reps, mode, seed, solver)
    if out:
        write_report(run.report.copy(update={"inference": inference}), out)
    click.echo(f"identified set: {run.report.identified_set}")
    click.echo(f"confidence set: {inference.survivors}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@handle_errors
def run(config_path):
    """Run a configuration file end to end."""
    report = run_pipeline(config_path)
    click.echo(f"identified set: {report.identified_set}")


@cli.command("export-matrices")
@click.option("--horizon", type=int, default=1, show_default=True)
@click.option("--instrumented", default="", help="Instrumented periods, e.g. 2; defaults to all")
@click.option("--no-markov", is_flag=True)
@click.option("--assumptions", default="", help="Explicit directions only, e.g. M1=up")
@click.option("--welfare", default="terminal")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@handle_errors
def export_matrices(horizon, instrumented, no_markov, assumptions, welfare, out_dir):
    """Write A and B as sparse triplet files."""
    periods = _integers(instrumented)
    flags = tuple(t in periods for t in range(1, horizon + 1)) if periods else None
    config = _assumptions(assumptions, no_markov)
    layout = build_layout(Horizon(periods=horizon, instrumented=flags), config.markov)
    mask = build_mask(layout, config, resolve_directions(config, layout))
    matrices = build_problem(layout, parse_welfare(welfare, horizon), mask=mask)
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    write_triplets(matrices.A, target / "A.txt", [r.label for r in matrices.regimes])
    write_triplets(matrices.B, target / "B.txt", [str(label) for label in matrices.row_labels])
    click.echo(f"A {matrices.A.shape}, B {matrices.B.shape} written to {target}")


@cli.command()
@click.option("--host", default="0.0.0.0")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Serve the HTTP interface."""
    uvicorn.run("welfare_order.main:app", host=host, port=port)


if __name__ == "__main__":
    cli()  # pylint: disable=no-value-for-parameter
