import click
from pathlib import Path

from rankforge.cli.common import handle_errors
from rankforge.models.dataset import SyntheticSpec
from rankforge.services.experiment_service import DEFAULT_ALPHAS, ExperimentService
from rankforge.services.report_service import ReportService


@click.command("rankexp")
@click.option("--v1", type=int, default=100, show_default=True, help="Number of random vectors.")
@click.option("--v2", type=int, multiple=True, default=(123, 1000), show_default=True,
              help="Vector length; repeatable.")
@click.option("--alphas", default=",".join(f"{a:g}" for a in DEFAULT_ALPHAS), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="rankexp.csv", show_default=True)
@handle_errors
def rankexp(v1, v2, alphas, seed, out):
    """Mean L1 error of sigmoid and twin-sigmoid ranks on uniform data."""
    alpha_values = [float(a) for a in alphas.split(",") if a.strip()]
    service = ExperimentService()
    rows = []
    for length in v2:
        rows.extend(service.rank_accuracy_experiment(SyntheticSpec(v1=v1, v2=length, seed=seed), alpha_values))
    ReportService().write_rankexp(rows, Path(out))
    for row in rows:
        click.echo(f"{row.method:22s} alpha={row.alpha:<8g} v2={row.v2:<5d} {row.mean_L1:.4f}")
