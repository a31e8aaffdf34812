import click

from rankforge.cli.common import handle_errors
from rankforge.core.data import generate_synthetic_ranking_data, write_letor


@click.command("synth")
@click.option("--queries", type=int, default=200, show_default=True)
@click.option("--docs", type=int, default=20, show_default=True, help="Documents per query.")
@click.option("--dim", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@handle_errors
def synth(queries, docs, dim, noise, seed, out):
    """Write a synthetic graded LETOR dataset."""
    ds = generate_synthetic_ranking_data(queries, docs, dim, noise=noise, seed=seed)
    path = write_letor(ds, out)
    click.echo(f"wrote {len(ds)} queries to {path}")
