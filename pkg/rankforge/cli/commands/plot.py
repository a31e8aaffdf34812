import click
from pathlib import Path

from rankforge.cli.common import handle_errors
from rankforge.services.plot_service import PlotService


@click.command("plot")
@click.option("--plotdata", required=True, type=click.Path(dir_okay=False), help="plotdata.csv of a run.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Image path; defaults to plotdata.png next to the CSV.")
@handle_errors
def plot(plotdata, out):
    """Draw the training objective next to validation and test nDCG@5."""
    path = Path(out) if out else Path(plotdata).with_suffix(".png")
    PlotService().plot_training_curves(plotdata, path)
    click.echo(f"wrote {path}")
