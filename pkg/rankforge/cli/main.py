import click

from rankforge import __version__
from rankforge.cli.commands import cv, evaluate, plot, rankexp, synth, train
from rankforge.core.config import settings
from rankforge.core.logging import setup_logging


@click.group()
@click.version_option(__version__)
@click.option("--log-level", default=settings.LOG_LEVEL, show_default=True)
@click.option("--log-file", default=settings.LOG_FILE, type=click.Path(dir_okay=False))
def cli(log_level, log_file):
    """Learning-to-rank toolkit: train, eval, cv, rankexp, synth and plot."""
    setup_logging(log_level, log_file)


# Register all commands
cli.add_command(train.train)
cli.add_command(evaluate.evaluate)
cli.add_command(cv.cv)
cli.add_command(rankexp.rankexp)
cli.add_command(synth.synth)
cli.add_command(plot.plot)
