import click

from rankforge.cli.common import handle_errors, output_dir, parse_cutoffs, run_options
from rankforge.core.logging import get_logger
from rankforge.models.run import RunConfig
from rankforge.services.training_service import TrainingService

logger = get_logger(__name__)


@click.command("cv")
@run_options
@click.option("--jobs", type=int, default=1, show_default=True, help="Folds trained in parallel.")
@handle_errors
def cv(cutoffs, **kwargs):
    """k-fold cross-validation over a single LETOR file."""
    cfg = RunConfig(data=list(kwargs.pop("data")), cutoffs=parse_cutoffs(cutoffs), **kwargs)
    out = output_dir(cfg.out)
    service = TrainingService(cfg)

    ds, split = service.load()
    if split is not None:
        logger.warning("cv pools the three data files and re-splits them into folds")
    result = service.cross_validate(ds, out)
    for k in cfg.cutoffs:
        click.echo(f"nDCG@{k}: best {result.best.mean('ndcg', k):.4f}  final {result.final.mean('ndcg', k):.4f}")
