import click

from rankforge.cli.common import handle_errors, output_dir, parse_cutoffs, run_options
from rankforge.core.logging import get_logger
from rankforge.models.run import RunConfig
from rankforge.services.training_service import TrainingService

logger = get_logger(__name__)


@click.command("train")
@run_options
@click.option("--fold", type=int, default=1, show_default=True,
              help="Fold to train when a single data file is given.")
@handle_errors
def train(cutoffs, **kwargs):
    """Train one fold and write best/final checkpoints, plotdata and test reports."""
    cfg = RunConfig(data=list(kwargs.pop("data")), cutoffs=parse_cutoffs(cutoffs), **kwargs)
    out = output_dir(cfg.out)
    service = TrainingService(cfg)

    ds, split = service.load()
    if split is None:
        split = service.split_for(ds)
    result = service.train(ds, split, out)

    test_groups = [ds.groups[i] for i in split.test]
    best = service.evaluate(result.best_net, test_groups)
    final = service.evaluate(result.final_net, test_groups)
    service.reports.write_eval_report(best, out / "eval_best.csv")
    service.reports.write_eval_report(final, out / "eval_final.csv")
    click.echo(f"best epoch {result.best_epoch}: test nDCG@5 {best.means.get('ndcg@5', float('nan')):.4f}")
