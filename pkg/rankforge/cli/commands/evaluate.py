import click
from pathlib import Path

from rankforge.cli.common import handle_errors, parse_cutoffs
from rankforge.core.checkpoint import load_checkpoint
from rankforge.core.config import settings
from rankforge.core.data import load_dataset, normalize_dataset, pad_features
from rankforge.core.exceptions import DimensionMismatchError
from rankforge.core.metrics import evaluate_queries
from rankforge.services.report_service import ReportService


@click.command("eval")
@click.option("--checkpoint", required=True, type=click.Path(dir_okay=False))
@click.option("--data", required=True, type=click.Path(dir_okay=False))
@click.option("--cutoffs", default=",".join(str(k) for k in settings.CUTOFFS), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV report path.")
@click.option("--normalize/--no-normalize", default=True, show_default=True)
@handle_errors
def evaluate(checkpoint, data, cutoffs, out, normalize):
    """Score a LETOR file with a saved network and report every metric."""
    net = load_checkpoint(checkpoint)
    ds = load_dataset([data])[0]
    if normalize:
        ds = normalize_dataset(ds)
    if ds.dim > net.in_dim:
        raise DimensionMismatchError(f"data has {ds.dim} features, network expects {net.in_dim}")

    groups = ds.groups
    if ds.dim < net.in_dim:
        groups = pad_features(ds, net.in_dim).groups

    report = evaluate_queries([(g.qid, net.predict(g.features), g.labels) for g in groups],
                              parse_cutoffs(cutoffs))
    path = Path(out) if out else Path(checkpoint).with_suffix(".eval.csv")
    ReportService().write_eval_report(report, path)
    for k in report.cutoffs:
        click.echo(f"nDCG@{k}: {report.mean('ndcg', k):.4f}")
