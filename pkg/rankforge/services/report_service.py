import numpy as np
import pandas as pd
from pathlib import Path
from pydantic import BaseModel
from typing import Dict, List, Optional, Union

from rankforge.core.logging import get_logger
from rankforge.models.reports import METRIC_NAMES, EpochRecord, EvalReport, RankExperimentRow, metric_key

logger = get_logger(__name__)

FLOAT_FORMAT = "%.12g"

PathLike = Union[str, Path]


class NumericDiagnostic(BaseModel):
    """Written next to the run outputs when a loss or activation is non-finite."""

    qid: Optional[str] = None
    epoch: int
    loss: str
    detail: str
    scores: List[Optional[float]] = []
    labels: List[int] = []


class ReportService:
    """CSV and JSON writers for every run artifact."""

    def __init__(self, float_format: str = FLOAT_FORMAT):
        self.float_format = float_format

    def _write(self, df: pd.DataFrame, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format=self.float_format, lineterminator="\n")
        logger.info(f"Wrote {len(df)} rows to {path}")
        return path

    def eval_report_frame(self, report: EvalReport) -> pd.DataFrame:
        rows = [
            {"metric": name, "k": k, "mean": report.mean(name, k), "n_queries": report.n_queries}
            for name in METRIC_NAMES
            for k in report.cutoffs
        ]
        return pd.DataFrame(rows, columns=["metric", "k", "mean", "n_queries"])

    def write_eval_report(self, report: EvalReport, path: PathLike) -> Path:
        """One row per (metric, cutoff)."""
        return self._write(self.eval_report_frame(report), path)

    def write_plotdata(self, records: List[EpochRecord], path: PathLike) -> Path:
        """Per-epoch objective and nDCG@5 series; wall-clock time is left out."""
        df = pd.DataFrame(
            [{
                "epoch": r.epoch,
                "train_objective": -r.train_loss,
                "train_loss": r.train_loss,
                "train_ndcg5": r.train_ndcg,
                "val_ndcg5": r.val_ndcg,
                "test_ndcg5": r.test_ndcg,
            } for r in records],
            columns=["epoch", "train_objective", "train_loss", "train_ndcg5", "val_ndcg5", "test_ndcg5"],
        )
        return self._write(df, path)

    def per_query_frame(self, report: EvalReport, fold: int, selection: str) -> pd.DataFrame:
        keys = [metric_key(name, k) for name in METRIC_NAMES for k in report.cutoffs]
        rows = []
        for q in report.per_query:
            row: Dict[str, object] = {"fold": fold, "selection": selection, "qid": q.qid}
            row.update({key: q.values[key] for key in keys})
            row["flagged"] = int(q.flagged)
            rows.append(row)
        return pd.DataFrame(rows, columns=["fold", "selection", "qid"] + keys + ["flagged"])

    def write_per_query(self, frames: List[pd.DataFrame], path: PathLike) -> Path:
        """Raw per-query values for external significance testing."""
        return self._write(pd.concat(frames, ignore_index=True), path)

    def write_rankexp(self, rows: List[RankExperimentRow], path: PathLike) -> Path:
        df = pd.DataFrame([r.model_dump() for r in rows], columns=["method", "alpha", "v1", "v2", "mean_L1"])
        return self._write(df, path)

    def write_diagnostic(self, diagnostic: NumericDiagnostic, path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(diagnostic.model_dump_json(indent=2), encoding="utf-8")
        logger.error(f"Numeric failure on qid {diagnostic.qid}; diagnostics written to {path}")
        return path


def finite_or_none(values) -> List[Optional[float]]:
    """JSON-safe copy of a float vector (non-finite entries become null)."""
    return [float(v) if np.isfinite(v) else None for v in np.asarray(values, dtype=np.float64)]
