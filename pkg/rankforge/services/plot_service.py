import math
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd
from pathlib import Path
from typing import Optional, Union

from rankforge.core.exceptions import DataError
from rankforge.core.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

PLOTDATA_COLUMNS = ("epoch", "train_objective", "val_ndcg5", "test_ndcg5")


def training_figure(width: float = 8.0, height: Optional[float] = None):
    golden_ratio = (math.sqrt(5) - 1.0) / 2.0
    if not height:
        height = width * golden_ratio
    fig, ax = plt.subplots(figsize=(width, height), facecolor="w")
    ax.spines["top"].set_visible(False)
    return fig, ax


class PlotService:
    """Figures drawn from the CSV series of a run."""

    def __init__(self, dpi: int = 150):
        self.dpi = dpi

    def read_plotdata(self, path: PathLike) -> pd.DataFrame:
        path = Path(path)
        if not path.exists():
            raise DataError(f"plotdata not found: {path}")
        df = pd.read_csv(path)
        missing = [c for c in PLOTDATA_COLUMNS if c not in df.columns]
        if missing:
            raise DataError(f"{path} lacks columns {', '.join(missing)}")
        if df.empty:
            raise DataError(f"{path} has no epochs")
        return df

    def plot_training_curves(self, plotdata: PathLike, out: PathLike) -> Path:
        """Training objective (left axis) against validation and test nDCG@5 (right axis)."""
        df = self.read_plotdata(plotdata)
        fig, ax = training_figure()

        ax.plot(df["epoch"], df["train_objective"], color="tab:gray", label="training objective")
        ax.set_xlabel("epoch")
        ax.set_ylabel("training objective")

        ax2 = ax.twinx()
        ax2.plot(df["epoch"], df["val_ndcg5"], color="tab:blue", label="validation nDCG@5")
        ax2.plot(df["epoch"], df["test_ndcg5"], color="tab:orange", label="test nDCG@5")
        ax2.set_ylabel("nDCG@5")
        ax2.set_ylim(0.0, 1.0)

        handles = list(ax.get_lines()) + list(ax2.get_lines())
        ax.legend(handles, [h.get_label() for h in handles], loc="lower right", frameon=False)

        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=self.dpi, bbox_inches="tight")
        plt.close(fig)
        logger.info(f"Wrote training curves to {out}")
        return out
