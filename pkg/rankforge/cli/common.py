import functools
import click
from pathlib import Path
from pydantic import ValidationError
from typing import List

from rankforge.core.config import settings
from rankforge.core.exceptions import ConfigError, RankForgeError
from rankforge.core.logging import get_logger
from rankforge.models.network import Architecture

logger = get_logger(__name__)


def handle_errors(func):
    """Map library errors to the process exit code (2 config, 3 data, 4 numeric)."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"Invalid configuration: {e}")
            raise SystemExit(ConfigError.exit_code)
        except RankForgeError as e:
            logger.error(f"{type(e).__name__}: {e.detail}")
            raise SystemExit(e.exit_code)

    return wrapper


def parse_cutoffs(value: str) -> List[int]:
    try:
        return [int(tok) for tok in value.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cutoffs must be comma-separated integers, got '{value}'")


def output_dir(out) -> Path:
    path = Path(out or settings.OUTPUT_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_options(func):
    """Flags shared by ``train`` and ``cv``."""
    options = [
        click.option("--data", multiple=True, required=True, type=click.Path(dir_okay=False),
                      help="LETOR file; give three times for train, vali and test."),
        click.option("--arch", type=click.Choice([a.value for a in Architecture]),
                     default=Architecture.R4L.value, show_default=True),
        click.option("--loss", default="ndcg.type3", show_default=True,
                     help="pre@k.typeN, ap.typeN, ndcg.typeN, nerr@k.typeN, approxndcg, listnet or listmle."),
        click.option("--epochs", type=int, default=settings.EPOCHS, show_default=True),
        click.option("--lr", type=float, default=settings.LEARNING_RATE, show_default=True),
        click.option("--l2", type=float, default=settings.L2_RATE, show_default=True),
        click.option("--alpha-b", "alpha_b", type=float, default=settings.ALPHA_B, show_default=True,
                     help="Backward steepness of the twin sigmoid."),
        click.option("--alpha", type=float, default=settings.APPROX_ALPHA, show_default=True,
                     help="Sigmoid steepness of ApproxNDCG."),
        click.option("--seed", type=int, default=settings.INIT_SEED, show_default=True),
        click.option("--folds-seed", "folds_seed", type=int, default=0, show_default=True),
        click.option("--folds", type=int, default=settings.NUM_FOLDS, show_default=True),
        click.option("--cutoffs", default=",".join(str(k) for k in settings.CUTOFFS), show_default=True),
        click.option("--out", type=click.Path(file_okay=False), default=None),
        click.option("--paper-exact-grad", "paper_exact_grad", is_flag=True,
                     help="Drop the 1/ln2 factor from the nDCG rank derivative."),
        click.option("--normalize/--no-normalize", default=True, show_default=True,
                     help="Per-query z-scoring of features."),
        click.option("--accumulate", type=int, default=settings.ACCUMULATE, show_default=True,
                     help="Queries per optimizer step."),
        click.option("--hidden", type=int, default=settings.HIDDEN_WIDTH, show_default=True),
    ]
    for option in reversed(options):
        func = option(func)
    return func
