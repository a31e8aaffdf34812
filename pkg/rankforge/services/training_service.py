import time
import numpy as np
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from pydantic import ValidationError
from typing import Dict, List, Optional, Sequence, Tuple

from rankforge.core.checkpoint import save_checkpoint
from rankforge.core.config import settings
from rankforge.core.data import load_dataset, make_folds, normalize_dataset
from rankforge.core.exceptions import DataError, NumericError
from rankforge.core.logging import get_logger
from rankforge.core.losses import compute_loss, parse_loss_spec
from rankforge.core.metrics import average_reports, evaluate_queries, mean_ndcg
from rankforge.core.numerics import AdamState, Network, adam_step
from rankforge.models.base import ArrayModel
from rankforge.models.dataset import Dataset, FoldSplit, QueryGroup
from rankforge.models.network import Mode
from rankforge.models.reports import EpochRecord, EvalReport
from rankforge.models.run import RunConfig
from rankforge.services.report_service import NumericDiagnostic, ReportService, finite_or_none

logger = get_logger(__name__)


class TrainResult(ArrayModel):
    best_net: Network
    final_net: Network
    best_epoch: int
    records: List[EpochRecord]


class FoldOutcome(ArrayModel):
    fold_index: int
    best_epoch: int
    best: EvalReport
    final: EvalReport
    records: List[EpochRecord]


class CrossValidationResult(ArrayModel):
    best: EvalReport
    final: EvalReport
    folds: List[FoldOutcome]


class TrainingService:
    """Training, evaluation and cross-validation under one RunConfig."""

    def __init__(self, cfg: RunConfig, report_service: Optional[ReportService] = None):
        self.cfg = cfg
        self.loss_spec = parse_loss_spec(
            cfg.loss,
            alpha_b=cfg.alpha_b,
            alpha=cfg.alpha,
            tie_seed=cfg.seed,
            paper_exact_grad=cfg.paper_exact_grad,
        )
        self.reports = report_service or ReportService()

    # ----- data -----

    def load(self) -> Tuple[Dataset, Optional[FoldSplit]]:
        """Parse ``cfg.data``. Three files give a fixed train/vali/test split;
        a single file is split later by ``make_folds``."""
        datasets = load_dataset(self.cfg.data)
        if self.cfg.normalize:
            datasets = [normalize_dataset(ds) for ds in datasets]
        if len(datasets) == 1:
            return datasets[0], None

        groups: List[QueryGroup] = []
        parts: List[List[int]] = []
        for ds in datasets:
            parts.append(list(range(len(groups), len(groups) + len(ds))))
            groups.extend(ds.groups)
        try:
            merged = Dataset(groups=groups, dim=datasets[0].dim, grade_max=datasets[0].grade_max)
        except ValidationError as e:
            raise DataError(f"train/vali/test files cannot be combined: {e}") from e
        return merged, FoldSplit(fold_index=1, train=parts[0], validation=parts[1], test=parts[2])

    def split_for(self, ds: Dataset) -> FoldSplit:
        return make_folds(ds, self.cfg.folds, self.cfg.folds_seed)[self.cfg.fold - 1]

    # ----- evaluation -----

    def evaluate(self, net: Network, groups: Sequence[QueryGroup],
                 cutoffs: Optional[Sequence[int]] = None) -> EvalReport:
        """Eval-mode scoring of every group, then all metrics at all cutoffs."""
        cutoffs = list(cutoffs) if cutoffs is not None else self.cfg.cutoffs
        return evaluate_queries([(g.qid, net.predict(g.features), g.labels) for g in groups], cutoffs)

    def _selection_ndcg(self, net: Network, groups: Sequence[QueryGroup]) -> float:
        return mean_ndcg([(net.predict(g.features), g.labels) for g in groups], settings.SELECTION_CUTOFF)

    # ----- training -----

    def _numeric_failure(self, out_dir: Optional[Path], epoch: int, group: QueryGroup,
                         scores, detail: str) -> NumericError:
        if out_dir is not None:
            self.reports.write_diagnostic(
                NumericDiagnostic(qid=group.qid, epoch=epoch, loss=self.loss_spec.name, detail=detail,
                                  scores=finite_or_none(scores) if scores is not None else [],
                                  labels=[int(v) for v in group.labels]),
                out_dir / "numeric_failure.json",
            )
        else:
            logger.error(f"Numeric failure on qid {group.qid} in epoch {epoch}: {detail}")
        return NumericError(detail, qid=group.qid)

    def train(self, ds: Dataset, split: FoldSplit, out_dir: Optional[Path] = None) -> TrainResult:
        """Adam on one query at a time; keeps the epoch with the best validation nDCG@5."""
        cfg = self.cfg
        train_groups = [ds.groups[i] for i in split.train]
        val_groups = [ds.groups[i] for i in split.validation]
        test_groups = [ds.groups[i] for i in split.test]
        if not train_groups:
            raise DataError(f"fold {split.fold_index} has no training queries")

        net = Network.from_architecture(cfg.arch, ds.dim, cfg.hidden, cfg.seed)
        state = AdamState(net)
        order_rng = np.random.default_rng([cfg.seed, split.fold_index])
        tie_counter = 0

        records: List[EpochRecord] = []
        best_net, best_epoch, best_val = net.copy(), 0, -1.0
        logger.info(f"Fold {split.fold_index}: training {self.loss_spec.name} on {len(train_groups)} queries "
                    f"({cfg.arch.value}, {cfg.epochs} epochs)")

        for epoch in range(1, cfg.epochs + 1):
            started = time.perf_counter()
            losses: List[float] = []
            pending: Dict[str, np.ndarray] = {}
            n_pending = 0

            for idx in order_rng.permutation(len(train_groups)):
                group = train_groups[idx]
                if not np.any(group.labels > 0):
                    logger.debug(f"Skipping qid {group.qid}: no relevant documents")
                    continue

                scores = None
                try:
                    scores, cache = net.forward(group.features, Mode.TRAIN)
                    out = compute_loss(self.loss_spec, scores, group.labels, tie_counter)
                except NumericError as e:
                    raise self._numeric_failure(out_dir, epoch, group, scores, e.detail) from e
                tie_counter += 1
                if not np.isfinite(out.value) or not np.all(np.isfinite(out.grad)):
                    raise self._numeric_failure(out_dir, epoch, group, scores, "non-finite loss")
                losses.append(out.value)

                grads = net.backward(cache, out.grad)
                for name, g in grads.items():
                    pending[name] = pending[name] + g if name in pending else g
                n_pending += 1
                if n_pending == cfg.accumulate:
                    adam_step(net, {k: v / n_pending for k, v in pending.items()}, state, cfg.lr, cfg.l2)
                    pending, n_pending = {}, 0

            if n_pending:
                adam_step(net, {k: v / n_pending for k, v in pending.items()}, state, cfg.lr, cfg.l2)

            record = EpochRecord(
                epoch=epoch,
                train_loss=float(np.mean(losses)) if losses else 0.0,
                train_ndcg=self._selection_ndcg(net, train_groups),
                val_ndcg=self._selection_ndcg(net, val_groups),
                test_ndcg=self._selection_ndcg(net, test_groups),
                seconds=time.perf_counter() - started,
            )
            records.append(record)
            logger.info(f"Fold {split.fold_index} epoch {epoch}: loss={record.train_loss:.6f} "
                        f"train={record.train_ndcg:.4f} val={record.val_ndcg:.4f} "
                        f"test={record.test_ndcg:.4f} ({record.seconds:.2f}s)")

            # strict improvement: ties keep the earliest epoch
            if record.val_ndcg > best_val:
                best_net, best_epoch, best_val = net.copy(), epoch, record.val_ndcg

        if out_dir is not None:
            save_checkpoint(best_net, out_dir / "best.ckpt")
            save_checkpoint(net, out_dir / "final.ckpt")
            self.reports.write_plotdata(records, out_dir / "plotdata.csv")
        logger.info(f"Fold {split.fold_index}: best validation nDCG@5 {best_val:.4f} at epoch {best_epoch}")
        return TrainResult(best_net=best_net, final_net=net, best_epoch=best_epoch, records=records)

    # ----- cross-validation -----

    def run_fold(self, ds: Dataset, split: FoldSplit, out_dir: Optional[Path] = None) -> FoldOutcome:
        result = self.train(ds, split, out_dir)
        test_groups = [ds.groups[i] for i in split.test]
        return FoldOutcome(
            fold_index=split.fold_index,
            best_epoch=result.best_epoch,
            best=self.evaluate(result.best_net, test_groups),
            final=self.evaluate(result.final_net, test_groups),
            records=result.records,
        )

    def cross_validate(self, ds: Dataset, out_dir: Optional[Path] = None) -> CrossValidationResult:
        """Train every fold, test each fold's selected network, average across folds."""
        cfg = self.cfg
        splits = make_folds(ds, cfg.folds, cfg.folds_seed)
        fold_dirs = [out_dir / f"fold{s.fold_index}" if out_dir is not None else None for s in splits]

        if cfg.jobs > 1:
            logger.info(f"Running {len(splits)} folds on {cfg.jobs} processes")
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                futures = [pool.submit(_fold_job, cfg, ds, s, d) for s, d in zip(splits, fold_dirs)]
                outcomes = [f.result() for f in futures]
        else:
            outcomes = [self.run_fold(ds, s, d) for s, d in zip(splits, fold_dirs)]

        result = CrossValidationResult(
            best=average_reports([o.best for o in outcomes]),
            final=average_reports([o.final for o in outcomes]),
            folds=outcomes,
        )
        if out_dir is not None:
            self.write_cv_outputs(result, out_dir)
        return result

    def write_cv_outputs(self, result: CrossValidationResult, out_dir: Path):
        self.reports.write_eval_report(result.best, out_dir / "cv_summary.csv")
        self.reports.write_eval_report(result.final, out_dir / "cv_summary_final.csv")
        frames = []
        for o in result.folds:
            frames.append(self.reports.per_query_frame(o.best, o.fold_index, "best"))
            frames.append(self.reports.per_query_frame(o.final, o.fold_index, "final"))
        self.reports.write_per_query(frames, out_dir / "per_query.csv")


def _fold_job(cfg: RunConfig, ds: Dataset, split: FoldSplit, out_dir: Optional[Path]) -> FoldOutcome:
    # runs in a worker process
    return TrainingService(cfg).run_fold(ds, split, out_dir)
