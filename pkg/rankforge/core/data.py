"""
LETOR data handling: parsing, writing, per-query normalization, fold splits
and the synthetic inputs used by the experiments.

Line format::

    <label> qid:<id> <fid>:<val> ... [# comment]

Feature ids are 1-based in files and 0-based internally; missing ids are 0.0.
"""

import numpy as np
from pathlib import Path
from typing import Dict, List, Union

from rankforge.core.config import settings
from rankforge.core.exceptions import ConfigError, DataError, LetorParseError
from rankforge.core.logging import get_logger
from rankforge.models.dataset import Dataset, FoldSplit, QueryGroup, SyntheticSpec

logger = get_logger(__name__)

# latent-score thresholds separating grades 0|1|2|3|4 in the synthetic fixture
SYNTHETIC_GRADE_THRESHOLDS = np.array([0.0, 0.7, 1.2, 1.7])


def _parse_line(line: str, line_no: int, grade_max: int):
    data = line.split("#", 1)[0]
    toks = data.split()
    if not toks:
        return None
    if len(toks) < 2:
        raise LetorParseError("expected '<label> qid:<id> ...'", line_no)

    try:
        label_f = float(toks[0])
    except ValueError:
        raise LetorParseError(f"bad label '{toks[0]}'", line_no)
    if not np.isfinite(label_f) or label_f != int(label_f) or not 0 <= label_f <= grade_max:
        raise LetorParseError(f"label {toks[0]} outside grades 0..{grade_max}", line_no)

    if not toks[1].startswith("qid:") or len(toks[1]) == 4:
        raise LetorParseError(f"expected qid:<id>, got '{toks[1]}'", line_no)
    qid = toks[1][4:]

    feats: Dict[int, float] = {}
    for tok in toks[2:]:
        fid_s, sep, val_s = tok.partition(":")
        try:
            fid = int(fid_s)
            val = float(val_s)
        except ValueError:
            raise LetorParseError(f"bad feature token '{tok}'", line_no)
        if not sep or fid < 1:
            raise LetorParseError(f"bad feature token '{tok}'", line_no)
        if fid - 1 in feats:
            raise LetorParseError(f"feature {fid} repeated", line_no)
        if not np.isfinite(val):
            raise LetorParseError(f"non-finite value for feature {fid}", line_no)
        feats[fid - 1] = val
    return int(label_f), qid, feats


def parse_letor_lines(lines, grade_max: int = settings.GRADE_MAX) -> Dataset:
    """Parse LETOR lines; documents of a query must be contiguous."""
    rows: List[tuple] = []  # (qid, label, feats)
    order: List[str] = []
    seen = set()
    dim = 0

    for line_no, line in enumerate(lines, start=1):
        parsed = _parse_line(line, line_no, grade_max)
        if parsed is None:
            continue
        label, qid, feats = parsed
        if not order or qid != order[-1]:
            if qid in seen:
                raise LetorParseError(f"documents of qid {qid} are not contiguous", line_no)
            seen.add(qid)
            order.append(qid)
        if feats:
            dim = max(dim, max(feats) + 1)
        rows.append((qid, label, feats))

    groups = []
    start = 0
    for qid in order:
        end = start
        while end < len(rows) and rows[end][0] == qid:
            end += 1
        X = np.zeros((end - start, dim))
        y = np.zeros(end - start, dtype=np.int64)
        for r, (_, label, feats) in enumerate(rows[start:end]):
            y[r] = label
            for c, v in feats.items():
                X[r, c] = v
        groups.append(QueryGroup(qid=qid, features=X, labels=y))
        start = end

    return Dataset(groups=groups, dim=dim, grade_max=grade_max)


def parse_letor(path: Union[str, Path], grade_max: int = settings.GRADE_MAX) -> Dataset:
    """Parse a LETOR file into a Dataset."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with open(path, encoding="utf-8") as f:
        ds = parse_letor_lines(f, grade_max)
    logger.info(f"Parsed {path}: {len(ds)} queries, {ds.dim} features")
    return ds


def format_letor(ds: Dataset) -> str:
    lines = []
    for g in ds.groups:
        for label, row in zip(g.labels, g.features):
            feats = " ".join(f"{c + 1}:{format(float(v), '.17g')}" for c, v in enumerate(row))
            lines.append(f"{int(label)} qid:{g.qid} {feats}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


def write_letor(ds: Dataset, path: Union[str, Path]) -> Path:
    """Write a Dataset as LETOR text (every feature column written explicitly)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_letor(ds), encoding="utf-8")
    return path


def zscore_normalize(group: QueryGroup) -> QueryGroup:
    """Per-query z-score with population std; constant columns become zeros."""
    X = group.features
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = np.ptp(X, axis=0) == 0
    safe_std = np.where(constant, 1.0, std)
    Z = np.where(constant, 0.0, (X - mean) / safe_std)
    return QueryGroup(qid=group.qid, features=Z, labels=group.labels.copy())


def normalize_dataset(ds: Dataset) -> Dataset:
    return Dataset(groups=[zscore_normalize(g) for g in ds.groups], dim=ds.dim, grade_max=ds.grade_max)


def make_folds(ds: Dataset, k: int = settings.NUM_FOLDS, seed: int = 0) -> List[FoldSplit]:
    """Rotating k-fold splits: k-2 subsets train, one validates, one tests."""
    if k < 3:
        raise ConfigError(f"need at least 3 folds (train/validation/test), got {k}")
    if k != 5:
        logger.warning(f"Using {k} folds; the evaluation protocol uses 5")
    n = len(ds.groups)
    if n < k:
        raise DataError(f"{n} query groups cannot be split into {k} folds")

    perm = np.random.default_rng(seed).permutation(n)
    subsets = [sorted(int(i) for i in part) for part in np.array_split(perm, k)]
    folds = []
    for f in range(k):
        train = sorted(i for s in range(k - 2) for i in subsets[(f + s) % k])
        folds.append(FoldSplit(
            fold_index=f + 1,
            train=train,
            validation=subsets[(f + k - 2) % k],
            test=subsets[(f + k - 1) % k],
        ))
    return folds


def generate_uniform_vectors(spec: SyntheticSpec) -> np.ndarray:
    """``v1`` vectors of ``v2`` values drawn from U[0, 1); one row per vector."""
    return np.random.default_rng(spec.seed).random((spec.v1, spec.v2))


def generating_weights(d: int, seed: int) -> np.ndarray:
    """Unit-norm weights of the linear scorer behind the synthetic fixture."""
    w = np.random.default_rng([seed, 0]).normal(size=d)
    return w / np.linalg.norm(w)


def generate_synthetic_ranking_data(n_queries: int, m: int, d: int, noise: float = 0.0,
                                    seed: int = 0, grade_max: int = settings.GRADE_MAX) -> Dataset:
    """Desk-scale fixture: graded labels from binning a fixed linear score.

    Features are drawn already z-scored per query so per-query normalization
    leaves the generating scorer unchanged. ``noise`` is the std of Gaussian
    noise added to the latent score before binning.
    """
    if n_queries < 1 or m < 1 or d < 1:
        raise ConfigError("n_queries, m and d must all be >= 1")
    if noise < 0:
        raise ConfigError(f"noise must be >= 0, got {noise}")

    w = generating_weights(d, seed)
    rng = np.random.default_rng([seed, 1])
    groups = []
    for q in range(n_queries):
        X = rng.normal(size=(m, d))
        X = zscore_normalize(QueryGroup(qid="0", features=X, labels=np.zeros(m))).features
        latent = X @ w
        if noise > 0:
            latent = latent + noise * rng.normal(size=m)
        labels = np.searchsorted(SYNTHETIC_GRADE_THRESHOLDS[:grade_max], latent, side="right")
        groups.append(QueryGroup(qid=str(q + 1), features=X, labels=labels))
    return Dataset(groups=groups, dim=d, grade_max=grade_max)


def load_dataset(paths: List[str], grade_max: int = settings.GRADE_MAX) -> List[Dataset]:
    """Parse one file or a train/vali/test triple."""
    if len(paths) not in (1, 3):
        raise ConfigError(f"pass one data file or three (train, vali, test), got {len(paths)}")
    datasets = [parse_letor(p, grade_max) for p in paths]
    dims = {ds.dim for ds in datasets}
    if len(dims) > 1:
        # pad narrower files with zero columns
        dim = max(dims)
        datasets = [pad_features(ds, dim) for ds in datasets]
    return datasets


def pad_features(ds: Dataset, dim: int) -> Dataset:
    if ds.dim == dim:
        return ds
    groups = [QueryGroup(qid=g.qid, labels=g.labels,
                         features=np.hstack([g.features, np.zeros((g.size, dim - ds.dim))]))
              for g in ds.groups]
    return Dataset(groups=groups, dim=dim, grade_max=ds.grade_max)
