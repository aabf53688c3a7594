"""Tabular datasets: CSV ingestion, synthetic generation, IID shuffling,
group-dependent label noise and train/validation/test splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from gflc.errors import DomainError, ParseError, SchemaError

# columns the pipeline itself writes; never inferred as features
RESERVED_COLUMNS = frozenset(
    {"id", "label", "group", "clean_label", "flipped", "corrected_label", "flipped_direction"}
)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, binary labels and integer group codes for ``n`` rows.

    ``group_names[c]`` is the original (CSV) spelling of group code ``c``.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    ids: np.ndarray
    feature_names: tuple[str, ...] = ()
    group_names: tuple[str, ...] = ()

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        labels = np.asarray(self.labels).astype(np.int64)
        groups = np.asarray(self.groups).astype(np.int64)
        ids = np.asarray(self.ids)
        n = features.shape[0]
        if n < 1:
            raise DomainError("dataset must contain at least one row")
        if not (len(labels) == len(groups) == len(ids) == n):
            raise DomainError(
                f"length mismatch: features={n}, labels={len(labels)}, "
                f"groups={len(groups)}, ids={len(ids)}"
            )
        if not np.isin(labels, (0, 1)).all():
            raise DomainError("labels must be 0 or 1")
        if groups.min() < 0:
            raise DomainError("group codes must be non-negative integers")
        feature_names = self.feature_names or tuple(f"f{j}" for j in range(features.shape[1]))
        if len(feature_names) != features.shape[1]:
            raise DomainError("feature_names does not match feature dimension")
        group_names = self.group_names or tuple(str(c) for c in range(groups.max() + 1))
        if len(group_names) <= groups.max():
            raise DomainError("group_names does not cover every group code")
        for name, value in [
            ("features", features),
            ("labels", labels),
            ("groups", groups),
            ("ids", ids),
        ]:
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "feature_names", tuple(feature_names))
        object.__setattr__(self, "group_names", tuple(group_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def group_codes(self) -> np.ndarray:
        return np.unique(self.groups)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.features[index],
            self.labels[index],
            self.groups[index],
            self.ids[index],
            self.feature_names,
            self.group_names,
        )

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.groups, self.ids, self.feature_names, self.group_names)

    def with_groups(self, groups) -> "Dataset":
        return Dataset(self.features, self.labels, groups, self.ids, self.feature_names, self.group_names)

    def regroup(self, names: Sequence[str]) -> "Dataset":
        """Re-express group codes against another dataset's name table.

        Names unknown to ``names`` are appended after it.
        """
        table = list(names) + [g for g in self.group_names if g not in names]
        codes = np.array([table.index(self.group_names[c]) for c in self.groups.tolist()])
        return Dataset(self.features, self.labels, codes, self.ids, self.feature_names, tuple(table))

    def group_code(self, name) -> int:
        """Resolve a group given either its CSV name or its integer code."""
        if isinstance(name, str) and name in self.group_names:
            code = self.group_names.index(name)
        else:
            try:
                code = int(name)
            except (TypeError, ValueError):
                raise DomainError(f"unknown group {name!r}; known groups: {list(self.group_names)}")
        if code not in set(self.groups.tolist()):
            raise DomainError(f"unknown group {name!r}; known groups: {list(self.group_names)}")
        return code

    def design_matrix(self, include_group: bool = False) -> np.ndarray:
        """Features, optionally with the group code appended as the last column."""
        if not include_group:
            return np.asarray(self.features)
        return np.column_stack([self.features, self.groups.astype(float)])


@dataclass(frozen=True, eq=False)
class NoiseRecord:
    """A dataset after label-noise injection, with the clean labels kept aside."""

    base: Dataset
    clean_labels: np.ndarray
    flip_mask: np.ndarray
    rate: float
    target_group: int

    def __post_init__(self):
        clean = np.asarray(self.clean_labels).astype(np.int64)
        mask = np.asarray(self.flip_mask, dtype=bool)
        if len(clean) != self.base.n or len(mask) != self.base.n:
            raise DomainError("noise record arrays must match dataset length")
        if not np.array_equal(mask, self.base.labels != clean):
            raise DomainError("flip_mask disagrees with labels vs clean_labels")
        if mask[self.base.groups != self.target_group].any():
            raise DomainError("flip_mask set outside the target group")
        object.__setattr__(self, "clean_labels", clean)
        object.__setattr__(self, "flip_mask", mask)

    def to_csv(self, path) -> None:
        write_dataset_csv(
            path,
            self.base,
            {"clean_label": self.clean_labels, "flipped": self.flip_mask.astype(int)},
        )


# ----------------------------------------------------------------------------
# CSV I/O


@dataclass
class Schema:
    """Column mapping for :func:`load_csv`.

    ``features=None`` selects every column not named elsewhere and not reserved
    by the pipeline, provided its first cell is numeric.
    """

    features: Sequence[str] | None = None
    label: str = "label"
    group: str = "group"
    id: str | None = "id"
    extra_reserved: frozenset = field(default_factory=frozenset)


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required")
        rows = [row for row in reader if row]
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i} has {len(row)} cells, header has {len(header)}")
    return header, rows


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, schema: Schema | None = None) -> Dataset:
    """Read a headered CSV into a :class:`Dataset` (rows kept in file order).

    Group values are interned as integer codes in order of first appearance.
    Row numbers in error messages count data rows from 1.
    """
    schema = schema or Schema()
    path = Path(path)
    header, rows = read_csv_rows(path)
    col = {name: j for j, name in enumerate(header)}

    for name in [schema.label, schema.group] + list(schema.features or []):
        if name not in col:
            raise SchemaError(f"{path}: missing column {name!r}")
    has_id = schema.id is not None and schema.id in col
    if not rows:
        raise DomainError(f"{path}: no data rows")

    if schema.features is None:
        skip = RESERVED_COLUMNS | schema.extra_reserved | {schema.label, schema.group, schema.id}
        feature_names = [h for h in header if h not in skip and _is_number(rows[0][col[h]])]
    else:
        feature_names = list(schema.features)

    n = len(rows)
    features = np.empty((n, len(feature_names)))
    labels = np.empty(n, dtype=np.int64)
    group_index: dict[str, int] = {}
    groups = np.empty(n, dtype=np.int64)
    ids = []
    fcols = [col[name] for name in feature_names]
    for i, row in enumerate(rows):
        for j, c in enumerate(fcols):
            try:
                features[i, j] = float(row[c])
            except ValueError:
                raise ParseError(
                    f"{path}: row {i + 1}: non-numeric value {row[c]!r} in feature column {header[c]!r}"
                )
        raw_label = row[col[schema.label]].strip()
        try:
            value = float(raw_label)
        except ValueError:
            value = math.nan
        if value not in (0.0, 1.0):
            raise DomainError(f"{path}: row {i + 1}: label {raw_label!r} is not 0 or 1")
        labels[i] = int(value)
        g = row[col[schema.group]].strip()
        groups[i] = group_index.setdefault(g, len(group_index))
        ids.append(row[col[schema.id]] if has_id else str(i))

    return Dataset(
        features,
        labels,
        groups,
        np.asarray(ids, dtype=object),
        tuple(feature_names),
        tuple(group_index),
    )


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_dataset_csv(path, dataset: Dataset, extra: dict | None = None) -> None:
    """Write ``id, <features>, label, group[, extra...]``; groups by name."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *dataset.feature_names, "label", "group", *extra])
        columns = [np.asarray(v) for v in extra.values()]
        for i in range(dataset.n):
            writer.writerow(
                [
                    _fmt(dataset.ids[i]),
                    *(_fmt(x) for x in dataset.features[i]),
                    int(dataset.labels[i]),
                    dataset.group_names[dataset.groups[i]],
                    *(_fmt(c[i].item() if hasattr(c[i], "item") else c[i]) for c in columns),
                ]
            )


def load_noise_record(path, schema: Schema | None = None, target_group=None, rate=math.nan) -> NoiseRecord:
    """Load a CSV written by :meth:`NoiseRecord.to_csv`."""
    schema = schema or Schema()
    dataset = load_csv(path, schema)
    header, rows = read_csv_rows(path)
    for name in ("clean_label", "flipped"):
        if name not in header:
            raise SchemaError(f"{path}: missing column {name!r}")
    ci, fi = header.index("clean_label"), header.index("flipped")
    clean = np.array([int(float(r[ci])) for r in rows])
    mask = np.array([int(float(r[fi])) for r in rows], dtype=bool)
    if target_group is None:
        flipped_groups = np.unique(dataset.groups[mask])
        target = int(flipped_groups[0]) if len(flipped_groups) else int(dataset.groups[0])
    else:
        target = dataset.group_code(target_group)
    return NoiseRecord(dataset, clean, mask, float(rate), target)


# ----------------------------------------------------------------------------
# generation and corruption


def generate_synthetic(
    n: int,
    d: int,
    class_separation: float = 2.0,
    group_fraction: float = 0.5,
    positive_rate: float = 0.2,
    seed: int = 0,
) -> Dataset:
    """Two isotropic unit-variance Gaussian clusters, one per class.

    The positive cluster mean sits ``class_separation`` further along every
    axis than the negative one. Group membership is drawn independently of
    features and labels. Class and group counts are fixed at
    ``round(n * rate)`` (kept within ``[1, n - 1]``) and placed by random
    permutation, so both labels and both groups always occur.
    """
    if n < 4:
        raise DomainError("n must be at least 4")
    if d < 1:
        raise DomainError("d must be at least 1")
    if not 0 < group_fraction < 1:
        raise DomainError("group_fraction must lie in (0, 1)")
    if not 0 < positive_rate < 1:
        raise DomainError("positive_rate must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    n_pos = min(max(round(n * positive_rate), 1), n - 1)
    labels = rng.permutation(np.r_[np.ones(n_pos, dtype=np.int64), np.zeros(n - n_pos, dtype=np.int64)])
    features = rng.standard_normal((n, d)) + class_separation * labels[:, None]
    n_g0 = min(max(round(n * group_fraction), 1), n - 1)
    groups = rng.permutation(np.r_[np.zeros(n_g0, dtype=np.int64), np.ones(n - n_g0, dtype=np.int64)])
    return Dataset(features, labels, groups, np.arange(n), group_names=("A", "B"))


def shuffle_sensitive_iid(dataset: Dataset, seed: int) -> Dataset:
    """Randomly permute the group column, breaking any link to features/labels."""
    rng = np.random.default_rng(seed)
    return dataset.with_groups(rng.permutation(dataset.groups))


def inject_group_noise(dataset: Dataset, target_group, rate: float, seed: int) -> NoiseRecord:
    """Flip each label in ``target_group`` independently with probability ``rate``.

    Noise is symmetric: positives and negatives inside the group are equally
    likely to flip. Rows outside the group are never touched.
    """
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"noise rate must lie in [0, 1], got {rate}")
    code = dataset.group_code(target_group)
    rng = np.random.default_rng(seed)
    mask = (rng.random(dataset.n) < rate) & (dataset.groups == code)
    noisy = np.where(mask, 1 - dataset.labels, dataset.labels)
    return NoiseRecord(dataset.with_labels(noisy), dataset.labels.copy(), mask, float(rate), code)


def split(
    dataset: Dataset, fractions: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0
) -> tuple[Dataset, Dataset, Dataset]:
    """Random train/validation/test partition.

    Validation and test get ``floor(n * fraction)`` rows; the remainder goes to
    train. Rows inside each part keep their original relative order.
    """
    if len(fractions) != 3:
        raise DomainError("exactly three fractions are required")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise DomainError(f"fractions must be positive and sum to 1, got {tuple(fractions)}")
    n = dataset.n
    # guard against 0.1 * 30 == 2.9999999999999996 style flooring errors
    n_val = int(math.floor(n * fractions[1] + 1e-9))
    n_test = int(math.floor(n * fractions[2] + 1e-9))
    perm = np.random.default_rng(seed).permutation(n)
    val_idx = np.sort(perm[:n_val])
    test_idx = np.sort(perm[n_val : n_val + n_test])
    train_idx = np.sort(perm[n_val + n_test :])
    return dataset.subset(train_idx), dataset.subset(val_idx), dataset.subset(test_idx)
