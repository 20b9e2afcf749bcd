"""Preprocessing: column dropping, standardization, encoding, splitting.

Order of operations in the pipeline is deliberate: high-NA columns are
dropped first, rows are split before any statistic is fitted, the
standardizer and encoder are fitted on training rows only, and
imputation comes last. Splits are keyed on stable row identity (the row
key), so shuffling the input rows never changes which clones land in
which fold.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from trialbench import rng as rngmod
from trialbench.dataset import Dataset, na_profile
from trialbench.errors import EncodingError, SchemaError, StratificationError
from trialbench.schema import ColumnSpec


def drop_high_na_columns(ds: Dataset, max_na: int = 400) -> Dataset:
    """Remove every column whose missing count exceeds max_na.

    Response columns are not part of the value matrix and key columns are
    not columns, so neither can be dropped here.
    """
    if max_na < 0:
        raise SchemaError("max_na must be nonnegative")
    counts = ds.missing.sum(axis=0)
    keep = [s.name for s, c in zip(ds.specs, counts) if c <= max_na]
    if len(keep) == ds.n_cols:
        return ds
    return ds.select_columns(keep)


def drop_incomplete_rows(ds: Dataset) -> Dataset:
    """Keep only fully observed rows (the non-imputed pipeline arm)."""
    complete = ~ds.missing.any(axis=1)
    return ds.select_rows(np.flatnonzero(complete))


# -- standardization ---------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    """Per-column mean and population standard deviation, train-fitted.

    Only numeric (non-categorical) columns are fitted; constant columns
    are flagged and map to zero. Statistics ignore missing cells.
    """

    columns: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    constant: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> "Standardizer":
        cols, means, sds, const = [], [], [], []
        for j, spec in enumerate(ds.specs):
            if not spec.is_numeric:
                continue
            observed = ds.values[~ds.missing[:, j], j]
            if observed.size == 0:
                m, s = 0.0, 0.0
            else:
                m = float(observed.mean())
                s = float(observed.std())  # population (1/n) convention
            cols.append(spec.name)
            means.append(m)
            sds.append(s)
            const.append(s == 0.0)
        return cls(tuple(cols), np.array(means), np.array(sds),
                   np.array(const, dtype=bool))

    def transform(self, ds: Dataset) -> Dataset:
        values = np.array(ds.values)
        for name, m, s, flat in zip(self.columns, self.mean, self.sd, self.constant):
            j = ds.col_index(name)
            col = values[:, j]
            obs = ~ds.missing[:, j]
            col[obs] = 0.0 if flat else (col[obs] - m) / s
            values[:, j] = col
        return ds.with_values(values)

    def to_doc(self) -> dict:
        return {"columns": list(self.columns), "mean": self.mean.tolist(),
                "sd": self.sd.tolist(), "constant": self.constant.tolist()}


def standardize(fit_on: Dataset, apply_to: Dataset) -> Dataset:
    """Standardize apply_to using statistics fitted on fit_on."""
    return Standardizer.fit(fit_on).transform(apply_to)


# -- one-hot encoding --------------------------------------------------------


@dataclass(frozen=True)
class OneHotEncoder:
    """Expands categorical columns into indicator blocks.

    Indicator columns are named "<source>=<level>" and keep the
    categorical kind (value set {0, 1}), so they are never standardized
    or imputed downstream; the source name lets feature selection treat
    a block as one unit.
    """

    levels_by_column: dict[str, tuple[str, ...]]

    @classmethod
    def fit(cls, ds: Dataset) -> "OneHotEncoder":
        levels = {}
        for j, spec in enumerate(ds.specs):
            if spec.kind != "categorical":
                continue
            codes = np.unique(ds.values[:, j]).astype(int)
            levels[spec.name] = tuple(spec.levels[c] for c in codes)
        return cls(levels)

    def transform(self, ds: Dataset) -> Dataset:
        specs: list[ColumnSpec] = []
        cols: list[np.ndarray] = []
        masks: list[np.ndarray] = []
        for j, spec in enumerate(ds.specs):
            if spec.name not in self.levels_by_column:
                specs.append(spec)
                cols.append(ds.values[:, j])
                masks.append(ds.missing[:, j])
                continue
            seen = self.levels_by_column[spec.name]
            observed = [spec.levels[int(c)] for c in ds.values[:, j]]
            unseen = sorted(set(observed) - set(seen))
            if unseen:
                raise EncodingError(f"column {spec.name!r}: level {unseen[0]!r} "
                                    "was not present when the encoder was fitted")
            for level in seen:
                indicator = np.array([1.0 if v == level else 0.0 for v in observed])
                specs.append(ColumnSpec(f"{spec.name}={level}", "categorical",
                                        spec.units, None, 0, levels=("0", "1")))
                cols.append(indicator)
                masks.append(np.zeros(ds.n_rows, dtype=bool))
        return Dataset(specs=tuple(specs), values=np.column_stack(cols),
                       missing=np.column_stack(masks), keys=ds.keys,
                       labels=ds.labels)


def one_hot(ds: Dataset) -> Dataset:
    return OneHotEncoder.fit(ds).transform(ds)


def feature_groups(specs) -> list[tuple[str, list[int]]]:
    """Column indices grouped by source feature (indicator blocks collapse)."""
    groups: dict[str, list[int]] = {}
    order: list[str] = []
    for j, spec in enumerate(specs):
        source = spec.name.split("=", 1)[0]
        if source not in groups:
            groups[source] = []
            order.append(source)
        groups[source].append(j)
    return [(name, groups[name]) for name in order]


# -- splitting ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int

    def __post_init__(self):
        if set(self.train) & set(self.test):
            raise StratificationError("train and test indices overlap")

    def to_doc(self) -> dict:
        return {"train": list(self.train), "test": list(self.test), "seed": self.seed}

    @classmethod
    def from_doc(cls, doc) -> "SplitPlan":
        return cls(tuple(doc["train"]), tuple(doc["test"]), int(doc["seed"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_doc(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SplitPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))


def _canonical_order(ds: Dataset) -> np.ndarray:
    """Row indices sorted by row key, the stable identity for sampling."""
    return np.array(sorted(range(ds.n_rows), key=lambda i: ds.keys[i]))


def _require_labels(ds: Dataset) -> np.ndarray:
    if ds.labels is None:
        raise StratificationError("dataset has no labels to stratify on")
    return np.asarray(ds.labels)


def stratified_split(ds: Dataset, train_frac: float = 0.8, seed: int = 0) -> SplitPlan:
    """Per-class random partition into train and test at train_frac."""
    if not 0.0 < train_frac < 1.0:
        raise StratificationError(f"train_frac must be in (0, 1), got {train_frac}")
    labels = _require_labels(ds)
    order = _canonical_order(ds)
    gen = rngmod.spawn(seed, "stratified-split")
    train: list[int] = []
    test: list[int] = []
    for cls in (0, 1):
        members = order[labels[order] == cls]
        if members.size < 2:
            raise StratificationError(f"class {cls} has {members.size} member(s); "
                                      "need at least 2 to split")
        perm = gen.permutation(members.size)
        n_train = int(np.floor(train_frac * members.size + 0.5))
        n_train = min(max(n_train, 1), members.size - 1)
        train.extend(int(i) for i in members[perm[:n_train]])
        test.extend(int(i) for i in members[perm[n_train:]])
    return SplitPlan(tuple(sorted(train)), tuple(sorted(test)), seed)


def stratified_kfold(ds: Dataset, k: int = 5, seed: int = 0) -> list[SplitPlan]:
    """k stratified folds; each plan holds one fold as test."""
    if k < 2:
        raise StratificationError(f"k must be at least 2, got {k}")
    labels = _require_labels(ds)
    order = _canonical_order(ds)
    gen = rngmod.spawn(seed, "stratified-kfold", k)
    fold_of = np.empty(ds.n_rows, dtype=int)
    totals = np.zeros(k, dtype=int)
    for cls in (0, 1):
        members = order[labels[order] == cls]
        if members.size < k:
            raise StratificationError(f"class {cls} has {members.size} member(s); "
                                      f"need at least k={k}")
        shuffled = members[gen.permutation(members.size)]
        per_fold = np.full(k, members.size // k)
        # spread the remainder onto the currently smallest folds so total
        # fold sizes stay as equal as possible across classes
        for fold in sorted(range(k), key=lambda f: (totals[f], f))[: members.size % k]:
            per_fold[fold] += 1
        stop = np.cumsum(per_fold)
        start = stop - per_fold
        for fold in range(k):
            fold_of[shuffled[start[fold]:stop[fold]]] = fold
        totals += per_fold
    plans = []
    for fold in range(k):
        test = np.flatnonzero(fold_of == fold)
        train = np.flatnonzero(fold_of != fold)
        plans.append(SplitPlan(tuple(int(i) for i in train),
                               tuple(int(i) for i in test), seed))
    return plans


__all__ = ["drop_high_na_columns", "drop_incomplete_rows", "Standardizer",
           "standardize", "OneHotEncoder", "one_hot", "feature_groups",
           "SplitPlan", "stratified_split", "stratified_kfold", "na_profile"]
