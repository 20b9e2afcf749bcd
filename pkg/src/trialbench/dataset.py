"""Typed tabular dataset: values plus an explicit missingness mask.

A Dataset is the single currency of the pipeline. It is immutable after
construction (backing arrays are frozen), so it can be shared read-only
across parallel workers. Categorical cells store level codes; the level
names live on the ColumnSpec. Missing cells store NaN and are flagged in
the mask, so a flagged cell never carries a usable value.
"""

import csv
import json
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from trialbench.errors import ParseError, SchemaError
from trialbench.schema import KEY_COLUMNS, PLANTINGS, ColumnSpec

DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "na", "N/A"})
MISSING_TOKEN = "NA"


class RowKey(NamedTuple):
    year: int
    region: str
    planting: str
    clone_id: str


@dataclass(frozen=True)
class NAProfile:
    """Per-column missing-cell counts out of n_rows."""

    counts: dict[str, int]
    n_rows: int

    def __post_init__(self):
        if self.n_rows <= 0:
            raise SchemaError("NAProfile needs a positive row count")
        bad = {n: c for n, c in self.counts.items() if c < 0 or c > self.n_rows}
        if bad:
            raise SchemaError(f"NA counts outside [0, n_rows]: {bad}")

    def rate(self, name: str) -> float:
        return self.counts.get(name, 0) / self.n_rows

    def to_doc(self) -> dict:
        return {"n_rows": self.n_rows, "counts": dict(self.counts)}

    @classmethod
    def from_doc(cls, doc: dict) -> "NAProfile":
        return cls(counts={k: int(v) for k, v in doc["counts"].items()},
                   n_rows=int(doc["n_rows"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_doc(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NAProfile":
        with open(path, encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    specs: tuple[ColumnSpec, ...]
    values: np.ndarray          # (n_rows, n_cols) float64, NaN where missing
    missing: np.ndarray         # (n_rows, n_cols) bool
    keys: tuple[RowKey, ...]
    labels: np.ndarray | None = None   # (n_rows,) int8 in {0, 1}

    def __post_init__(self):
        values = _freeze(np.asarray(self.values, dtype=np.float64))
        missing = _freeze(np.asarray(self.missing, dtype=bool))
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "keys", tuple(self.keys))
        if values.shape != missing.shape:
            raise SchemaError("values and missing mask differ in shape")
        n, d = values.shape
        if d != len(self.specs):
            raise SchemaError(f"{d} columns but {len(self.specs)} column specs")
        if len(self.keys) != n:
            raise SchemaError(f"{n} rows but {len(self.keys)} row keys")
        if np.isnan(values[~missing]).any():
            raise SchemaError("non-missing cell holds NaN")
        if not np.isnan(values[missing]).all():
            raise SchemaError("missing cell holds a value; flags must be exclusive")
        for j, spec in enumerate(self.specs):
            if spec.kind == "categorical" and missing[:, j].any():
                raise SchemaError(f"categorical column {spec.name!r} has missing cells")
        if self.labels is not None:
            labels = _freeze(np.asarray(self.labels, dtype=np.int8))
            object.__setattr__(self, "labels", labels)
            if labels.shape != (n,):
                raise SchemaError("labels length differs from row count")
            if not np.isin(labels, (0, 1)).all():
                raise SchemaError("labels must be 0 or 1")

    # -- introspection ----------------------------------------------------

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def col_index(self, name: str) -> int:
        for j, s in enumerate(self.specs):
            if s.name == name:
                return j
        raise SchemaError(f"no column named {name!r}")

    def spec(self, name: str) -> ColumnSpec:
        return self.specs[self.col_index(name)]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.col_index(name)]

    def column_missing(self, name: str) -> np.ndarray:
        return self.missing[:, self.col_index(name)]

    def decode_level(self, name: str, code: float) -> str:
        return self.spec(name).levels[int(code)]

    # -- derivation (always returns a new Dataset) ------------------------

    def with_labels(self, labels) -> "Dataset":
        return replace(self, labels=labels)

    def with_values(self, values, missing=None) -> "Dataset":
        return replace(self, values=values,
                       missing=self.missing if missing is None else missing)

    def select_columns(self, names) -> "Dataset":
        idx = [self.col_index(n) for n in names]
        return replace(self, specs=tuple(self.specs[j] for j in idx),
                       values=self.values[:, idx], missing=self.missing[:, idx])

    def select_rows(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return replace(self, values=self.values[rows], missing=self.missing[rows],
                       keys=tuple(self.keys[i] for i in rows),
                       labels=None if self.labels is None else self.labels[rows])

    def matrix(self) -> np.ndarray:
        """Dense feature matrix; requires a fully observed dataset."""
        if self.missing.any():
            holes = int(self.missing.sum())
            raise SchemaError(f"dataset still has {holes} missing cells")
        return np.array(self.values, dtype=np.float64)


def na_profile(ds: Dataset) -> NAProfile:
    """Exact per-column missing counts."""
    counts = ds.missing.sum(axis=0)
    return NAProfile({s.name: int(c) for s, c in zip(ds.specs, counts)}, ds.n_rows)


# -- CSV ingestion ---------------------------------------------------------


def _parse_key(row: dict, path, line: int) -> RowKey:
    try:
        year = int(float(row["Year"]))
    except ValueError:
        raise ParseError(f"{path}: line {line}: unparsable Year {row['Year']!r}",
                         row=line, column="Year") from None
    planting = row["Planting"].strip().lower()
    if planting not in PLANTINGS:
        raise ParseError(f"{path}: line {line}: planting must be one of "
                         f"{PLANTINGS}, got {row['Planting']!r}",
                         row=line, column="Planting")
    return RowKey(year, row["Trial Region"].strip(), planting, row["Clone ID"].strip())


def load_trials(path, schema, missing_tokens=DEFAULT_MISSING_TOKENS) -> Dataset:
    """Read a trial sheet CSV against a declared schema.

    Header columns must each match a ColumnSpec by name or be one of the
    reserved key columns. Cells equal to a missing token become missing
    flags; categorical cells are mapped to level codes. A response column
    present in the file becomes the label vector and must be complete.
    """
    by_name = {s.name: s for s in schema}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing_keys = [k for k in KEY_COLUMNS if k not in header]
        if missing_keys:
            raise SchemaError(f"{path}: key columns absent: {missing_keys}")
        for col in header:
            if col not in by_name and col not in KEY_COLUMNS:
                raise SchemaError(f"{path}: undeclared column {col!r}")
        feature_cols = [c for c in header if c in by_name
                        and by_name[c].kind != "response"]
        response_cols = [c for c in header if c in by_name
                         and by_name[c].kind == "response"]
        rows = list(reader)

    n = len(rows)
    specs = tuple(by_name[c] for c in feature_cols)
    values = np.full((n, len(specs)), np.nan)
    mask = np.zeros((n, len(specs)), dtype=bool)
    keys = []
    labels = np.zeros(n, dtype=np.int8) if response_cols else None

    for i, row in enumerate(rows):
        line = i + 2  # header is line 1
        keys.append(_parse_key(row, path, line))
        for j, col in enumerate(feature_cols):
            cell = row[col].strip()
            if cell in missing_tokens:
                mask[i, j] = True
                continue
            spec = specs[j]
            if spec.kind == "categorical":
                if cell not in spec.levels:
                    raise ParseError(f"{path}: line {line}: column {col!r}: "
                                     f"level {cell!r} not declared",
                                     row=line, column=col)
                values[i, j] = spec.levels.index(cell)
            else:
                try:
                    values[i, j] = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: line {line}: column {col!r}: "
                                     f"unparsable numeric cell {cell!r}",
                                     row=line, column=col) from None
        for col in response_cols:
            cell = row[col].strip()
            if cell in missing_tokens:
                raise ParseError(f"{path}: line {line}: response column {col!r} "
                                 "has a missing cell; filter unlabeled rows first",
                                 row=line, column=col)
            if cell not in ("0", "1"):
                raise ParseError(f"{path}: line {line}: response must be 0 or 1, "
                                 f"got {cell!r}", row=line, column=col)
            labels[i] = int(cell)

    return Dataset(specs=specs, values=values, missing=mask,
                   keys=tuple(keys), labels=labels)


def save_trials(ds: Dataset, path) -> None:
    """Write a Dataset back to CSV; inverse of load_trials bit-for-bit.

    Floats are serialized with repr, which round-trips exactly; missing
    cells are written as the canonical "NA" token.
    """
    header = list(KEY_COLUMNS)
    header += [s.name for s in ds.specs if s.name not in KEY_COLUMNS]
    if ds.labels is not None:
        header.append("true_keeps")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(ds.n_rows):
            key = ds.keys[i]
            row = {"Year": str(key.year), "Trial Region": key.region,
                   "Planting": key.planting, "Clone ID": key.clone_id}
            for j, spec in enumerate(ds.specs):
                if ds.missing[i, j]:
                    cell = MISSING_TOKEN
                elif spec.kind == "categorical":
                    cell = spec.levels[int(ds.values[i, j])]
                else:
                    cell = repr(float(ds.values[i, j]))
                row[spec.name] = cell
            if ds.labels is not None:
                row["true_keeps"] = str(int(ds.labels[i]))
            writer.writerow([row[c] for c in header])
