"""Classification datasets: UCI-style delimited files and synthetic sets.

A loader is driven by a JSON schema describing each column::

    {
      "name": "pima",
      "delimiter": ",",            # null -> any whitespace
      "missing": "?",
      "class_labels": ["0", "1"],  # optional; fixes class order
      "columns": [
        {"name": "pregnant", "kind": "numeric"},
        {"name": "sex", "kind": "categorical", "categories": ["m", "f"]},
        {"name": "id", "kind": "ignore"},
        {"name": "class", "kind": "class"}
      ]
    }

Numeric columns are min-max scaled to [0, 1] and missing values are
replaced by the column mean. Categorical columns are one-hot encoded with
missing values mapped to all zeros. A column may also set
``"missing_indicator": true`` to emit an extra 0/1 input flagging absence,
and ``"unknown_as_missing": true`` (per column or schema-wide) to read values
outside a declared category list as missing instead of failing.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataError

KINDS = ("numeric", "categorical", "class", "ignore")
BUILTIN_SCHEMAS = ("cancer", "card", "pima", "horse", "sonar")


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    name: str = ""
    class_labels: tuple[str, ...] = ()
    feature_names: tuple[str, ...] = ()
    class_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 2 or len(inputs) != len(targets):
            raise DataError("inputs and targets must be 2-D with equal row counts")
        if len(targets) and not (
            np.all(targets.sum(axis=1) == 1) and np.all((targets == 0) | (targets == 1))
        ):
            raise DataError("targets must be one-hot")
        if np.isnan(inputs).any():
            raise DataError("inputs contain NaN")
        inputs.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        counts = targets.sum(axis=0).astype(int)
        counts.flags.writeable = False
        object.__setattr__(self, "class_counts", counts)
        if not self.class_labels:
            labels = tuple(str(i) for i in range(targets.shape[1]))
            object.__setattr__(self, "class_labels", labels)

    def __len__(self):
        return len(self.inputs)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.class_labels == other.class_labels
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.targets, other.targets)
        )

    @property
    def n_inputs(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_classes(self) -> int:
        return self.targets.shape[1]

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.targets, axis=1)

    def subset(self, idx, name=None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.inputs[idx],
            self.targets[idx],
            name or self.name,
            self.class_labels,
            self.feature_names,
        )

    def write_csv(self, path) -> None:
        """Canonical dump: feature columns, then one-hot target columns."""
        names = list(self.feature_names) or [f"x{i}" for i in range(self.n_inputs)]
        header = names + [f"class_{c}" for c in self.class_labels]
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for x, t in zip(self.inputs, self.targets):
                w.writerow([repr(float(v)) for v in x] + [int(v) for v in t])


def one_hot(labels, n_classes) -> np.ndarray:
    out = np.zeros((len(labels), n_classes))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def majority_fraction(d: Dataset) -> float:
    """Share of the most frequent class, in percent."""
    if len(d) == 0:
        raise DataError("empty dataset")
    return 100.0 * float(d.class_counts.max()) / len(d)


# schema ---------------------------------------------------------------------


@dataclass
class SchemaSpec:
    columns: list[dict]
    name: str = ""
    delimiter: str | None = ","
    missing: str = "?"
    class_labels: list[str] | None = None
    notes: str = ""
    unknown_as_missing: bool = False

    def __post_init__(self):
        kinds = [c.get("kind") for c in self.columns]
        for k in kinds:
            if k not in KINDS:
                raise DataError(f"unknown column kind {k!r}")
        if kinds.count("class") != 1:
            raise DataError("schema needs exactly one class column")
        if not any(k in ("numeric", "categorical") for k in kinds):
            raise DataError("schema needs at least one feature column")

    @classmethod
    def from_dict(cls, d: dict) -> "SchemaSpec":
        return cls(
            columns=d["columns"],
            name=d.get("name", ""),
            delimiter=d.get("delimiter", ","),
            missing=d.get("missing", "?"),
            class_labels=d.get("class_labels"),
            notes=d.get("notes", ""),
            unknown_as_missing=d.get("unknown_as_missing", False),
        )

    @classmethod
    def load(cls, path_or_name) -> "SchemaSpec":
        """Read a schema file, or a builtin schema by name (``"cancer"`` ...)."""
        if str(path_or_name) in BUILTIN_SCHEMAS:
            text = resources.files("neuroablate.schemas").joinpath(f"{path_or_name}.json").read_text()
        else:
            p = Path(path_or_name)
            if not p.exists():
                raise DataError(f"schema not found: {p}")
            text = p.read_text()
        return cls.from_dict(json.loads(text))

    def declared_width(self) -> int | None:
        """Input width implied by the schema alone, if every categorical lists its values."""
        width = 0
        for c in self.columns:
            if c["kind"] == "numeric":
                width += 1
            elif c["kind"] == "categorical":
                if "categories" not in c:
                    return None
                width += len(c["categories"])
            if c["kind"] in ("numeric", "categorical") and c.get("missing_indicator"):
                width += 1
        return width


def _read_rows(path, delimiter):
    p = Path(path)
    if not p.exists():
        raise DataError(f"data file not found: {p}")
    text = p.read_text()
    rows = []
    if delimiter is None:
        for line in text.splitlines():
            if line.strip():
                rows.append(line.split())
    else:
        for row in csv.reader(text.splitlines(), delimiter=delimiter):
            if row and any(cell.strip() for cell in row):
                rows.append([cell.strip() for cell in row])
    if not rows:
        raise DataError(f"empty file: {p}")
    return rows


def _float_or_nan(v, missing):
    if v == missing or v == "":
        return np.nan
    try:
        return float(v)
    except ValueError:
        raise DataError(f"non-numeric value {v!r}") from None


def load_csv(path, schema: SchemaSpec) -> Dataset:
    """Load a delimited classification file and encode it per ``schema``.

    Rows whose class value is missing are dropped.
    """
    rows = _read_rows(path, schema.delimiter)
    ncol = len(schema.columns)
    for i, r in enumerate(rows):
        if len(r) != ncol:
            raise DataError(f"row {i + 1} has {len(r)} fields, schema has {ncol}")
    cls_idx = next(i for i, c in enumerate(schema.columns) if c["kind"] == "class")
    rows = [r for r in rows if r[cls_idx] != schema.missing]
    if not rows:
        raise DataError(f"no labelled rows in {path}")

    raw_labels = [r[cls_idx] for r in rows]
    if schema.class_labels is not None:
        labels = [str(c) for c in schema.class_labels]
        unknown = sorted(set(raw_labels) - set(labels))
        if unknown:
            raise DataError(f"unknown class label(s) {unknown}")
    else:
        labels = sorted(set(raw_labels))
    lookup = {c: i for i, c in enumerate(labels)}
    targets = one_hot([lookup[v] for v in raw_labels], len(labels))

    blocks = []
    names = []
    for j, col in enumerate(schema.columns):
        kind = col["kind"]
        if kind not in ("numeric", "categorical"):
            continue
        values = [r[j] for r in rows]
        is_missing = np.array([v == schema.missing or v == "" for v in values])
        if is_missing.all():
            raise DataError(f"column {col['name']!r} is entirely missing")
        if kind == "numeric":
            x = np.array([_float_or_nan(v, schema.missing) for v in values])
            lo, hi = np.nanmin(x), np.nanmax(x)
            x = (x - lo) / (hi - lo) if hi > lo else np.where(np.isnan(x), np.nan, 0.0)
            x[is_missing] = np.nanmean(x)
            blocks.append(x[:, None])
            names.append(col["name"])
        else:
            cats = [str(c) for c in col.get("categories") or sorted(set(np.array(values)[~is_missing]))]
            pos = {c: i for i, c in enumerate(cats)}
            block = np.zeros((len(rows), len(cats)))
            for i, v in enumerate(values):
                if is_missing[i]:
                    continue
                if v not in pos:
                    if col.get("unknown_as_missing", schema.unknown_as_missing):
                        is_missing[i] = True
                        continue
                    raise DataError(f"column {col['name']!r}: unknown category {v!r}")
                block[i, pos[v]] = 1.0
            blocks.append(block)
            names.extend(f"{col['name']}={c}" for c in cats)
        if col.get("missing_indicator"):
            blocks.append(is_missing.astype(float)[:, None])
            names.append(f"{col['name']}?")
    inputs = np.hstack(blocks)
    return Dataset(inputs, targets, schema.name or Path(path).stem, tuple(labels), tuple(names))


# synthetic ------------------------------------------------------------------

XOR_INPUTS = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_CLASSES = np.array([0, 1, 1, 0])
BLOB_CENTERS = np.array([[0.25, 0.25], [0.75, 0.75]])
BLOB_SPREAD = 0.08


def gen_synthetic(kind: str, n: int = 4, seed: int = 0) -> Dataset:
    """Small benchmark sets: ``xor`` (truth table repeated) or ``blobs``.

    Blob inputs are clipped to [0, 1] so every dataset stays in the unit box.
    """
    if n < 4:
        raise DataError("synthetic datasets need n >= 4")
    if kind == "xor":
        idx = np.arange(n) % 4
        return Dataset(XOR_INPUTS[idx], one_hot(XOR_CLASSES[idx], 2), "xor", ("0", "1"), ("x0", "x1"))
    if kind == "blobs":
        rng = np.random.default_rng(seed)
        classes = np.arange(n) % 2
        x = BLOB_CENTERS[classes] + rng.normal(0.0, BLOB_SPREAD, size=(n, 2))
        x = np.clip(x, 0.0, 1.0)
        return Dataset(x, one_hot(classes, 2), "blobs", ("0", "1"), ("x0", "x1"))
    raise DataError(f"unknown synthetic dataset {kind!r}")


def holdout_split(d: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random ``(train, eval)`` split with ``fraction`` of cases held out."""
    if not 0 < fraction < 1:
        raise DataError("holdout fraction must lie in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(d))
    n_eval = max(1, int(round(fraction * len(d))))
    return d.subset(np.sort(order[n_eval:])), d.subset(np.sort(order[:n_eval]))
