"""Clinical cohort ingestion and preprocessing.

A cohort CSV holds one row per subject visit. Preprocessing runs in this
order: median/mode imputation over the whole cohort, one-hot encoding of
categorical columns, concatenation of the input visits into one row per
subject, and per-column min-max scaling into [0, 1].
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyDesignError,
    ImputationError,
    IntegrityError,
    NormalizationError,
    ParseError,
    SchemaError,
    ShapeError,
)

VISIT_MONTHS = (0, 12, 24, 48)
REQUIRED_COLUMNS = ("subject_id", "visit_month", "diagnosis", "age", "sex", "apoe4")
FEATURE_GROUPS = ("memory", "cognition", "function", "other")
KINDS = ("numeric", "categorical")


class Diagnosis(str, Enum):
    CONTROL = "CN"
    MCI = "MCI"
    DEMENTIA = "AD"

    @property
    def severity(self) -> int:
        return {"CN": 0, "MCI": 1, "AD": 2}[self.value]


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str
    group: str
    # set on indicator columns produced by one_hot_encode
    source: str | None = None
    token: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.group not in FEATURE_GROUPS:
            raise SchemaError(f"column {self.name!r}: unknown feature group {self.group!r}")

    @property
    def encoding(self) -> str:
        if self.token is not None:
            return f"indicator:{self.source}={self.token}"
        return self.kind


@dataclass(frozen=True)
class ClinicalRecord:
    subject_id: str
    visit_month: int
    diagnosis: Diagnosis
    age: float
    sex: str
    apoe4_count: int | None
    features: tuple

    def __post_init__(self):
        if self.visit_month not in VISIT_MONTHS:
            raise SchemaError(f"subject {self.subject_id}: visit month {self.visit_month} not in {VISIT_MONTHS}")
        if self.apoe4_count is not None and self.apoe4_count not in (0, 1, 2):
            raise SchemaError(f"subject {self.subject_id}: apoe4 count {self.apoe4_count} not in {{0, 1, 2}}")
        if not self.age > 0:
            raise SchemaError(f"subject {self.subject_id}: age must be positive")
        if self.sex not in ("F", "M"):
            raise SchemaError(f"subject {self.subject_id}: sex must be F or M")


@dataclass
class Cohort:
    schema: tuple[ColumnSpec, ...]
    records: list[ClinicalRecord]

    def __post_init__(self):
        self.schema = tuple(self.schema)
        width = len(self.schema)
        seen = set()
        for rec in self.records:
            if len(rec.features) != width:
                raise SchemaError(
                    f"subject {rec.subject_id} month {rec.visit_month}: "
                    f"{len(rec.features)} features, schema has {width}"
                )
            key = (rec.subject_id, rec.visit_month)
            if key in seen:
                raise IntegrityError(f"duplicate visit: subject {key[0]} month {key[1]}")
            seen.add(key)

    def __len__(self):
        return len(self.records)

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def column(self, j: int) -> list:
        return [rec.features[j] for rec in self.records]

    def subjects(self) -> list[str]:
        """Subject ids in order of first appearance."""
        return list(dict.fromkeys(rec.subject_id for rec in self.records))


@dataclass(frozen=True)
class RowMeta:
    subject_id: str
    diagnosis: Diagnosis | None
    apoe4_count: int | None
    age: float
    sex: str
    visit_diagnoses: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    source: str
    group: str
    encoding: str
    visit: int | None = None


@dataclass
class MinMaxStats:
    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, raw) -> np.ndarray:
        """Scale with stored statistics; values outside the range are clamped."""
        raw = _check_finite(raw)
        if raw.shape[1] != self.mins.shape[0]:
            raise ShapeError(f"expected {self.mins.shape[0]} columns, got {raw.shape[1]}")
        span = self.maxs - self.mins
        out = np.zeros_like(raw)
        ok = span > 0
        out[:, ok] = (raw[:, ok] - self.mins[ok]) / span[ok]
        return np.clip(out, 0.0, 1.0)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    row_meta: list[RowMeta]
    col_meta: list[ColumnMeta]
    stats: MinMaxStats | None = None
    raw: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ShapeError("feature matrix must be 2-D")
        if self.col_meta and len(self.col_meta) != self.values.shape[1]:
            raise ShapeError(f"{len(self.col_meta)} column descriptors for {self.values.shape[1]} columns")

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def subject_ids(self) -> list[str]:
        return [r.subject_id for r in self.row_meta]

    @property
    def groups(self) -> list[str]:
        return [c.group for c in self.col_meta]


# ---------------------------------------------------------------- file I/O

def load_schema(path) -> list[ColumnSpec]:
    """Read a `column_name,kind,feature_group` sidecar."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ParseError(f"schema entry needs 3 fields, got {len(parts)}", lineno)
            out.append(ColumnSpec(*parts))
    if len({c.name for c in out}) != len(out):
        raise SchemaError("schema lists a column twice")
    return out


def write_schema(schema: Iterable[ColumnSpec], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for c in schema:
            fh.write(f"{c.name},{c.kind},{c.group}\n")


def _parse_number(text, what, lineno):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{what}: not a number: {text!r}", lineno) from None


def load_cohort(path, schema: Sequence[ColumnSpec]) -> Cohort:
    schema = tuple(schema)
    names = [c.name for c in schema]
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        header = [h.strip() for h in header]
        if tuple(header[:6]) != REQUIRED_COLUMNS:
            raise SchemaError(f"header must start with {', '.join(REQUIRED_COLUMNS)}")
        if header[6:] != names:
            extra = sorted(set(header[6:]) - set(names))
            missing = sorted(set(names) - set(header[6:]))
            raise SchemaError(
                f"schema mismatch: unknown columns {extra}, missing columns {missing}"
                if extra or missing else "schema mismatch: feature column order differs"
            )
        records = []
        seen = {}
        for row in reader:
            lineno = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            sid, month, dx, age, sex, apoe = (v.strip() for v in row[:6])
            try:
                diagnosis = Diagnosis(dx)
            except ValueError:
                raise SchemaError(f"line {lineno}: unknown diagnosis token {dx!r}") from None
            try:
                month = int(month)
            except ValueError:
                raise ParseError(f"visit_month: not an integer: {month!r}", lineno) from None
            apoe4 = None if apoe == "" else int(_parse_number(apoe, "apoe4", lineno))
            feats = []
            for spec, cell in zip(schema, row[6:]):
                cell = cell.strip()
                if cell == "":
                    feats.append(None)
                elif spec.kind == "numeric":
                    feats.append(_parse_number(cell, spec.name, lineno))
                else:
                    feats.append(cell)
            key = (sid, month)
            if key in seen:
                raise IntegrityError(
                    f"line {lineno}: duplicate visit for subject {sid} month {month} "
                    f"(first seen on line {seen[key]})"
                )
            seen[key] = lineno
            try:
                records.append(ClinicalRecord(sid, month, diagnosis, _parse_number(age, "age", lineno),
                                              sex, apoe4, tuple(feats)))
            except SchemaError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
    return Cohort(schema, records)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_cohort(cohort: Cohort, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(REQUIRED_COLUMNS) + cohort.feature_names)
        for r in cohort.records:
            w.writerow([r.subject_id, r.visit_month, r.diagnosis.value, _fmt(float(r.age)), r.sex,
                        _fmt(r.apoe4_count)] + [_fmt(v) for v in r.features])


# ---------------------------------------------------------------- imputation

def imputation_values(cohort: Cohort) -> list:
    """Per-column fill values: median for numeric, mode for categorical.

    Mode ties go to the token that sorts first.
    """
    if not cohort.records:
        raise ImputationError("cannot impute an empty cohort")
    fills = []
    for j, spec in enumerate(cohort.schema):
        observed = [v for v in cohort.column(j) if v is not None]
        if not observed:
            raise ImputationError(f"column {spec.name!r} has no observed values")
        if spec.kind == "numeric":
            fills.append(float(np.median(np.asarray(observed, dtype=float))))
        else:
            counts = {}
            for tok in observed:
                counts[tok] = counts.get(tok, 0) + 1
            best = max(counts.values())
            fills.append(min(t for t, c in counts.items() if c == best))
    return fills


def impute(cohort: Cohort, policy: str = "median_mode", fill: Sequence | None = None) -> Cohort:
    if policy != "median_mode":
        raise ValueError(f"unknown imputation policy {policy!r}")
    if fill is None:
        fill = imputation_values(cohort)
    if len(fill) != len(cohort.schema):
        raise ShapeError("fill values do not match the schema")
    records = []
    for rec in cohort.records:
        if any(v is None for v in rec.features):
            feats = tuple(f if v is None else v for v, f in zip(rec.features, fill))
            rec = replace(rec, features=feats)
        records.append(rec)
    return Cohort(cohort.schema, records)


# ---------------------------------------------------------------- encoding

def category_vocabulary(cohort: Cohort) -> dict[str, list[str]]:
    return {
        spec.name: sorted({v for v in cohort.column(j) if v is not None})
        for j, spec in enumerate(cohort.schema)
        if spec.kind == "categorical"
    }


def one_hot_encode(cohort: Cohort, vocabulary: dict | None = None) -> tuple[Cohort, list[ColumnSpec]]:
    """Replace each categorical column by one 0/1 indicator per token.

    Indicators follow token sort order and sit where their source column
    was. With a `vocabulary` (from a training cohort), unseen tokens are
    rejected rather than silently mapped to all-zero.
    """
    if vocabulary is None:
        vocabulary = category_vocabulary(cohort)
    expanded = []
    plan = []  # (source index, token or None)
    for j, spec in enumerate(cohort.schema):
        if spec.kind == "numeric":
            expanded.append(spec)
            plan.append((j, None))
            continue
        for tok in vocabulary[spec.name]:
            expanded.append(ColumnSpec(f"{spec.name}={tok}", "numeric", spec.group, source=spec.name, token=tok))
            plan.append((j, tok))
    known = {name: set(toks) for name, toks in vocabulary.items()}
    records = []
    for rec in cohort.records:
        for j, spec in enumerate(cohort.schema):
            v = rec.features[j]
            if spec.kind == "categorical":
                if v is None:
                    raise ImputationError(f"column {spec.name!r} still has missing values; impute first")
                if v not in known[spec.name]:
                    raise SchemaError(f"column {spec.name!r}: unknown category {v!r}")
            elif v is None:
                raise ImputationError(f"column {spec.name!r} still has missing values; impute first")
        feats = tuple(
            float(rec.features[j]) if tok is None else float(rec.features[j] == tok)
            for j, tok in plan
        )
        records.append(replace(rec, features=feats))
    return Cohort(expanded, records), expanded


# ---------------------------------------------------------------- scaling

def _check_finite(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ShapeError("expected a 2-D matrix")
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, j = bad[0]
        raise NormalizationError(f"non-finite value at row {i}, column {j}")
    return values


def min_max_normalize(values, row_meta=None, col_meta=None) -> FeatureMatrix:
    """Map each column onto [0, 1]; constant columns become all zero."""
    raw = _check_finite(values)
    if raw.shape[0] < 2:
        raise NormalizationError("min-max scaling needs at least two rows")
    stats = MinMaxStats(raw.min(axis=0), raw.max(axis=0))
    return FeatureMatrix(stats.transform(raw), list(row_meta or []), list(col_meta or []),
                         stats=stats, raw=raw)


# ---------------------------------------------------------------- design

def design_columns(schema: Sequence[ColumnSpec], input_months=(0, 12)) -> list[ColumnMeta]:
    return [
        ColumnMeta(f"{c.name}@m{m}", c.source or c.name, c.group, c.encoding, m)
        for m in input_months
        for c in schema
    ]


def assemble_design(cohort: Cohort, input_months=(0, 12), horizon: int | None = 24,
                    require_horizon: bool = True, stats: MinMaxStats | None = None) -> FeatureMatrix:
    """One row per subject: input-visit features side by side.

    `cohort` must already be imputed and encoded. Subjects lacking any input
    visit are dropped, as are subjects without a horizon diagnosis when
    `require_horizon` is set. Scaling uses `stats` when given (held-out
    data), otherwise statistics of the assembled rows.
    """
    if horizon is not None and horizon not in VISIT_MONTHS:
        raise SchemaError(f"horizon {horizon} is not a visit month")
    for c in cohort.schema:
        if c.kind != "numeric":
            raise SchemaError(f"column {c.name!r} is categorical; encode before assembling")
    visits: dict[str, dict[int, ClinicalRecord]] = {}
    for rec in cohort.records:
        visits.setdefault(rec.subject_id, {})[rec.visit_month] = rec
    rows, meta = [], []
    for sid, by_month in visits.items():
        if any(m not in by_month for m in input_months):
            continue
        target = by_month.get(horizon) if horizon is not None else None
        if require_horizon and target is None:
            continue
        base = by_month[input_months[0]]
        rows.append([v for m in input_months for v in by_month[m].features])
        meta.append(RowMeta(
            sid,
            target.diagnosis if target is not None else None,
            base.apoe4_count,
            base.age,
            base.sex,
            {m: r.diagnosis for m, r in sorted(by_month.items())},
        ))
    if not rows:
        raise EmptyDesignError(
            f"no subject has visits {list(input_months)}"
            + (f" and a month-{horizon} diagnosis" if require_horizon else "")
        )
    raw = np.asarray(rows, dtype=float)
    cols = design_columns(cohort.schema, input_months)
    if stats is None:
        fm = min_max_normalize(raw, meta, cols)
    else:
        fm = FeatureMatrix(stats.transform(raw), meta, cols, stats=stats, raw=raw)
    return fm


# ---------------------------------------------------------------- pipeline glue

@dataclass
class Preprocessor:
    """Training-time preprocessing state, replayable on new cohorts."""

    schema: list[ColumnSpec]
    fill: list
    vocabulary: dict
    stats: MinMaxStats
    input_months: tuple = (0, 12)
    horizon: int = 24

    @classmethod
    def fit(cls, cohort: Cohort, horizon: int = 24, input_months=(0, 12)):
        fill = imputation_values(cohort)
        imputed = impute(cohort, fill=fill)
        vocab = category_vocabulary(imputed)
        encoded, _ = one_hot_encode(imputed, vocab)
        fm = assemble_design(encoded, input_months, horizon)
        return cls(list(cohort.schema), fill, vocab, fm.stats, tuple(input_months), horizon), fm

    def transform(self, cohort: Cohort, require_horizon: bool = False) -> FeatureMatrix:
        if [c.name for c in cohort.schema] != [c.name for c in self.schema]:
            raise SchemaError("schema mismatch with the training cohort")
        imputed = impute(cohort, fill=self.fill)
        encoded, _ = one_hot_encode(imputed, self.vocabulary)
        return assemble_design(encoded, self.input_months, self.horizon,
                               require_horizon=require_horizon, stats=self.stats)

    def to_json(self) -> str:
        return json.dumps({
            "schema": [[c.name, c.kind, c.group] for c in self.schema],
            "fill": self.fill,
            "vocabulary": self.vocabulary,
            "mins": [float(v) for v in self.stats.mins],
            "maxs": [float(v) for v in self.stats.maxs],
            "input_months": list(self.input_months),
            "horizon": self.horizon,
        }, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str):
        d = json.loads(text)
        return cls(
            [ColumnSpec(*c) for c in d["schema"]],
            d["fill"],
            d["vocabulary"],
            MinMaxStats(np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float)),
            tuple(d["input_months"]),
            d["horizon"],
        )

