"""Tabular data: loading, quantile binning, categorical encoding, counting.

All attribution estimators reduce to empirical counts over a reference
dataset; :func:`count_region` is the single counting primitive they share.
Categorical columns are stored as float codes indexing into the declared
category list, so the value matrix is always numeric.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import ConfigError, DatasetError

__all__ = [
    "FeatureMeta",
    "Dataset",
    "PlayerPartition",
    "Between",
    "EqualTo",
    "load_dataset",
    "parse_schema",
    "quantile_discretize",
    "DiscretizeResult",
    "encode_categorical",
    "decode_indicators",
    "count_region",
]


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str  # continuous | categorical | indicator
    categories: tuple | None = None
    bin_edges: tuple[float, ...] | None = None
    source_feature: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical", "indicator"):
            raise DatasetError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.bin_edges is not None:
            edges = self.bin_edges
            if edges[0] != -np.inf or edges[-1] != np.inf:
                raise DatasetError(
                    f"column {self.name!r}: bin edges must start at -inf and end at +inf"
                )
            if any(a >= b for a, b in zip(edges, edges[1:])):
                raise DatasetError(
                    f"column {self.name!r}: bin edges must be strictly ascending"
                )

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("categorical", "indicator")


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray  # (n, p) float, read-only
    meta: tuple[FeatureMeta, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != len(self.meta):
            raise DatasetError(
                f"value matrix shape {values.shape} does not match "
                f"{len(self.meta)} column descriptors"
            )
        for j, m in enumerate(self.meta):
            col = values[:, j]
            if m.kind == "continuous":
                if not np.all(np.isfinite(col)):
                    raise DatasetError(f"column {m.name!r} contains non-finite values")
            elif m.kind == "categorical":
                codes = np.arange(len(m.categories))
                if not np.isin(col, codes).all():
                    raise DatasetError(
                        f"column {m.name!r} holds codes outside its category list"
                    )
            else:  # indicator
                if not np.isin(col, (0.0, 1.0)).all():
                    raise DatasetError(f"indicator column {m.name!r} is not 0/1")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        for j, m in enumerate(self.meta):
            if m.name == name:
                return j
        raise KeyError(name)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([m.name for m in self.meta])
        for row in self.values:
            out = []
            for v, m in zip(row, self.meta):
                if m.kind == "categorical":
                    out.append(m.categories[int(v)])
                else:
                    out.append(repr(float(v)))
            w.writerow(out)
        return buf.getvalue()

    def schema_text(self) -> str:
        lines = []
        for m in self.meta:
            if m.kind == "categorical":
                cats = ",".join(str(c) for c in m.categories)
                lines.append(f"{m.name} = categorical({cats})")
            elif m.kind == "indicator":
                lines.append(f"{m.name} = indicator")
            else:
                lines.append(f"{m.name} = continuous")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PlayerPartition:
    """Disjoint groups of model columns treated as single game players."""

    players: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.players) != len(self.labels):
            raise ConfigError("one label per player group required")
        seen: set[int] = set()
        for group in self.players:
            if not group:
                raise ConfigError("player groups must be nonempty")
            if seen & set(group):
                raise ConfigError("player groups must be pairwise disjoint")
            seen |= set(group)

    def __len__(self) -> int:
        return len(self.players)

    @classmethod
    def singletons(cls, p: int, names: Sequence[str] | None = None) -> "PlayerPartition":
        labels = tuple(names) if names else tuple(f"x{j}" for j in range(p))
        return cls(tuple((j,) for j in range(p)), labels)

    def expand(self, player_ids: Iterable[int]) -> frozenset[int]:
        cols: set[int] = set()
        for i in player_ids:
            cols.update(self.players[i])
        return frozenset(cols)

    def to_json(self) -> str:
        return json.dumps(
            {"players": [list(g) for g in self.players], "labels": list(self.labels)}
        )

    @classmethod
    def from_json(cls, text: str) -> "PlayerPartition":
        doc = json.loads(text)
        return cls(
            tuple(tuple(int(c) for c in g) for g in doc["players"]),
            tuple(doc["labels"]),
        )


class Between(NamedTuple):
    """Half-open interval constraint lo < x <= hi."""

    lo: float
    hi: float


class EqualTo(NamedTuple):
    value: float


_SCHEMA_RE = re.compile(r"^\s*(?P<name>[^=]+?)\s*=\s*(?P<spec>.+?)\s*$")


def parse_schema(text: str) -> dict[str, FeatureMeta]:
    """Parse the plain-text sidecar, one ``column = kind`` line per column."""
    out: dict[str, FeatureMeta] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _SCHEMA_RE.match(line)
        if not m:
            raise DatasetError(f"schema line {lineno}: expected 'column = kind'")
        name, spec = m.group("name"), m.group("spec")
        if spec == "continuous":
            out[name] = FeatureMeta(name, "continuous")
        elif spec == "indicator":
            out[name] = FeatureMeta(name, "indicator")
        elif spec.startswith("categorical(") and spec.endswith(")"):
            cats = tuple(c.strip() for c in spec[len("categorical(") : -1].split(","))
            out[name] = FeatureMeta(name, "categorical", categories=cats)
        else:
            raise DatasetError(f"schema line {lineno}: unknown kind {spec!r}")
    return out


def load_dataset(document: str, schema: Mapping[str, FeatureMeta] | str) -> Dataset:
    """Load a CSV document (text with header row) against a column schema."""
    if isinstance(schema, str):
        schema = parse_schema(schema)
    reader = csv.reader(io.StringIO(document))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("empty document") from None
    missing = [name for name in header if name not in schema]
    if missing:
        raise DatasetError(f"schema does not cover columns {missing}")
    meta = tuple(schema[name] for name in header)
    rows = []
    for rowno, raw in enumerate(reader, start=2):
        if not raw:
            continue
        if len(raw) != len(header):
            raise DatasetError(
                f"row {rowno}: expected {len(header)} fields, got {len(raw)}"
            )
        row = []
        for token, m in zip(raw, meta):
            if m.kind == "categorical":
                try:
                    row.append(float(m.categories.index(token.strip())))
                except ValueError:
                    raise DatasetError(
                        f"row {rowno}, column {m.name!r}: {token!r} is not one of "
                        f"{list(m.categories)}"
                    ) from None
            else:
                try:
                    row.append(float(token))
                except ValueError:
                    raise DatasetError(
                        f"row {rowno}, column {m.name!r}: non-numeric token {token!r}"
                    ) from None
        rows.append(row)
    return Dataset(np.asarray(rows, dtype=float), meta)


@dataclass(frozen=True)
class DiscretizeResult:
    dataset: Dataset
    partition: PlayerPartition | None
    warnings: tuple[str, ...]


def _quantile_edges(col: np.ndarray, q: int) -> tuple[list[float], bool]:
    # r/q empirical quantiles by order statistic: the ceil(n*r/q)-th smallest
    # value, no interpolation, so every edge is a data value.
    n = col.shape[0]
    ordered = np.sort(col)
    edges = []
    for r in range(1, q):
        k = int(np.ceil(n * r / q))
        edges.append(float(ordered[max(k - 1, 0)]))
    deduped = sorted(set(edges))
    return deduped, len(deduped) < len(edges)


def quantile_discretize(
    ds: Dataset,
    columns: Sequence[int],
    q: int = 10,
    expand: bool = False,
) -> DiscretizeResult:
    """Replace continuous columns with quantile-bin codes.

    Each value maps to the bin index r such that it falls in
    ``[edge[r], edge[r+1])`` with -inf/+inf sentinels at the ends.  With
    ``expand=True`` the binned columns are additionally expanded into q
    indicator columns apiece, grouped as one player each in the returned
    partition (untouched columns stay singleton players).
    """
    if q < 2:
        raise ConfigError("q must be at least 2")
    for j in columns:
        if ds.meta[j].kind != "continuous":
            raise ConfigError(f"column {ds.meta[j].name!r} is not continuous")
    values = ds.values.copy()
    meta = list(ds.meta)
    warnings: list[str] = []
    for j in columns:
        inner, collapsed = _quantile_edges(ds.values[:, j], q)
        if collapsed:
            warnings.append(
                f"column {ds.meta[j].name!r}: duplicate quantile edges collapsed, "
                f"{len(inner) + 1} bins instead of {q}"
            )
        edges = (-np.inf, *inner, np.inf)
        # [lo, hi) bins: index of the first edge strictly above the value
        codes = np.searchsorted(np.asarray(inner), ds.values[:, j], side="right")
        values[:, j] = codes
        meta[j] = FeatureMeta(
            ds.meta[j].name,
            "categorical",
            categories=tuple(range(len(inner) + 1)),
            bin_edges=edges,
            source_feature=j,
        )
    binned = Dataset(values, tuple(meta))
    if not expand:
        return DiscretizeResult(binned, None, tuple(warnings))

    groups: list[tuple[int, ...]] = []
    labels: list[str] = []
    out_cols: list[np.ndarray] = []
    out_meta: list[FeatureMeta] = []
    for j, m in enumerate(binned.meta):
        if j not in columns:
            groups.append((len(out_cols),))
            labels.append(m.name)
            out_cols.append(binned.values[:, j])
            out_meta.append(m)
            continue
        group = []
        for r in range(len(m.categories)):
            group.append(len(out_cols))
            out_cols.append((binned.values[:, j] == r).astype(float))
            out_meta.append(
                FeatureMeta(f"{m.name}__bin{r}", "indicator", source_feature=j)
            )
        groups.append(tuple(group))
        labels.append(m.name)
    expanded = Dataset(np.column_stack(out_cols), tuple(out_meta))
    return DiscretizeResult(
        expanded, PlayerPartition(tuple(groups), tuple(labels)), tuple(warnings)
    )


def encode_categorical(
    ds: Dataset, column: int, scheme: str = "one_hot", drop=None
) -> tuple[Dataset, tuple[int, ...]]:
    """Append indicator columns for one categorical column.

    The source column is kept in place (handy for comparing against the
    unencoded representation); the returned tuple lists the new column ids,
    to be grouped as a single player.
    """
    m = ds.meta[column]
    if m.kind != "categorical":
        raise ConfigError(f"column {m.name!r} is not categorical")
    if len(m.categories) < 2:
        raise ConfigError(f"column {m.name!r} has a single category, nothing to encode")
    if scheme not in ("one_hot", "dummy"):
        raise ConfigError(f"unknown encoding scheme {scheme!r}")
    cats = list(m.categories)
    if scheme == "dummy":
        dropped = cats[-1] if drop is None else drop
        if dropped not in cats:
            raise ConfigError(f"dropped category {dropped!r} not in {cats}")
        encoded_cats = [c for c in cats if c != dropped]
    else:
        encoded_cats = cats
    cols = [ds.values]
    meta = list(ds.meta)
    group = []
    for c in encoded_cats:
        code = cats.index(c)
        group.append(len(meta))
        cols.append((ds.values[:, column] == code).astype(float)[:, None])
        meta.append(FeatureMeta(f"{m.name}={c}", "indicator", source_feature=column))
    return Dataset(np.hstack(cols), tuple(meta)), tuple(group)


def decode_indicators(ds: Dataset, group: Sequence[int]) -> np.ndarray:
    """Recover source-category codes from the indicator columns of one group."""
    source = ds.meta[group[0]].source_feature
    cats = ds.meta[source].categories
    encoded = [ds.meta[j].name.split("=", 1)[1] for j in group]
    sub = ds.values[:, list(group)]
    codes = np.empty(ds.n)
    for i in range(ds.n):
        hot = np.flatnonzero(sub[i])
        if len(hot) == 0:  # dummy encoding: all zeros means the dropped category
            remaining = [c for c in cats if str(c) not in encoded]
            codes[i] = cats.index(remaining[0])
        else:
            codes[i] = cats.index(type(cats[0])(encoded[int(hot[0])]))
    return codes


def count_region(ds: Dataset, constraints: Mapping[int, Between | EqualTo]) -> int:
    """Exact number of rows satisfying every constraint.

    Intervals are half-open, ``lo < x <= hi``, matching leaf regions; an
    empty constraint set counts all rows.
    """
    mask = np.ones(ds.n, dtype=bool)
    for col, c in constraints.items():
        v = ds.values[:, col]
        if isinstance(c, Between):
            mask &= (v > c.lo) & (v <= c.hi)
        elif isinstance(c, EqualTo):
            mask &= v == c.value
        else:
            raise TypeError(f"unknown constraint {c!r}")
    return int(mask.sum())
