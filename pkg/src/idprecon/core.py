"""Domain types shared by the data custodian and the attacker.

Datasets are immutable numeric tables over a typed schema. Categorical
attributes are stored as integer codes, assigned in the order the schema
lists the category labels, so both sides agree on the encoding without
looking at the data.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


class SchemaError(ValueError):
    """Raised for malformed schemas, rows, or predicates."""


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str = "numeric"
    lower: float = 0.0
    upper: float = 1.0
    precision: float = 1.0
    codebook: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if not self.precision > 0:
            raise SchemaError(f"{self.name}: precision must be positive")
        if self.kind == "numeric":
            if not self.lower < self.upper:
                raise SchemaError(f"{self.name}: need lower < upper, got [{self.lower}, {self.upper}]")
        else:
            if not self.codebook:
                raise SchemaError(f"{self.name}: categorical attribute needs a codebook")
            if len(set(self.codebook)) != len(self.codebook):
                raise SchemaError(f"{self.name}: duplicate category labels")
            if not (self.lower <= 0 and self.upper >= len(self.codebook) - 1):
                raise SchemaError(f"{self.name}: bounds must bracket codes 0..{len(self.codebook) - 1}")

    @classmethod
    def categorical(cls, name: str, labels: Sequence[str]) -> "AttributeSpec":
        labels = tuple(str(x) for x in labels)
        return cls(name, "categorical", 0.0, float(len(labels) - 1), 1.0, labels)

    @property
    def grid_size(self) -> int:
        """Number of distinguishable values ``lower + j * precision`` in the domain."""
        return int(math.floor((self.upper - self.lower) / self.precision + 1e-9)) + 1

    def grid_value(self, j: int) -> float:
        return self.lower + j * self.precision

    def grid_index(self, x: float) -> int:
        return _round_index((x - self.lower) / self.precision)

    def encode(self, raw) -> float:
        if self.kind == "categorical":
            try:
                return float(self.codebook.index(str(raw)))
            except ValueError:
                raise SchemaError(f"{self.name}: unknown category {raw!r}") from None
        return float(raw)

    def decode(self, x: float):
        if self.kind == "categorical":
            return self.codebook[int(round(x))]
        return x

    def span(self, u: float, v: float) -> tuple[int, int]:
        """Grid indices ``(first, last)`` of domain values inside ``[u, v)``.

        ``first > last`` means the range holds no domain value.
        """
        first = max(_ceil_index((u - self.lower) / self.precision), 0)
        last = min(_ceil_index((v - self.lower) / self.precision) - 1, self.grid_size - 1)
        return first, last


def _round_index(t: float) -> int:
    return int(round(t))


def _ceil_index(t: float) -> int:
    r = round(t)
    if abs(t - r) < 1e-9:
        return int(r)
    return math.ceil(t)


@dataclass(frozen=True)
class Schema:
    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")

    def __len__(self) -> int:
        return len(self.attributes)

    def __getitem__(self, i: int) -> AttributeSpec:
        return self.attributes[i]

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def check_index(self, i: int) -> None:
        if not 0 <= i < len(self.attributes):
            raise SchemaError(f"attribute index {i} out of range for {len(self.attributes)} attributes")

    def to_dict(self) -> dict:
        out = {}
        for a in self.attributes:
            entry = {"kind": a.kind, "lower": a.lower, "upper": a.upper, "precision": a.precision}
            if a.codebook is not None:
                entry["categories"] = list(a.codebook)
            out[a.name] = entry
        return out

    @classmethod
    def from_dict(cls, config: Mapping[str, Mapping]) -> "Schema":
        attrs = []
        for name, entry in config.items():
            kind = entry.get("kind", "numeric")
            if kind == "categorical":
                labels = entry.get("categories")
                if not labels:
                    raise SchemaError(f"{name}: categorical attribute needs 'categories'")
                attrs.append(AttributeSpec.categorical(name, labels))
            else:
                attrs.append(AttributeSpec(
                    name, "numeric", float(entry["lower"]), float(entry["upper"]),
                    float(entry.get("precision", 1.0)),
                ))
        return cls(tuple(attrs))


class Dataset:
    """Immutable table of records over a schema.

    The row count ``n`` is public metadata.
    """

    def __init__(self, schema: Schema, rows: Iterable[Sequence[float]] | np.ndarray = ()):
        arr = np.array(rows, dtype=np.float64)
        if arr.size == 0:
            arr = np.zeros((0, len(schema)), dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != len(schema):
            raise SchemaError(f"rows must have {len(schema)} columns, got shape {arr.shape}")
        for i, spec in enumerate(schema.attributes):
            col = arr[:, i]
            bad = np.flatnonzero((col < spec.lower) | (col > spec.upper) | np.isnan(col))
            if bad.size:
                r = int(bad[0])
                raise SchemaError(
                    f"row {r}, column {spec.name!r}: value {col[r]} outside [{spec.lower}, {spec.upper}]"
                )
        arr.setflags(write=False)
        self._schema = schema
        self._rows = arr

    @property
    def schema(self) -> Schema:
        return self._schema

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def n(self) -> int:
        return self._rows.shape[0]

    def __len__(self) -> int:
        return self.n

    def column(self, i: int) -> np.ndarray:
        self._schema.check_index(i)
        return self._rows[:, i]

    def append(self, row: Sequence[float]) -> "Dataset":
        return Dataset(self._schema, np.vstack([self._rows, np.asarray(row, dtype=np.float64)[None, :]]))

    def row_multiset(self) -> dict[tuple[float, ...], int]:
        out: dict[tuple[float, ...], int] = {}
        for r in map(tuple, self._rows.tolist()):
            out[r] = out.get(r, 0) + 1
        return out

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, attributes={self._schema.names})"


@dataclass(frozen=True)
class RangePredicate:
    """Conjunction of half-open ranges ``u <= r[i] < v``."""

    conditions: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        conds = tuple((int(i), float(u), float(v)) for i, u, v in self.conditions)
        for i, u, v in conds:
            if not u < v:
                raise SchemaError(f"condition on attribute {i}: need u < v, got [{u}, {v})")
        object.__setattr__(self, "conditions", conds)

    @classmethod
    def single(cls, i: int, u: float, v: float) -> "RangePredicate":
        return cls(((i, u, v),))

    def extend(self, i: int, u: float, v: float) -> "RangePredicate":
        return RangePredicate(self.conditions + ((i, u, v),))

    def mask(self, rows: np.ndarray) -> np.ndarray:
        m = np.ones(rows.shape[0], dtype=bool)
        for i, u, v in self.conditions:
            col = rows[:, i]
            m &= (col >= u) & (col < v)
        return m

    def holds(self, record: Sequence[float]) -> bool:
        return all(u <= record[i] < v for i, u, v in self.conditions)


@dataclass(frozen=True)
class ThresholdQuery:
    predicate: RangePredicate
    b: int


def _check_predicate(schema: Schema, predicate: RangePredicate) -> None:
    for i, _, _ in predicate.conditions:
        schema.check_index(i)


def count_matching(dataset: Dataset, predicate: RangePredicate) -> int:
    _check_predicate(dataset.schema, predicate)
    if dataset.n == 0:
        return 0
    return int(np.count_nonzero(predicate.mask(dataset.rows)))


def threshold_eval(dataset: Dataset, q: ThresholdQuery) -> int:
    return int(count_matching(dataset, q.predicate) > q.b)


def predicate_triviality(schema: Schema, predicate: RangePredicate) -> bool | None:
    """``True``/``False`` if the predicate is constant on the schema's domain, else ``None``.

    Public knowledge: depends only on the schema, never on data.
    """
    _check_predicate(schema, predicate)
    spans: dict[int, tuple[int, int]] = {}
    for i, u, v in predicate.conditions:
        first, last = schema[i].span(u, v)
        if i in spans:
            f0, l0 = spans[i]
            first, last = max(first, f0), min(last, l0)
        spans[i] = (first, last)
    if any(first > last for first, last in spans.values()):
        return False
    if all(first == 0 and last == schema[i].grid_size - 1 for i, (first, last) in spans.items()):
        return True
    return None


class BudgetExhausted(RuntimeError):
    """A ledger refused a charge; nothing was released."""


class PrivacyLedger:
    """Running sum of per-call budget charges with an optional hard cap.

    The sum is kept exactly (Shewchuk partials), so ``spent`` is the
    correctly rounded total of every accepted charge regardless of count.
    """

    def __init__(self, cap: float = math.inf):
        if not cap > 0:
            raise ValueError("cap must be positive")
        self.cap = float(cap)
        self.call_count = 0
        self._partials: list[float] = []
        self._lock = threading.Lock()

    @property
    def spent(self) -> float:
        return math.fsum(self._partials)

    def spent_exact(self) -> Fraction:
        return sum((Fraction(p) for p in self._partials), Fraction(0))

    def _fits(self, terms: list[float]) -> bool:
        if math.isinf(self.cap):
            return True
        total = math.fsum(self._partials + terms)
        if total != self.cap:
            return total < self.cap
        return self.spent_exact() + sum(map(Fraction, terms), Fraction(0)) <= Fraction(self.cap)

    def can_charge(self, eps_star: float, times: int = 1) -> bool:
        terms = self._terms(eps_star, times)
        with self._lock:
            return self._fits(terms)

    def charge(self, eps_star: float, times: int = 1) -> bool:
        """Charge ``times`` calls of ``eps_star`` each, all or nothing."""
        terms = self._terms(eps_star, times)
        with self._lock:
            if not self._fits(terms):
                return False
            for t in terms:
                _add_partial(self._partials, t)
            self.call_count += times
            return True

    @staticmethod
    def _terms(eps_star: float, times: int) -> list[float]:
        if not eps_star > 0 or not math.isfinite(eps_star):
            raise ValueError(f"charge must be positive and finite, got {eps_star}")
        if times < 1:
            raise ValueError("times must be >= 1")
        return _exact_product(eps_star, times)

    def __repr__(self) -> str:
        return f"PrivacyLedger(spent={self.spent:.6g}, cap={self.cap}, calls={self.call_count})"


def ledger_charge(ledger: PrivacyLedger, eps_star: float) -> bool:
    return ledger.charge(eps_star)


def _exact_product(x: float, times: int) -> list[float]:
    if times == 1:
        return [x]
    hi = x * times
    lo = float(Fraction(x) * times - Fraction(hi))
    return [hi, lo] if lo else [hi]


def _add_partial(partials: list[float], x: float) -> None:
    # msum from the Python cookbook; keeps partials non-overlapping
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]
