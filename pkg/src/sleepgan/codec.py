"""Reversible mapping between the 34-column schema and the GAN's numeric space.

Continuous columns are min-max scaled onto [-1, 1] with fixed physical bounds;
categorical columns become one-hot blocks.  Bounds and category lists come from
the schema, not the data, so every fitted codec for this schema is identical.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyInput, LengthMismatch
from .ingest import AGE_MAX, AGE_MIN, DAYS, MONTHS, SEXES
from .temporalize import BIN_MIN, N_BINS, SLEEP_COLUMNS, FeatureMatrix


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # "continuous" or "categorical"
    lo: float = 0.0
    hi: float = 1.0
    categories: tuple = ()
    integer: bool = True

    def __post_init__(self):
        if self.kind == "continuous":
            if not self.lo < self.hi:
                raise DomainError(f"{self.name}: bounds need lo < hi")
        elif self.kind == "categorical":
            if len(set(self.categories)) < 2 or len(set(self.categories)) != len(self.categories):
                raise DomainError(f"{self.name}: need >= 2 distinct categories")
        else:
            raise DomainError(f"{self.name}: unknown column kind {self.kind!r}")

    @property
    def width(self) -> int:
        return 1 if self.kind == "continuous" else len(self.categories)


@dataclass(frozen=True)
class Codec:
    specs: tuple

    @property
    def encoded_width(self) -> int:
        return sum(s.width for s in self.specs)

    @property
    def offsets(self) -> list[int]:
        out, pos = [], 0
        for s in self.specs:
            out.append(pos)
            pos += s.width
        return out

    def to_dict(self) -> dict:
        specs = []
        for s in self.specs:
            d = {"name": s.name, "kind": s.kind}
            if s.kind == "continuous":
                d.update(lo=s.lo, hi=s.hi, integer=s.integer)
            else:
                d["categories"] = list(s.categories)
            specs.append(d)
        return {"specs": specs, "encoded_width": self.encoded_width}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d) -> "Codec":
        specs = []
        for s in d["specs"]:
            if s["kind"] == "continuous":
                specs.append(ColumnSpec(s["name"], "continuous", float(s["lo"]), float(s["hi"]),
                                        integer=bool(s.get("integer", True))))
            else:
                specs.append(ColumnSpec(s["name"], "categorical", categories=tuple(s["categories"])))
        codec = cls(tuple(specs))
        if "encoded_width" in d and d["encoded_width"] != codec.encoded_width:
            raise DomainError("encoded_width does not match the column specs")
        return codec

    @classmethod
    def from_json(cls, text: str) -> "Codec":
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the codec in checkpoints."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def schema_codec() -> Codec:
    specs = [ColumnSpec(name, "continuous", 0.0, float(BIN_MIN)) for name in SLEEP_COLUMNS]
    specs += [
        ColumnSpec("age", "continuous", float(AGE_MIN), float(AGE_MAX)),
        ColumnSpec("sex", "categorical", categories=SEXES),
        ColumnSpec("day_of_week", "categorical", categories=DAYS),
        ColumnSpec("month", "categorical", categories=MONTHS),
    ]
    return Codec(tuple(specs))


def fit_codec(matrix: FeatureMatrix) -> Codec:
    """Codec for the matrix's schema.  The data only has to be non-empty."""
    if matrix is None or len(matrix) == 0:
        raise EmptyInput("cannot fit a codec on an empty matrix")
    return schema_codec()


def encode(codec: Codec, row) -> np.ndarray:
    if len(row) != len(codec.specs):
        raise LengthMismatch(f"row has {len(row)} values, codec expects {len(codec.specs)}")
    out = np.zeros(codec.encoded_width)
    pos = 0
    for spec, value in zip(codec.specs, row):
        if spec.kind == "continuous":
            x = float(value)
            if not spec.lo <= x <= spec.hi:
                raise DomainError(f"{spec.name}={value} outside [{spec.lo}, {spec.hi}]")
            out[pos] = 2.0 * (x - spec.lo) / (spec.hi - spec.lo) - 1.0
        else:
            try:
                out[pos + spec.categories.index(value)] = 1.0
            except ValueError:
                raise DomainError(f"{spec.name}: unknown category {value!r}") from None
        pos += spec.width
    return out


def decode(codec: Codec, vector) -> tuple:
    v = np.asarray(vector, dtype=np.float64).reshape(-1)
    if v.shape[0] != codec.encoded_width:
        raise LengthMismatch(f"vector has {v.shape[0]} entries, codec expects {codec.encoded_width}")
    # plain floats: much faster than numpy scalars for one row at a time
    vals = [-math.inf if math.isnan(x) else x for x in v.tolist()]
    row = []
    pos = 0
    for spec in codec.specs:
        if spec.kind == "continuous":
            raw = v[pos]
            if math.isnan(raw):
                x = spec.lo
            else:
                # float overflow saturates to +-inf, which the clamp handles
                x = min(max(spec.lo + (float(raw) + 1.0) * ((spec.hi - spec.lo) / 2.0), spec.lo), spec.hi)
            row.append(int(round(x)) if spec.integer else x)  # round() is half-to-even like np.rint
        else:
            block = vals[pos:pos + spec.width]
            row.append(spec.categories[block.index(max(block))])  # first maximum wins ties
        pos += spec.width
    return tuple(row)


def encode_matrix(codec: Codec, matrix: FeatureMatrix) -> np.ndarray:
    """Vectorised ``encode`` over every row of the standard 34-column schema."""
    _check_schema(codec)
    n = len(matrix)
    out = np.zeros((n, codec.encoded_width))
    out[:, :N_BINS] = 2.0 * matrix.sleep / BIN_MIN - 1.0
    out[:, N_BINS] = 2.0 * (matrix.age - AGE_MIN) / (AGE_MAX - AGE_MIN) - 1.0
    pos = N_BINS + 1
    for codes, levels in ((matrix.sex, SEXES), (matrix.day_of_week, DAYS), (matrix.month, MONTHS)):
        out[np.arange(n), pos + codes] = 1.0
        pos += len(levels)
    return out


def decode_matrix(codec: Codec, vectors) -> FeatureMatrix:
    """Vectorised ``decode``; same clamping, rounding and tie-breaking rules."""
    _check_schema(codec)
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] != codec.encoded_width:
        raise LengthMismatch(f"expected (n, {codec.encoded_width}) array, got {v.shape}")
    v = np.where(np.isnan(v), -np.inf, v)  # nan counts as -inf; nan_to_num would also squash inf
    cont = v[:, :N_BINS + 1]
    lo = np.array([0.0] * N_BINS + [AGE_MIN])
    hi = np.array([float(BIN_MIN)] * N_BINS + [AGE_MAX])
    with np.errstate(over="ignore", invalid="ignore"):
        x = np.clip(lo + (cont + 1.0) * (hi - lo) / 2.0, lo, hi)
    x = np.rint(np.nan_to_num(x, nan=0.0)).astype(np.int64)
    cats = []
    pos = N_BINS + 1
    for levels in (SEXES, DAYS, MONTHS):
        cats.append(np.argmax(v[:, pos:pos + len(levels)], axis=1))
        pos += len(levels)
    return FeatureMatrix(x[:, :N_BINS], x[:, N_BINS], *cats)


def _check_schema(codec):
    if codec != schema_codec():
        raise DomainError("vectorised encode/decode require the standard 34-column codec")
