import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sleepgan.codec import (
    Codec,
    ColumnSpec,
    decode,
    decode_matrix,
    encode,
    encode_matrix,
    fit_codec,
    schema_codec,
)
from sleepgan.errors import DomainError, EmptyInput, LengthMismatch
from sleepgan.ingest import DAYS, MONTHS, SEXES
from sleepgan.temporalize import FeatureMatrix


def random_matrix(rng, n, days=7):
    return FeatureMatrix(rng.integers(0, 61, (n, 30)), rng.integers(15, 121, n),
                         rng.integers(0, 2, n), rng.integers(0, days, n), rng.integers(0, 12, n))


@pytest.fixture(scope="module")
def codec():
    return fit_codec(random_matrix(np.random.default_rng(0), 5))


def row_with(sleep=30, age=40, sex="male", day="Mon", month="Jan"):
    return (*([sleep] * 30), age, sex, day, month)


def test_encoded_width(codec):
    assert codec.encoded_width == 31 + 2 + 7 + 12 == 52
    kinds = [s.kind for s in codec.specs]
    assert kinds.count("continuous") == 31 and kinds.count("categorical") == 3


def test_bounds_are_schema_fixed(codec):
    for s in codec.specs[:30]:
        assert (s.lo, s.hi) == (0, 60)
    assert (codec.specs[30].lo, codec.specs[30].hi) == (15, 120)
    assert codec.specs[31].categories == SEXES
    assert codec.specs[32].categories == DAYS
    assert codec.specs[33].categories == MONTHS


def test_codec_independent_of_observed_levels():
    rng = np.random.default_rng(1)
    a = fit_codec(random_matrix(rng, 50, days=2))
    b = fit_codec(random_matrix(rng, 50, days=7))
    assert a == b and a.digest() == b.digest()


def test_fit_empty():
    with pytest.raises(EmptyInput):
        fit_codec(random_matrix(np.random.default_rng(0), 0))


def test_min_max_endpoints(codec):
    assert encode(codec, row_with(sleep=0))[0] == -1.0
    assert encode(codec, row_with(sleep=60))[0] == 1.0
    assert encode(codec, row_with(sleep=30))[0] == 0.0


def test_one_hot(codec):
    v = encode(codec, row_with(sex="male", day="Wed", month="Dec"))
    assert v[31:33].tolist() == [0.0, 1.0]
    assert v[33:40].tolist() == [0, 0, 1, 0, 0, 0, 0]
    assert v[40:52].tolist() == [0] * 11 + [1]


def test_encode_domain_errors(codec):
    with pytest.raises(DomainError):
        encode(codec, row_with(sleep=61))
    with pytest.raises(DomainError):
        encode(codec, row_with(age=14))
    with pytest.raises(DomainError):
        encode(codec, row_with(day="Funday"))


def test_decode_examples(codec):
    v = encode(codec, row_with())
    v[0] = -1.0
    v[1] = 1.3
    v[33:40] = [0.2, 0.9, 0.1, 0.0, 0.0, 0.0, 0.0]
    row = decode(codec, v)
    assert row[0] == 0 and row[1] == 60
    assert row[32] == "Tue"


def test_decode_tie_breaks_to_lowest_index(codec):
    v = np.zeros(52)
    row = decode(codec, v)
    assert row[31:] == ("female", "Mon", "Jan")
    v[40:52] = 0.5
    assert decode(codec, v)[33] == "Jan"


def test_decode_length(codec):
    with pytest.raises(LengthMismatch):
        decode(codec, np.zeros(51))


def test_round_trip_random_rows(codec):
    rng = np.random.default_rng(2)
    for row in random_matrix(rng, 500).rows():
        assert decode(codec, encode(codec, row)) == row


def test_vectorised_matches_rowwise(codec):
    rng = np.random.default_rng(3)
    m = random_matrix(rng, 200)
    enc = encode_matrix(codec, m)
    assert np.array_equal(enc, np.stack([encode(codec, r) for r in m.rows()]))
    noise = rng.normal(0, 1.5, (200, 52))
    noise[::7, 40:52] = 0.25  # ties
    assert decode_matrix(codec, noise).rows() == [decode(codec, v) for v in noise]
    assert decode_matrix(codec, enc) == m


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 52, elements=st.floats(allow_nan=True, allow_infinity=True, width=64)))
def test_decode_is_total(vec):
    codec = fit_codec(random_matrix(np.random.default_rng(0), 1))
    row = decode(codec, vec)
    FeatureMatrix.from_rows([row])  # validates the schema
    assert all(isinstance(v, int) and 0 <= v <= 60 for v in row[:30])
    assert decode_matrix(codec, vec[None, :]).rows() == [row]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 60), min_size=30, max_size=30), st.integers(15, 120),
       st.sampled_from(SEXES), st.sampled_from(DAYS), st.sampled_from(MONTHS))
def test_encode_image(sleep, age, sex, day, month):
    codec = fit_codec(random_matrix(np.random.default_rng(0), 1))
    v = encode(codec, (*sleep, age, sex, day, month))
    assert np.all(np.abs(v[:31]) <= 1.0)
    for lo, hi in ((31, 33), (33, 40), (40, 52)):
        assert set(v[lo:hi].tolist()) <= {0.0, 1.0} and v[lo:hi].sum() == 1.0


def test_json_round_trip(codec):
    doc = json.loads(codec.to_json())
    assert [s["name"] for s in doc["specs"]][:2] == ["hour1_4", "hour2_5"]
    assert Codec.from_json(codec.to_json()) == codec


def test_column_spec_invariants():
    with pytest.raises(DomainError):
        ColumnSpec("x", "continuous", 1.0, 1.0)
    with pytest.raises(DomainError):
        ColumnSpec("x", "categorical", categories=("a",))


def test_nan_ranks_below_negative_infinity_tie():
    codec = schema_codec()
    v = np.full(52, np.nan)
    v[32] = -np.inf  # sex block: nan and -inf tie at the bottom, first index wins
    assert decode(codec, v)[31] == "female"
    assert decode_matrix(codec, v[None, :]).rows()[0][31] == "female"
