import struct

import numpy as np
import pytest

from hypertraffic.distributions import binned
from hypertraffic.ingest import (
    HEADER,
    Anonymizer,
    PacketRecord,
    StreamFormatError,
    ValidityFilter,
    anonymize,
    filter_valid,
    parse_key,
    read_batches,
    read_stream,
    write_binary,
    write_csv,
)
from hypertraffic.matrix import UINT64_MAX, from_records
from hypertraffic.quantities import DEGREE_TYPES, InternalSet, compute_quantities, degree_values
from streams import random_records

KEY = "00112233445566778899aabbccddeeff"


def _all(path, **kw):
    batches = list(read_batches(path, **kw))
    return np.concatenate(batches) if batches else np.zeros((0, 2), dtype=np.uint64)


def test_csv_example(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("src,dst\n1,2\n1,2\n4,2\n")
    assert list(read_stream(p)) == [PacketRecord(1, 2), PacketRecord(1, 2), PacketRecord(4, 2)]


def test_csv_without_header_and_count_column(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("1,2,3\n\n4,5\n")
    assert _all(p).tolist() == [[1, 2], [1, 2], [1, 2], [4, 5]]
    p.write_text("src,dst,count\n7,8,2\n")
    assert _all(p).tolist() == [[7, 8], [7, 8]]


def test_binary_example(tmp_path):
    p = tmp_path / "s.hstm"
    p.write_bytes(HEADER + struct.pack("<QQ", 1, UINT64_MAX) + struct.pack("<QQ", 3, 4))
    assert _all(p).tolist() == [[1, UINT64_MAX], [3, 4]]


def test_round_trip(tmp_path, rng):
    recs = random_records(rng, 5000)
    b, c = tmp_path / "s.hstm", tmp_path / "s.csv"
    assert write_binary(b, recs) == write_csv(c, recs) == 5000
    assert np.array_equal(_all(b, batch_size=333), recs)
    assert np.array_equal(_all(c, batch_size=333), recs)
    assert np.array_equal(_all(c, fmt="csv"), recs)


def test_empty_files(tmp_path):
    p = tmp_path / "e.hstm"
    write_binary(p, [])
    assert len(_all(p)) == 0
    (tmp_path / "e.csv").write_text("src,dst\n")
    assert len(_all(tmp_path / "e.csv")) == 0


def test_truncated_binary_reports_offset(tmp_path):
    p = tmp_path / "t.hstm"
    p.write_bytes(HEADER + struct.pack("<QQ", 1, 2) + b"\x01\x02\x03")
    with pytest.raises(StreamFormatError) as e:
        _all(p)
    assert e.value.offset == 8 + 16 and e.value.unit == "byte"


def test_bad_binary_version(tmp_path):
    p = tmp_path / "v.hstm"
    p.write_bytes(b"HSTM" + struct.pack("<I", 2))
    with pytest.raises(StreamFormatError):
        _all(p)


@pytest.mark.parametrize(
    "text,line",
    [("src,dst\n1,2\n3\n", 3), ("1,2\nx,4\n", 2), ("1,-2\n", 1), ("1,2\n1,2,3,4\n", 2),
     (f"{2**64},1\n", 1), ("foo,bar\n1,2\n", 1)],
)
def test_malformed_csv_reports_line(tmp_path, text, line):
    p = tmp_path / "m.csv"
    p.write_text(text)
    with pytest.raises(StreamFormatError) as e:
        _all(p, fmt="csv")
    assert e.value.offset == line and e.value.unit == "line"


def test_validity_filter():
    recs = [(1, 2), (3, 4), (5, 6), (1, 6)]
    f = ValidityFilter(allow_src=[1, 5], deny_dst=[6])
    assert list(filter_valid(recs, f)) == [(1, 2)]
    f = ValidityFilter(deny_src=InternalSet(ranges=[(2, 9)]))
    assert list(filter_valid(recs, f)) == [(1, 2), (1, 6)]
    out = list(filter_valid(np.array(recs, dtype=np.uint64), ValidityFilter(allow_dst=[4])))
    assert np.concatenate(out).tolist() == [[3, 4]]
    assert list(filter_valid(recs, ValidityFilter())) == recs


def test_filter_rejects_overlap():
    with pytest.raises(ValueError):
        ValidityFilter(allow_src=[1, 2], deny_src=InternalSet(ranges=[(2, 3)]))


def test_parse_key():
    assert parse_key(KEY) == bytes.fromhex(KEY)
    with pytest.raises(ValueError):
        parse_key("abcd")
    with pytest.raises(ValueError):
        parse_key(b"short")


def test_anonymizer_is_a_bijection(rng):
    anon = Anonymizer(KEY)
    ids = np.unique(rng.integers(0, 2**64, size=10**6, dtype=np.uint64, endpoint=False))
    ids = np.concatenate([ids, np.array([0, 1, UINT64_MAX], dtype=np.uint64)])
    ids = np.unique(ids)
    out = anon.permute(ids)
    assert len(np.unique(out)) == len(ids)
    assert np.array_equal(anon.invert(out), ids)
    assert not np.array_equal(out, ids)
    assert not np.array_equal(Anonymizer("f" * 32).permute(ids[:100]), out[:100])


def test_anonymization_preserves_quantities(rng):
    recs = random_records(rng, 20000)
    a = from_records(recs)
    b = from_records(np.concatenate(list(anonymize(recs, KEY))))
    assert compute_quantities(a) == compute_quantities(b)
    for kind in DEGREE_TYPES:
        assert binned(degree_values(a, kind)) == binned(degree_values(b, kind))


def test_anonymize_tuple_input():
    out = list(anonymize([(1, 2)], KEY))
    anon = Anonymizer(KEY)
    assert out == [PacketRecord(int(anon.permute(1)), int(anon.permute(2)))]
