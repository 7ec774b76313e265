import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from slowelm.events import (
    CSV_HEADER,
    EventStream,
    ParseError,
    ValidationError,
    num_windows,
    parse_event_stream,
    read_event_file,
    serialize_event_stream,
    window_by_count,
    write_event_file,
)
from slowelm.synth import RigConfig, default_shapes, generate_recording


def make_stream(n, width=16, height=16, seed=0):
    r = np.random.default_rng(seed)
    t = np.sort(r.integers(0, 10 * n + 1, n))
    return EventStream(width, height, t, r.integers(0, width, n), r.integers(0, height, n), r.choice([-1, 1], n))


@st.composite
def streams(draw):
    w = draw(st.integers(1, 2000))
    h = draw(st.integers(1, 2000))
    n = draw(st.integers(0, 40))
    dt = draw(st.lists(st.integers(0, 10**9), min_size=n, max_size=n))
    x = draw(st.lists(st.integers(0, w - 1), min_size=n, max_size=n))
    y = draw(st.lists(st.integers(0, h - 1), min_size=n, max_size=n))
    p = draw(st.lists(st.sampled_from([-1, 1]), min_size=n, max_size=n))
    return EventStream(w, h, np.cumsum(np.array(dt, dtype=np.int64)), x, y, p)


def test_parse_csv_example():
    s = parse_event_stream(b"100,3,4,1\n200,5,6,-1", "evt-csv", 10, 10)
    assert len(s) == 2
    assert s.t.tolist() == [100, 200]
    assert s.x.tolist() == [3, 5] and s.y.tolist() == [4, 6] and s.p.tolist() == [1, -1]
    assert s.n_rejected == 0


def test_non_monotonic_reports_record_two():
    with pytest.raises(ValidationError) as ei:
        parse_event_stream(b"100,3,4,1\n50,5,6,1", "evt-csv", 10, 10)
    assert ei.value.record == 2


def test_non_monotonic_bin():
    s = make_stream(5)
    raw = bytearray(serialize_event_stream(s, "evt-bin"))
    # overwrite record 4's timestamp with 0
    raw[16 + 3 * 16 : 16 + 3 * 16 + 8] = (0).to_bytes(8, "little")
    if s.t[2] == 0:
        pytest.skip("degenerate draw")
    with pytest.raises(ValidationError) as ei:
        parse_event_stream(bytes(raw), "evt-bin")
    assert ei.value.record == 4


def test_ties_allowed():
    s = parse_event_stream(b"5,0,0,1\n5,1,1,1\n", "evt-csv", 2, 2)
    assert s.t.tolist() == [5, 5]


@pytest.mark.parametrize(
    "text, line",
    [
        (b"1,2,3\n", 1),
        (b"1,2,3,1\nx,2,3,1\n", 2),
        (b"1,2,3,1\n2,2,3,0\n", 2),
        (b"-1,2,3,1\n", 1),
    ],
)
def test_csv_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as ei:
        parse_event_stream(text, "evt-csv", 10, 10)
    assert ei.value.line == line
    expected_offset = 0 if line == 1 else len(text.split(b"\n")[0]) + 1
    assert ei.value.offset == expected_offset


def test_bin_parse_errors():
    s = make_stream(3)
    raw = serialize_event_stream(s, "evt-bin")
    with pytest.raises(ParseError) as ei:
        parse_event_stream(b"XXXX" + raw[4:], "evt-bin")
    assert ei.value.offset == 0
    with pytest.raises(ParseError) as ei:
        parse_event_stream(raw[:-5], "evt-bin")
    assert ei.value.offset == 16 + 2 * 16
    with pytest.raises(ParseError):
        parse_event_stream(raw[:10], "evt-bin")


def test_out_of_bounds_dropped_and_counted():
    s = parse_event_stream(b"1,0,0,1\n2,10,0,1\n3,0,10,-1\n4,9,9,1\n", "evt-csv", 10, 10)
    assert s.t.tolist() == [1, 4]
    assert s.n_rejected == 2


def test_header_and_comments_skipped():
    text = (CSV_HEADER + "\n# a comment\n7,1,1,-1\n").encode()
    assert parse_event_stream(text, "evt-csv", 4, 4).t.tolist() == [7]


def test_empty_source_rejected():
    with pytest.raises(ValueError):
        parse_event_stream(b"", "evt-csv", 4, 4)


def test_csv_needs_geometry():
    with pytest.raises(ValueError):
        parse_event_stream(b"1,1,1,1", "evt-csv")


def test_bin_geometry_from_header_and_cross_check():
    s = make_stream(4, 33, 21)
    raw = serialize_event_stream(s, "evt-bin")
    back = parse_event_stream(raw, "evt-bin")
    assert (back.width, back.height) == (33, 21)
    with pytest.raises(ValueError):
        parse_event_stream(raw, "evt-bin", 32, 21)


def test_empty_stream_serializes_to_header_only():
    e = EventStream.empty(8, 8)
    assert serialize_event_stream(e, "evt-csv") == (CSV_HEADER + "\n").encode()
    assert len(serialize_event_stream(e, "evt-bin")) == 16


def test_two_event_stream_records_in_order():
    s = EventStream(10, 10, [100, 200], [3, 5], [4, 6], [1, -1])
    assert serialize_event_stream(s, "evt-csv").decode().splitlines()[1:] == ["100,3,4,1", "200,5,6,-1"]
    raw = serialize_event_stream(s, "evt-bin")
    assert len(raw) == 16 + 2 * 16
    assert raw[:4] == b"EVTB"
    assert int.from_bytes(raw[16:24], "little") == 100
    assert int.from_bytes(raw[32:40], "little") == 200


def test_serialize_rejects_invalid_stream():
    s = EventStream(4, 4, [2, 1], [0, 0], [0, 0], [1, 1])
    with pytest.raises(ValidationError):
        serialize_event_stream(s, "evt-bin")


@given(streams(), st.sampled_from(["evt-csv", "evt-bin"]))
def test_round_trip(s, fmt):
    back = parse_event_stream(serialize_event_stream(s, fmt), fmt, s.width, s.height)
    assert back == s


def test_synthetic_round_trip_10k(tmp_path):
    rig = RigConfig(events_per_degree=10000 / 360.0, seed=3)
    s = generate_recording(default_shapes()[1], rig, total_rotation=360.0).stream
    s = EventStream(s.width, s.height, s.t[:10000], s.x[:10000], s.y[:10000], s.p[:10000])
    assert len(s) == 10000
    for fmt, name in (("evt-bin", "a.evtb"), ("evt-csv", "a.csv")):
        write_event_file(tmp_path / name, s, fmt)
        back = read_event_file(tmp_path / name, width=s.width, height=s.height)
        for f in "txyp":
            np.testing.assert_array_equal(getattr(back, f), getattr(s, f))


def test_windows_non_overlapping():
    s = make_stream(10)
    ws = window_by_count(s, 4, 4)
    assert [w.start for w in ws] == [0, 4]
    np.testing.assert_array_equal(ws[1].t, s.t[4:8])


def test_windows_overlapping():
    ws = window_by_count(make_stream(10), 4, 2)
    assert [w.start for w in ws] == [0, 2, 4, 6]
    assert [w.window_index for w in ws] == [0, 1, 2, 3]


def test_stride_defaults_to_count():
    assert len(window_by_count(make_stream(10), 3)) == 3


def test_count_larger_than_stream_is_empty():
    assert window_by_count(make_stream(3), 4, 1) == []


@pytest.mark.parametrize("count, stride", [(0, 1), (1, 0)])
def test_window_args_validated(count, stride):
    with pytest.raises(ValueError):
        window_by_count(make_stream(3), count, stride)


@given(st.integers(0, 300), st.integers(1, 50), st.integers(1, 50))
def test_window_invariants(n, count, stride):
    s = make_stream(n, seed=n)
    ws = window_by_count(s, count, stride)
    assert len(ws) == num_windows(n, count, stride)
    for i, w in enumerate(ws):
        assert len(w) == count
        assert w.start == i * stride
        assert w.start_t <= w.end_t
    starts = [w.start_t for w in ws]
    assert starts == sorted(starts)
    if ws:
        assert ws[-1].start + count <= n < ws[-1].start + stride + count
