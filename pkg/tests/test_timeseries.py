import csv

import numpy as np
import pytest

from conftest import make_session, moves
from cursor_attn.errors import InvalidValueError
from cursor_attn.sessions import LabeledSession, clean_sessions
from cursor_attn.timeseries import SEQ_LEN, dump_csv, encode_dataset, encode_timeseries


def _labeled(coords, vw=1280, likert=5):
    session = make_session(events=moves(coords), vw=vw, likert=likert)
    return clean_sessions([session], min_coords=1)[0]


def test_padding_and_scaling():
    ls = _labeled([(640, 450), (0, 0), (1280, 900)])
    sample = encode_timeseries(ls)
    assert sample.matrix.shape == (SEQ_LEN, 2)
    assert sample.valid_len == 3
    np.testing.assert_allclose(sample.matrix[0], [0.5, 0.5])
    assert (sample.matrix[3:] == 0.0).all()


def test_truncation_keeps_first_fifty_in_order():
    coords = [(i, 2 * i) for i in range(80)]
    sample = encode_timeseries(_labeled(coords))
    assert sample.valid_len == SEQ_LEN
    for i in range(SEQ_LEN):
        np.testing.assert_allclose(sample.matrix[i], [i / 1280, 2 * i / 900.0])


def test_boundary_coordinate():
    ls = _labeled([(1280, 0), (1, 1), (2, 2)])
    sample = encode_timeseries(ls)
    np.testing.assert_allclose(sample.matrix[0], [1.0, 0.0])


def test_scale_consistency():
    a = encode_timeseries(_labeled([(100, 50), (200, 60), (300, 70)], vw=640))
    b = encode_timeseries(_labeled([(200, 50), (400, 60), (600, 70)], vw=1280))
    np.testing.assert_array_equal(a.matrix[:, 0], b.matrix[:, 0])


def test_label_carried():
    assert encode_timeseries(_labeled([(1, 1), (2, 2)], likert=1)).label == 0
    assert encode_timeseries(_labeled([(1, 1), (2, 2)], likert=5)).label == 1


def test_zero_viewport_guard():
    from dataclasses import replace

    ls = _labeled([(1, 1), (2, 2)])
    broken = LabeledSession(session=replace(ls.session, viewport_w=0), label=ls.label)
    with pytest.raises(InvalidValueError):
        encode_timeseries(broken)


def test_shape_fuzz():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 120))
        coords = [(int(x), int(y)) for x, y in zip(rng.integers(0, 1280, n), rng.integers(0, 1200, n))]
        # collapse consecutive duplicates to satisfy the cleaning contract
        dedup = [coords[0]] + [c for prev, c in zip(coords, coords[1:]) if c != prev]
        sample = encode_timeseries(_labeled(dedup))
        assert sample.matrix.shape == (SEQ_LEN, 2)
        assert (sample.matrix[sample.valid_len :] == 0.0).all()
        assert sample.valid_len == min(len(dedup), SEQ_LEN)


def test_encode_dataset_stacking():
    parts = [_labeled([(1, 1), (2, 2)]), _labeled([(3, 3), (4, 4)], likert=1)]
    x, y = encode_dataset(parts)
    assert x.shape == (2, SEQ_LEN, 2)
    np.testing.assert_array_equal(y, [1.0, 0.0])


def test_csv_dump_round_trip(tmp_path):
    samples = [encode_timeseries(_labeled([(640, 450), (10, 20), (30, 40)]))]
    path = tmp_path / "series.csv"
    dump_csv(samples, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["x1", "y1"]
    assert rows[0][-1] == "label"
    assert len(rows[0]) == 2 * SEQ_LEN + 1
    values = [float(v) for v in rows[1][:-1]]
    np.testing.assert_array_equal(np.array(values).reshape(SEQ_LEN, 2), samples[0].matrix)
    assert rows[1][-1] == "1"
