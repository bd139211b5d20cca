import json

import numpy as np
import pytest

from conftest import make_doc, make_session, moves
from cursor_attn.errors import EmptyClassError, InvalidValueError, MalformedInputError
from cursor_attn.sessions import (
    LabeledSession,
    binarize_label,
    clean_sessions,
    dedup_mouse_events,
    load_dataset,
    parse_session_json,
    parse_session_log,
    stratified_split,
    stratified_split_by_format,
    write_dataset,
)


class TestParse:
    def test_valid_document(self):
        session = make_session()
        assert session.session_id == "s1"
        assert len(session.events) == 10
        assert [e.t_ms for e in session.events] == sorted(e.t_ms for e in session.events)

    def test_unknown_fields_ignored(self):
        doc = make_doc()
        doc["extra"] = {"nested": True}
        doc["events"][0]["weird"] = 1
        session = parse_session_json(doc)
        assert len(session.events) == 10

    def test_events_resorted_stably(self):
        # Out-of-order log: compare against a reference stable sort.
        events = moves([(i, i) for i in range(8)])
        events[2]["t"] = 9999
        events[5]["t"] = 1
        doc = make_doc(events=events)
        session = parse_session_json(doc)
        reference = sorted(
            [(e["t"], e["x"], e["y"]) for e in events], key=lambda triple: triple[0]
        )
        assert [(e.t_ms, e.x_px, e.y_px) for e in session.events] == reference

    def test_parse_bytes(self):
        session = parse_session_log(json.dumps(make_doc()).encode())
        assert session.viewport_w == 1280

    def test_invalid_json(self):
        with pytest.raises(MalformedInputError):
            parse_session_log(b"{not json")

    def test_missing_field(self):
        doc = make_doc()
        del doc["viewport"]
        with pytest.raises(MalformedInputError):
            parse_session_json(doc)

    @pytest.mark.parametrize("likert", [0, 6, -1])
    def test_likert_out_of_range(self, likert):
        with pytest.raises(InvalidValueError):
            parse_session_json(make_doc(likert=likert))

    def test_negative_coordinate(self):
        events = moves([(5, 5), (-2, 7)])
        with pytest.raises(InvalidValueError):
            parse_session_json(make_doc(events=events))

    def test_nonpositive_viewport(self):
        with pytest.raises(InvalidValueError):
            parse_session_json(make_doc(vw=0))

    def test_bad_ad_format(self):
        with pytest.raises(InvalidValueError):
            parse_session_json(make_doc(ad_format="banner"))

    def test_empty_ad_box_rejected(self):
        with pytest.raises(InvalidValueError):
            parse_session_json(make_doc(ad_box={"x": 1, "y": 1, "w": 0, "h": 5}))


class TestBinarize:
    def test_paper_mapping(self):
        assert binarize_label(5) == 1
        assert binarize_label(4) == 1
        assert binarize_label(2) == 0
        assert binarize_label(1) == 0
        assert binarize_label(3) is None

    def test_total_and_two_valued(self):
        values = {binarize_label(s) for s in (1, 2, 4, 5)}
        assert values == {0, 1}

    @pytest.mark.parametrize("likert", [0, 6])
    def test_out_of_range(self, likert):
        with pytest.raises(InvalidValueError):
            binarize_label(likert)


class TestClean:
    def test_short_session_removed(self):
        short = make_session(events=moves([(i, i) for i in range(4)]))
        assert clean_sessions([short]) == []

    def test_dedup_consecutive(self):
        coords = [(3, 4), (3, 4), (5, 6), (7, 8), (9, 9), (1, 1)]
        session = make_session(events=moves(coords))
        cleaned = clean_sessions([session])
        assert len(cleaned) == 1
        assert cleaned[0].session.mouse_coords() == [(3, 4), (5, 6), (7, 8), (9, 9), (1, 1)]

    def test_dedup_counts_after_collapse(self):
        # 6 raw coords but only 4 distinct consecutive ones: dropped.
        coords = [(1, 1), (1, 1), (2, 2), (2, 2), (3, 3), (4, 4)]
        session = make_session(events=moves(coords))
        assert clean_sessions([session]) == []

    def test_neutral_dropped(self):
        sessions = [make_session(session_id=f"s{i}", likert=3 if i < 2 else 4) for i in range(10)]
        cleaned = clean_sessions(sessions)
        assert len(cleaned) == 8
        assert all(ls.label == 1 for ls in cleaned)

    def test_non_mousemove_events_pass_through(self):
        events = moves([(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)])
        events.append({"t": 1000, "x": 2, "y": 2, "ev": "click", "xpath": "/a"})
        events.append({"t": 1100, "x": 2, "y": 2, "ev": "click", "xpath": "/a"})
        session = make_session(events=events)
        cleaned = clean_sessions([session])[0]
        clicks = [e for e in cleaned.session.events if e.event_name == "click"]
        assert len(clicks) == 2

    def test_idempotent(self):
        coords = [(3, 4), (3, 4), (5, 6), (7, 8), (9, 9), (1, 1)]
        session = make_session(events=moves(coords))
        once = clean_sessions([session])
        twice = clean_sessions([ls.session for ls in once])
        assert [ls.session.events for ls in twice] == [ls.session.events for ls in once]

    def test_labels_binarized(self):
        cleaned = clean_sessions([make_session(likert=1), make_session(likert=5)])
        assert [ls.label for ls in cleaned] == [0, 1]


def _labeled(n_pos, n_neg):
    out = []
    for i in range(n_pos + n_neg):
        label = 1 if i < n_pos else 0
        session = make_session(session_id=f"s{i}", likert=5 if label else 1)
        out.append(LabeledSession(session=session, label=label))
    return out


class TestStratifiedSplit:
    def test_ten_sessions_allocation(self):
        # Largest-remainder arithmetic: 10 * (0.6, 0.1, 0.3) -> 6/1/3 with a
        # 3/3 class balance in train.
        split = stratified_split(_labeled(5, 5), (0.6, 0.1, 0.3), seed=1)
        assert [len(s) for s in split] == [6, 1, 3]
        assert sum(ls.label for ls in split.train) == 3

    def test_table_scale_allocation(self):
        # 669 sessions at the published 447:222 class ratio.
        split = stratified_split(_labeled(447, 222), (0.6, 0.1, 0.3), seed=9)
        assert [len(s) for s in split] == [401, 67, 201]
        test_pos = sum(ls.label for ls in split.test)
        assert abs(test_pos - 201 * 447 / 669) <= 1.0

    def test_deterministic(self):
        sessions = _labeled(12, 7)
        a = stratified_split(sessions, (0.6, 0.1, 0.3), seed=4)
        b = stratified_split(sessions, (0.6, 0.1, 0.3), seed=4)
        ids = lambda part: [ls.session.session_id for ls in part]
        assert all(ids(x) == ids(y) for x, y in zip(a, b))

    def test_seed_changes_assignment(self):
        sessions = _labeled(12, 7)
        a = stratified_split(sessions, (0.6, 0.1, 0.3), seed=4)
        b = stratified_split(sessions, (0.6, 0.1, 0.3), seed=5)
        ids = lambda part: [ls.session.session_id for ls in part]
        assert any(ids(x) != ids(y) for x, y in zip(a, b))

    def test_disjoint_union_property(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n_pos = int(rng.integers(1, 40))
            n_neg = int(rng.integers(1, 40))
            sessions = _labeled(n_pos, n_neg)
            split = stratified_split(sessions, (0.6, 0.1, 0.3), seed=int(rng.integers(1 << 30)))
            ids = [ls.session.session_id for part in split for ls in part]
            assert len(ids) == len(sessions)
            assert set(ids) == {ls.session.session_id for ls in sessions}

    def test_class_balance_property(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n_pos = int(rng.integers(1, 60))
            n_neg = int(rng.integers(1, 60))
            sessions = _labeled(n_pos, n_neg)
            frac = n_pos / (n_pos + n_neg)
            split = stratified_split(sessions, (0.6, 0.1, 0.3), seed=int(rng.integers(1 << 30)))
            for part in split:
                pos = sum(ls.label for ls in part)
                assert abs(pos - round(len(part) * frac)) <= 1

    def test_bad_ratios(self):
        with pytest.raises(InvalidValueError):
            stratified_split(_labeled(3, 3), (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(InvalidValueError):
            stratified_split(_labeled(3, 3), (0.8, -0.1, 0.3), seed=0)

    def test_empty_class(self):
        with pytest.raises(EmptyClassError):
            stratified_split(_labeled(4, 0), (0.6, 0.1, 0.3), seed=0)

    def test_split_by_format(self):
        sessions = []
        for i, fmt in enumerate(["organic", "dd_left", "dd_right"] * 8):
            label = i % 2
            session = make_session(session_id=f"s{i}", ad_format=fmt, likert=5 if label else 1)
            sessions.append(LabeledSession(session=session, label=label))
        split = stratified_split_by_format(sessions, (0.6, 0.1, 0.3), seed=2)
        assert sum(len(part) for part in split) == len(sessions)
        ids = [ls.session.session_id for part in split for ls in part]
        assert set(ids) == {ls.session.session_id for ls in sessions}


class TestDatasetIO:
    def test_round_trip(self, tmp_path):
        labeled = clean_sessions([make_session(likert=5), make_session(session_id="s2", likert=1)])
        path = tmp_path / "data.jsonl"
        assert write_dataset(labeled, path) == 2
        loaded = load_dataset(path)
        assert [ls.label for ls in loaded] == [1, 0]
        assert loaded[0].session.events == labeled[0].session.events

    def test_corrupt_line_reports_lineno(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps(make_doc() | {"label": 1})
        path.write_text(good + "\n{oops\n", encoding="utf-8")
        with pytest.raises(MalformedInputError, match=":2:"):
            load_dataset(path)

    def test_dedup_only_touches_mousemoves(self):
        events = moves([(1, 1), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5)])
        session = make_session(events=events)
        deduped = dedup_mouse_events(session)
        assert len(deduped.mouse_coords()) == 5
