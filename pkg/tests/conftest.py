import json

import pytest

from cursor_attn.sessions import parse_session_json


def moves(coords, t0=0, step=150):
    return [
        {"t": t0 + i * step, "x": int(x), "y": int(y), "ev": "mousemove", "xpath": ""}
        for i, (x, y) in enumerate(coords)
    ]


def make_doc(
    session_id="s1",
    ad_format="organic",
    vw=1280,
    vh=900,
    likert=5,
    events=None,
    ad_box=None,
):
    doc = {
        "session_id": session_id,
        "ad_format": ad_format,
        "viewport": {"w": vw, "h": vh},
        "likert": likert,
        "events": events if events is not None else moves([(10 * i, 20 * i) for i in range(10)]),
    }
    if ad_box is not None:
        doc["ad_box"] = ad_box
    return doc


def make_session(**kwargs):
    return parse_session_json(make_doc(**kwargs))


@pytest.fixture
def doc_factory():
    return make_doc


@pytest.fixture
def session_factory():
    return make_session


def write_jsonl(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")
    return path
