"""Synthetic interaction corpus for demos and desk-scale sanity training.

Positive sessions dwell inside the ad bounding box; negative sessions wander
the results column and avoid it.  Coordinates carry Gaussian jitter and the
~150 ms polling cadence of real capture, so the generated logs exercise the
same ingest/encode/render paths as production data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .seeding import derive

VIEWPORT_CHOICES = ((1024, 768), (1280, 900), (1366, 768), (1536, 864))

POLL_MS = 150


def _ad_box(viewport_w: int, side: str) -> dict:
    w = int(0.25 * viewport_w)
    x = int(0.63 * viewport_w) if side == "right" else int(0.08 * viewport_w)
    return {"x": x, "y": 140, "w": w, "h": 260}


def _timestamps(rng: np.random.Generator, count: int) -> list[int]:
    gaps = rng.integers(POLL_MS - 40, POLL_MS + 40, size=count)
    return np.cumsum(gaps).tolist()


def make_session(index: int, seed: int, attended: bool, ad_side: str = "right") -> dict:
    """One synthetic session document in the ingest JSON schema."""
    rng = np.random.default_rng(derive(seed, "session", index))
    vw, vh = VIEWPORT_CHOICES[rng.integers(len(VIEWPORT_CHOICES))]
    box = _ad_box(vw, ad_side)
    n_coords = int(rng.integers(25, 61))

    xs = np.empty(n_coords)
    ys = np.empty(n_coords)
    if attended:
        # Approach from the results column, then dwell inside the ad box.
        approach = max(4, n_coords // 5)
        xs[:approach] = np.linspace(0.15 * vw, box["x"] + 0.5 * box["w"], approach)
        ys[:approach] = np.linspace(0.3 * vh, box["y"] + 0.5 * box["h"], approach)
        xs[approach:] = box["x"] + (0.15 + 0.7 * rng.random(n_coords - approach)) * box["w"]
        ys[approach:] = box["y"] + (0.15 + 0.7 * rng.random(n_coords - approach)) * box["h"]
    else:
        # Scan down the left column, never crossing into the ad region.
        xs[:] = (0.06 + 0.38 * rng.random(n_coords)) * vw
        ys[:] = np.linspace(0.15 * vh, 1.1 * vh, n_coords) + 40.0 * rng.random(n_coords)

    xs = np.clip(xs + rng.normal(0.0, 8.0, n_coords), 0, vw - 1)
    ys = np.clip(ys + rng.normal(0.0, 8.0, n_coords), 0, 2 * vh)

    ts = _timestamps(rng, n_coords)
    events = [{"t": 0, "x": int(xs[0]), "y": int(ys[0]), "ev": "load", "xpath": "/html"}]
    for t, x, y in zip(ts, xs, ys):
        events.append({"t": int(t), "x": int(x), "y": int(y), "ev": "mousemove", "xpath": ""})
    events.append({"t": int(ts[-1]) + POLL_MS, "x": int(xs[-1]), "y": int(ys[-1]), "ev": "click", "xpath": "/html/body/a"})

    likert = int(rng.choice([4, 5] if attended else [1, 2]))
    return {
        "session_id": f"synth-{index:04d}",
        "ad_format": "dd_right" if ad_side == "right" else "dd_left",
        "viewport": {"w": vw, "h": vh},
        "ad_box": box,
        "likert": likert,
        "events": events,
    }


def make_corpus(n: int, seed: int = 0, ad_side: str = "right", rejects: bool = False) -> list[dict]:
    """Generate n sessions with a balanced label split.

    With ``rejects=True`` roughly one in ten sessions is made neutral
    (likert 3) or truncated below the coordinate minimum, to exercise the
    cleaning paths.
    """
    rng = np.random.default_rng(derive(seed, "corpus"))
    docs = []
    for i in range(n):
        attended = bool(rng.random() < 0.5)
        doc = make_session(i, seed, attended, ad_side)
        if rejects and rng.random() < 0.1:
            if rng.random() < 0.5:
                doc["likert"] = 3
            else:
                moves = [e for e in doc["events"] if e["ev"] == "mousemove"][:3]
                others = [e for e in doc["events"] if e["ev"] != "mousemove"]
                doc["events"] = sorted(moves + others, key=lambda e: e["t"])
        docs.append(doc)
    return docs


def write_corpus(docs: list[dict], path: Path | str) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")
    return len(docs)
