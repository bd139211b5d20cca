"""Session ingest: parse, validate, clean, label, and split interaction logs.

A session is one user's recorded interaction with a results page: an event
stream (mouse moves, clicks, scrolls, ...), the viewport geometry, optional
ad bounding box, and a 1-5 self-reported attention score.  This module turns
raw JSON logs into labeled, experiment-ready datasets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    EmptyClassError,
    InvalidValueError,
    MalformedInputError,
)
from .seeding import derive

AD_FORMATS = ("organic", "dd_left", "dd_right")

MOUSEMOVE = "mousemove"

#: Minimum number of deduplicated mousemove coordinates a session must keep.
MIN_COORDS = 5


@dataclass(frozen=True, slots=True)
class RawEvent:
    t_ms: int
    x_px: int
    y_px: int
    event_name: str
    xpath: str = ""


@dataclass(frozen=True, slots=True)
class AdBox:
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True, slots=True)
class Session:
    session_id: str
    ad_format: str
    viewport_w: int
    viewport_h: int
    likert: int
    events: tuple[RawEvent, ...]
    ad_box: AdBox | None = None

    def mouse_events(self) -> list[RawEvent]:
        return [e for e in self.events if e.event_name == MOUSEMOVE]

    def mouse_coords(self) -> list[tuple[int, int]]:
        return [(e.x_px, e.y_px) for e in self.mouse_events()]


@dataclass(frozen=True, slots=True)
class LabeledSession:
    """A cleaned session plus its binary attention label (1 = attended)."""

    session: Session
    label: int


@dataclass(frozen=True, slots=True)
class DatasetSplit:
    train: list[LabeledSession]
    val: list[LabeledSession]
    test: list[LabeledSession]
    seed: int
    ratios: tuple[float, float, float]

    def __iter__(self) -> Iterator[list[LabeledSession]]:
        return iter((self.train, self.val, self.test))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidValueError(msg)


def _get(obj: dict, key: str, where: str):
    try:
        return obj[key]
    except (KeyError, TypeError):
        raise MalformedInputError(f"missing required field '{key}' in {where}") from None


def parse_session_json(obj: dict) -> Session:
    """Build a validated Session from a decoded JSON object.

    Unknown fields are ignored.  Events are stably sorted by timestamp, so
    logs with interleaved capture order still come out time-ordered.
    """
    if not isinstance(obj, dict):
        raise MalformedInputError("session document must be a JSON object")
    session_id = str(_get(obj, "session_id", "session"))
    ad_format = _get(obj, "ad_format", "session")
    if ad_format not in AD_FORMATS:
        raise InvalidValueError(f"unknown ad_format {ad_format!r}")
    viewport = _get(obj, "viewport", "session")
    vw = int(_get(viewport, "w", "viewport"))
    vh = int(_get(viewport, "h", "viewport"))
    _require(vw > 0 and vh > 0, f"viewport must be positive, got {vw}x{vh}")
    likert = int(_get(obj, "likert", "session"))
    _require(1 <= likert <= 5, f"likert must be in 1..5, got {likert}")

    ad_box = None
    raw_box = obj.get("ad_box")
    if raw_box is not None:
        ad_box = AdBox(
            x=int(_get(raw_box, "x", "ad_box")),
            y=int(_get(raw_box, "y", "ad_box")),
            w=int(_get(raw_box, "w", "ad_box")),
            h=int(_get(raw_box, "h", "ad_box")),
        )
        _require(ad_box.w > 0 and ad_box.h > 0, "ad_box must have positive size")

    events = []
    for i, ev in enumerate(_get(obj, "events", "session")):
        where = f"events[{i}]"
        t = int(_get(ev, "t", where))
        x = int(_get(ev, "x", where))
        y = int(_get(ev, "y", where))
        name = str(_get(ev, "ev", where))
        _require(t >= 0, f"{where}: negative timestamp {t}")
        _require(x >= 0 and y >= 0, f"{where}: negative coordinate ({x},{y})")
        events.append(RawEvent(t_ms=t, x_px=x, y_px=y, event_name=name, xpath=str(ev.get("xpath", ""))))
    events.sort(key=lambda e: e.t_ms)  # stable: preserves capture order within a tick

    return Session(
        session_id=session_id,
        ad_format=ad_format,
        viewport_w=vw,
        viewport_h=vh,
        likert=likert,
        events=tuple(events),
        ad_box=ad_box,
    )


def parse_session_log(data: bytes | str) -> Session:
    """Parse one JSON session document from raw bytes."""
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedInputError(f"not valid JSON: {exc}") from None
    return parse_session_json(obj)


def binarize_label(likert: int) -> int | None:
    """Collapse a 1-5 attention score to a binary label.

    1-2 map to the negative class, 4-5 to the positive class, and the
    neutral score 3 yields None (the session is dropped from analysis).
    """
    if not 1 <= likert <= 5:
        raise InvalidValueError(f"likert must be in 1..5, got {likert}")
    if likert == 3:
        return None
    return 1 if likert >= 4 else 0


def dedup_mouse_events(session: Session) -> Session:
    """Collapse consecutive duplicate mousemove coordinates.

    Duplicates are judged within the mousemove subsequence; clicks, scrolls
    and other events pass through untouched.
    """
    out = []
    prev_coord = None
    for ev in session.events:
        if ev.event_name == MOUSEMOVE:
            coord = (ev.x_px, ev.y_px)
            if coord == prev_coord:
                continue
            prev_coord = coord
        out.append(ev)
    return replace(session, events=tuple(out))


@dataclass(slots=True)
class CleanStats:
    kept: int = 0
    dropped_short: int = 0
    dropped_neutral: int = 0


def clean_sessions(
    sessions: Iterable[Session],
    min_coords: int = MIN_COORDS,
    stats: CleanStats | None = None,
) -> list[LabeledSession]:
    """Deduplicate, drop short or neutral sessions, and binarize labels.

    Sessions with fewer than ``min_coords`` mousemove coordinates after
    deduplication are dropped first; neutral scores are dropped next.
    Idempotent: cleaning an already-clean set is a no-op.
    """
    out = []
    for session in sessions:
        deduped = dedup_mouse_events(session)
        if len(deduped.mouse_coords()) < min_coords:
            if stats is not None:
                stats.dropped_short += 1
            continue
        label = binarize_label(deduped.likert)
        if label is None:
            if stats is not None:
                stats.dropped_neutral += 1
            continue
        if stats is not None:
            stats.kept += 1
        out.append(LabeledSession(session=deduped, label=label))
    return out


def _largest_remainder(quotas: list[float], total: int) -> list[int]:
    """Round quotas to integers summing to ``total``.

    Floors first, then hands leftover units to the largest fractional
    parts; ties go to the lower index.
    """
    base = [int(np.floor(q)) for q in quotas]
    leftover = total - sum(base)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def stratified_split(
    sessions: list[LabeledSession],
    ratios: tuple[float, float, float] = (0.6, 0.1, 0.3),
    seed: int = 0,
) -> DatasetSplit:
    """Split into disjoint train/val/test sets preserving class balance.

    Members of each class are shuffled with a seed-derived RNG, overall
    split sizes are fixed by largest-remainder rounding of ``len * ratio``,
    and each split then draws from the class pools in proportion to what
    remains.  Deterministic for a fixed (input order, seed).
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise InvalidValueError(f"ratios must be three non-negative fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidValueError(f"ratios must sum to 1.0, got {sum(ratios)}")

    by_class: dict[int, list[LabeledSession]] = {0: [], 1: []}
    for ls in sessions:
        by_class[ls.label].append(ls)
    for label, members in by_class.items():
        if not members:
            raise EmptyClassError(f"class {label} has no members")

    labels = sorted(by_class)
    pools = []
    for label in labels:
        rng = np.random.default_rng(derive(seed, "split", label))
        members = list(by_class[label])
        perm = rng.permutation(len(members))
        pools.append([members[i] for i in perm])

    n = len(sessions)
    sizes = _largest_remainder([n * r for r in ratios], n)

    cursors = [0] * len(pools)
    splits: list[list[LabeledSession]] = []
    for j, size in enumerate(sizes):
        remaining = [len(p) - c for p, c in zip(pools, cursors)]
        rem_total = sum(remaining)
        if j == len(sizes) - 1:
            takes = remaining
        else:
            takes = _largest_remainder([size * r / rem_total for r in remaining], size)
        chunk = []
        for ci, take in enumerate(takes):
            chunk.extend(pools[ci][cursors[ci] : cursors[ci] + take])
            cursors[ci] += take
        splits.append(chunk)

    return DatasetSplit(train=splits[0], val=splits[1], test=splits[2], seed=seed, ratios=tuple(ratios))


def stratified_split_by_format(
    sessions: list[LabeledSession],
    ratios: tuple[float, float, float] = (0.6, 0.1, 0.3),
    seed: int = 0,
) -> DatasetSplit:
    """Run the stratified split independently inside each ad format."""
    parts = [[ls for ls in sessions if ls.session.ad_format == fmt] for fmt in AD_FORMATS]
    merged: list[list[LabeledSession]] = [[], [], []]
    for fmt, group in zip(AD_FORMATS, parts):
        if not group:
            continue
        sub = stratified_split(group, ratios, derive(seed, "format", fmt))
        for acc, piece in zip(merged, sub):
            acc.extend(piece)
    return DatasetSplit(train=merged[0], val=merged[1], test=merged[2], seed=seed, ratios=tuple(ratios))


# --- JSON (de)serialization -------------------------------------------------

def session_to_json(session: Session, label: int | None = None) -> dict:
    doc: dict = {
        "session_id": session.session_id,
        "ad_format": session.ad_format,
        "viewport": {"w": session.viewport_w, "h": session.viewport_h},
        "likert": session.likert,
        "events": [
            {"t": e.t_ms, "x": e.x_px, "y": e.y_px, "ev": e.event_name, "xpath": e.xpath}
            for e in session.events
        ],
    }
    if session.ad_box is not None:
        b = session.ad_box
        doc["ad_box"] = {"x": b.x, "y": b.y, "w": b.w, "h": b.h}
    if label is not None:
        doc["label"] = label
    return doc


def write_dataset(labeled: Iterable[LabeledSession], path: Path | str) -> int:
    """Write a labeled dataset as JSON Lines, one session per line."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ls in labeled:
            fh.write(json.dumps(session_to_json(ls.session, ls.label)) + "\n")
            count += 1
    return count


def load_dataset(path: Path | str) -> list[LabeledSession]:
    """Load a labeled JSON Lines dataset written by :func:`write_dataset`."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedInputError(f"{path}:{lineno}: not valid JSON: {exc}") from None
            label = obj.get("label")
            if label not in (0, 1):
                raise MalformedInputError(f"{path}:{lineno}: missing or invalid 'label'")
            session = parse_session_json(obj)
            out.append(LabeledSession(session=session, label=int(label)))
    return out


def iter_session_files(path: Path) -> Iterator[tuple[str, int, Session]]:
    """Yield (source, line, Session) from a .json/.jsonl file or directory."""
    path = Path(path)
    if path.is_dir():
        for child in sorted(path.iterdir()):
            if child.suffix in (".json", ".jsonl"):
                yield from iter_session_files(child)
        return
    if path.suffix == ".jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedInputError(f"{path}:{lineno}: not valid JSON: {exc}") from None
                yield str(path), lineno, parse_session_json(obj)
    else:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise MalformedInputError(f"{path}: unreadable: {exc}") from None
        try:
            obj = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{path}:1: not valid JSON: {exc}") from None
        docs = obj if isinstance(obj, list) else [obj]
        for i, doc in enumerate(docs, start=1):
            yield str(path), i, parse_session_json(doc)
