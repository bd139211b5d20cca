"""Command-line pipeline: ingest -> render/encode -> train -> compare.

Every command is deterministic given identical inputs, flags, and seeds;
all randomness is derived by name from the single --seed flag.  Errors
print one machine-parsable ``error:<kind>:<message>`` line and exit 1.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import (
    CursorAttnError,
    InvalidValueError,
    IOFailureError,
    MissingAdBoxError,
    TooFewReportsError,
)
from .metrics import EvalReport, build_report, load_report, write_report
from .nn import ModelSpec, init_model, save_model
from .render import RenderStyle, all_styles, downscale_area, encode_png, render_filename, render_session
from .seeding import derive
from .sessions import (
    CleanStats,
    LabeledSession,
    clean_sessions,
    iter_session_files,
    load_dataset,
    stratified_split,
    stratified_split_by_format,
    write_dataset,
)
from .stats import ComparisonResult, friedman_test, holm_correction, wilcoxon_signed_rank
from .synth import make_corpus, write_corpus
from .timeseries import encode_dataset
from .training import (
    SearchSpace,
    conv_config,
    fit,
    lr_range_test,
    random_search,
)

ARCH_CHOICES = ("simplernn", "lstm", "blstm", "gru", "cnn")
REPR_CHOICES = ("timeseries", "heatmap", "traj", "traj-color", "traj-thick", "traj-color-thick")

CONV_INPUT_SHAPE = (90, 128, 3)
SEQ_INPUT_SHAPE = (50, 2)


def _default_jobs() -> int:
    return int(os.environ.get("CURSOR_ATTN_JOBS", "1"))


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidValueError(f"ratios must be three comma-separated fractions, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _out_dirs(root: Path) -> dict[str, Path]:
    dirs = {name: root / name for name in ("models", "renders", "reports", "logs")}
    for d in dirs.values():
        d.mkdir(parents=True, exist_ok=True)
    return dirs


# -- ingest -------------------------------------------------------------------

def cmd_ingest(args) -> int:
    src = Path(args.input)
    if not src.exists():
        raise IOFailureError(f"input path {src} does not exist")
    stats = CleanStats()
    sessions = [session for _, _, session in iter_session_files(src)]
    labeled = clean_sessions(sessions, min_coords=args.min_events, stats=stats)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(labeled, out)
    pos = sum(ls.label for ls in labeled)
    neg = len(labeled) - pos
    print(f"kept: {stats.kept}")
    print(f"dropped_short: {stats.dropped_short}")
    print(f"dropped_neutral: {stats.dropped_neutral}")
    ratio = f"{pos / neg:.2f}" if neg else "inf"
    print(f"positive: {pos} negative: {neg} ratio: {ratio}")
    print(f"wrote {len(labeled)} sessions to {out}")
    if not sessions:
        print("warning: no sessions found in input", file=sys.stderr)
    return 0


# -- render -------------------------------------------------------------------

def _render_one(ls: LabeledSession, style: RenderStyle) -> tuple[str, bytes]:
    try:
        buf = render_session(ls, style)
    except MissingAdBoxError:
        raise MissingAdBoxError(f"session {ls.session.session_id} has no ad_box for style {style.token}") from None
    return render_filename(ls.session.session_id, style), encode_png(buf)


def cmd_render(args) -> int:
    dataset = load_dataset(args.dataset)
    if args.all_styles:
        styles = all_styles()
    else:
        if args.style == "timeseries":
            raise InvalidValueError("timeseries is not a visual style")
        styles = [RenderStyle(args.style, args.ad)]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(ls, style) for ls in dataset for style in styles]
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rendered = list(pool.map(lambda t: _render_one(*t), tasks))
    else:
        rendered = [_render_one(ls, style) for ls, style in tasks]

    manifest = {}
    for (ls, style), (fname, blob) in zip(tasks, rendered):
        (out_dir / fname).write_bytes(blob)
        manifest[fname] = {
            "session_id": ls.session.session_id,
            "style": style.kind,
            "ad": style.with_ad_placeholder,
            "label": ls.label,
        }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    print(f"wrote {len(manifest)} renders to {out_dir}")
    return 0


# -- train --------------------------------------------------------------------

def _split_dataset(dataset: list[LabeledSession], args):
    ratios = _parse_ratios(args.ratios)
    seed = derive(args.seed, "split")
    if args.by == "ad_format":
        return stratified_split_by_format(dataset, ratios, seed)
    return stratified_split(dataset, ratios, seed)


def _visual_arrays(split, style: RenderStyle, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    def build(ls: LabeledSession) -> np.ndarray:
        return downscale_area(render_session(ls, style))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            mats = list(pool.map(build, split))
    else:
        mats = [build(ls) for ls in split]
    y = np.array([ls.label for ls in split], dtype=np.float64)
    return np.stack(mats), y


def cmd_train(args) -> int:
    arch = "smallconv" if args.arch == "cnn" else args.arch
    if arch == "smallconv" and args.repr == "timeseries":
        raise InvalidValueError("the convolutional architecture requires a visual representation")
    if arch != "smallconv" and args.repr != "timeseries":
        raise InvalidValueError(f"recurrent architecture {args.arch} requires --repr timeseries")

    dataset = load_dataset(args.dataset)
    split = _split_dataset(dataset, args)
    dirs = _out_dirs(Path(args.out))
    repr_token = args.repr + ("-ad" if args.ad and args.repr != "timeseries" else "")

    if arch == "smallconv":
        style = RenderStyle(args.repr, args.ad)
        train_xy = _visual_arrays(split.train, style, args.jobs)
        val_xy = _visual_arrays(split.val, style, args.jobs)
        test_xy = _visual_arrays(split.test, style, args.jobs)
        spec = ModelSpec(arch=arch, input_shape=CONV_INPUT_SHAPE, seed=derive(args.seed, "model"))
        sweep = lr_range_test(spec, train_xy, batch_size=args.batch_size, seed=derive(args.seed, "lr"))
        (dirs["logs"] / "lr_range.json").write_text(
            json.dumps({"suggestion": sweep.suggestion, "etas": sweep.etas, "smoothed": sweep.smoothed}),
            encoding="utf-8",
        )
        config = conv_config(eta=sweep.suggestion, batch_size=args.batch_size, seed=derive(args.seed, "fit"))
        started = time.perf_counter()
        model, history = fit(init_model(spec), train_xy, val_xy, config)
        records = [
            {
                "trial": 0,
                "repeat": 0,
                "eta": config.eta,
                "b": config.batch_size,
                "best_epoch": history.best_epoch,
                "epochs_run": history.epochs_run,
                "best_val_auc": history.val_auc[history.best_epoch - 1],
                "train_loss": history.train_loss,
                "val_loss": history.val_loss,
                "wall_time_s": time.perf_counter() - started,
            }
        ]
        config_echo = {"arch": arch, "eta": config.eta, "b": config.batch_size, "seed": args.seed}
    else:
        train_xy = encode_dataset(split.train)
        val_xy = encode_dataset(split.val)
        test_xy = encode_dataset(split.test)
        space = SearchSpace(arch=arch, input_shape=SEQ_INPUT_SHAPE, budget=args.budget)
        result = random_search(space, train_xy, val_xy, k=3, seed=derive(args.seed, "search"), jobs=args.jobs)
        records = result.records
        model, history = fit(init_model(result.best_spec), train_xy, val_xy, result.best_config)
        config_echo = {
            "arch": arch,
            "eta": result.best_config.eta,
            "n": result.best_spec.hidden_n,
            "q": result.best_spec.drop_rate,
            "b": result.best_config.batch_size,
            "seed": args.seed,
        }

    with open(dirs["logs"] / "trials.jsonl", "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")

    model_path = dirs["models"] / f"{arch}-{repr_token}.model"
    save_model(model, model_path)

    _, p_test = model.predict(test_xy[0])
    report = build_report(arch, repr_token, p_test, test_xy[1].astype(int), config_echo)
    report_path = dirs["reports"] / f"{arch}-{repr_token}.json"
    write_report(report, report_path)

    print(f"best_epoch: {history.best_epoch}")
    print(f"test_auc: {report.auc:.4f}")
    print(f"test_f1: {report.weighted_f1:.4f}")
    print(f"model: {model_path}")
    print(f"report: {report_path}")
    return 0


# -- compare ------------------------------------------------------------------

def _pairwise_wilcoxon(pairs: list[tuple[str, str, np.ndarray, np.ndarray]], alpha: float) -> list[dict]:
    results: list[tuple[str, str, ComparisonResult]] = []
    for name_a, name_b, a, b in pairs:
        results.append((name_a, name_b, wilcoxon_signed_rank(a, b)))
    corrected = holm_correction([r.p_value for _, _, r in results])
    out = []
    for (name_a, name_b, res), cp in zip(results, corrected):
        res.corrected_p = cp
        out.append(
            {
                "a": name_a,
                "b": name_b,
                "W": res.statistic,
                "p": res.p_value,
                "corrected_p": cp,
                "r": res.effect_r,
                "significant": cp < alpha,
            }
        )
    return out


def _compare_samples(reports: list[EvalReport], names: list[str], alpha: float) -> dict:
    lengths = {len(r.scores) for r in reports}
    if len(lengths) != 1:
        raise InvalidValueError("per-sample comparison requires equally long score vectors")
    series = [np.asarray(r.scores) for r in reports]
    if len(reports) == 2:
        res = wilcoxon_signed_rank(series[0], series[1])
        return {
            "omnibus": None,
            "pairwise": _pairwise_wilcoxon([(names[0], names[1], series[0], series[1])], alpha),
            "note": None,
        }
    omnibus = friedman_test(np.stack(series))
    if omnibus.p_value >= alpha:
        return {
            "omnibus": omnibus.to_json(),
            "pairwise": [],
            "note": f"omnibus p={omnibus.p_value:.4f} >= alpha={alpha}; pairwise tests skipped",
        }
    pairs = [
        (names[i], names[j], series[i], series[j])
        for i in range(len(series))
        for j in range(i + 1, len(series))
    ]
    return {"omnibus": omnibus.to_json(), "pairwise": _pairwise_wilcoxon(pairs, alpha), "note": None}


def _compare_metric(reports: list[EvalReport], group_by: str, metric: str, alpha: float) -> dict:
    block_by = "representation" if group_by == "model_id" else "model_id"
    groups = sorted({getattr(r, group_by) for r in reports})
    blocks = sorted({getattr(r, block_by) for r in reports})
    table: dict[tuple[str, str], float] = {}
    for r in reports:
        key = (getattr(r, group_by), getattr(r, block_by))
        if key in table:
            raise InvalidValueError(f"duplicate report for {key}")
        table[key] = r.metric(metric)
    missing = [(g, b) for g in groups for b in blocks if (g, b) not in table]
    if missing:
        raise InvalidValueError(f"incomplete design; missing cells: {missing[:4]}")
    matrix = np.array([[table[(g, b)] for b in blocks] for g in groups])
    if len(groups) < 2:
        raise TooFewReportsError("need at least two groups to compare")
    if len(groups) == 2:
        return {
            "groups": groups,
            "blocks": blocks,
            "omnibus": None,
            "pairwise": _pairwise_wilcoxon([(groups[0], groups[1], matrix[0], matrix[1])], alpha),
            "note": None,
        }
    omnibus = friedman_test(matrix)
    if omnibus.p_value >= alpha:
        return {
            "groups": groups,
            "blocks": blocks,
            "omnibus": omnibus.to_json(),
            "pairwise": [],
            "note": f"omnibus p={omnibus.p_value:.4f} >= alpha={alpha}; pairwise tests skipped",
        }
    pairs = [
        (groups[i], groups[j], matrix[i], matrix[j])
        for i in range(len(groups))
        for j in range(i + 1, len(groups))
    ]
    return {"groups": groups, "blocks": blocks, "omnibus": omnibus.to_json(), "pairwise": _pairwise_wilcoxon(pairs, alpha), "note": None}


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        raise TooFewReportsError("need at least two report files")
    reports = [load_report(p) for p in args.reports]
    hashes = {p: hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in args.reports}
    names = [f"{r.model_id}/{r.representation}" for r in reports]

    if args.mode == "samples":
        body = _compare_samples(reports, names, args.alpha)
    else:
        body = _compare_metric(reports, args.group_by, args.metric, args.alpha)

    body["mode"] = args.mode
    body["alpha"] = args.alpha
    body["inputs"] = hashes
    text = json.dumps(body, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote comparison to {args.out}")

    if body.get("omnibus"):
        om = body["omnibus"]
        print(f"omnibus {om['test']}: statistic={om['statistic']:.4f} p={om['p_value']:.4g}")
    if body.get("note"):
        print(body["note"])
    if body["pairwise"]:
        width = max(len(f"{row['a']} vs {row['b']}") for row in body["pairwise"])
        print(f"{'pair'.ljust(width)}  {'W':>8}  {'p':>10}  {'holm p':>10}  {'r':>7}")
        for row in body["pairwise"]:
            pair = f"{row['a']} vs {row['b']}".ljust(width)
            print(f"{pair}  {row['W']:8.1f}  {row['p']:10.4g}  {row['corrected_p']:10.4g}  {row['r']:7.3f}")
    return 0


# -- synth ---------------------------------------------------------------------

def cmd_synth(args) -> int:
    docs = make_corpus(args.n, seed=args.seed, ad_side=args.side, rejects=args.rejects)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(docs, out)
    print(f"wrote {len(docs)} synthetic sessions to {out}")
    return 0


# -- parser ---------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="cursor-attn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--config", help="JSON file supplying defaults for any flag")
        subparsers[name] = p
        return p

    p = add("ingest", help="parse and clean raw session logs into a labeled dataset")
    p.add_argument("input", help="session .json/.jsonl file or directory")
    p.add_argument("--output", required=True, help="output JSON Lines dataset")
    p.add_argument("--min-events", type=int, default=5, help="minimum mousemove coordinates to keep a session")
    p.set_defaults(func=cmd_ingest)

    p = add("render", help="rasterize sessions into PNG visual representations")
    p.add_argument("dataset", help="labeled JSON Lines dataset")
    p.add_argument("--style", choices=REPR_CHOICES[1:], default="traj")
    p.add_argument("--ad", action="store_true", help="draw the ad placeholder")
    p.add_argument("--all-styles", action="store_true", help="emit all ten style variants")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_render)

    p = add("train", help="train a classifier on a representation and evaluate it")
    p.add_argument("--dataset", required=True, help="labeled JSON Lines dataset")
    p.add_argument("--arch", choices=ARCH_CHOICES, required=True)
    p.add_argument("--repr", choices=REPR_CHOICES, required=True)
    p.add_argument("--ad", action="store_true", help="use placeholder variants of visual styles")
    p.add_argument("--budget", type=int, default=20, help="random search trials (recurrent archs)")
    p.add_argument("--batch-size", type=int, default=32, help="batch size for the convnet")
    p.add_argument("--ratios", default="0.6,0.1,0.3", help="train,val,test fractions")
    p.add_argument("--by", choices=("none", "ad_format"), default="none", help="stratify independently per ad format")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.set_defaults(func=cmd_train)

    p = add("compare", help="statistically compare evaluation reports")
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("--mode", choices=("samples", "metric"), default="samples",
                   help="pair per-sample scores, or per-cell metric values")
    p.add_argument("--metric", choices=("auc", "f1", "weighted_precision", "weighted_recall"), default="auc")
    p.add_argument("--group-by", choices=("model_id", "representation"), default="model_id")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="write comparison JSON here")
    p.set_defaults(func=cmd_compare)

    p = add("synth", help="generate a synthetic session corpus")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", choices=("right", "left"), default="right")
    p.add_argument("--rejects", action="store_true", help="include neutral and too-short sessions")
    p.add_argument("--out", required=True, help="output JSON Lines path")
    p.set_defaults(func=cmd_synth)

    return parser, subparsers


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            try:
                cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise IOFailureError(f"cannot read config {args.config}: {exc}") from None
            command = args.command
            known = {a.dest for a in subparsers[command]._actions}
            unknown = set(cfg) - known
            if unknown:
                raise InvalidValueError(f"unknown config keys: {sorted(unknown)}")
            subparsers[command].set_defaults(**cfg)
            args = parser.parse_args(argv)
        return args.func(args)
    except CursorAttnError as exc:
        print(f"error:{exc.kind}:{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
