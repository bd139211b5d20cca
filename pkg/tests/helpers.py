"""Shared oracles: finite-difference gradients, brute-force AUC, exhaustive
Wilcoxon enumeration.  These stay independent of the implementation paths
they check."""

import itertools

import numpy as np

from cursor_attn.nn import ModelSpec, init_model

FD_STEP = 1e-5


def gradient_check(arch, input_shape, hidden_n=16, drop_rate=0.1, seed=3, batch=4, data_seed=42):
    """Compare analytic gradients against central finite differences.

    Returns the worst relative error over all parameters (0.0 when every
    coordinate passes the spec tolerance outright).
    """
    spec = ModelSpec(
        arch=arch,
        input_shape=input_shape,
        hidden_n=hidden_n if arch != "smallconv" else None,
        drop_rate=drop_rate if arch != "smallconv" else 0.0,
        seed=seed,
    )
    model = init_model(spec)
    rng = np.random.default_rng(data_seed)
    x = rng.normal(0, 0.5, size=(batch,) + input_shape)
    y = rng.integers(0, 2, size=batch).astype(float)
    _, grads = model.loss_and_grads(x, y, train=False)
    worst = 0.0
    for name, arr in model.params().items():
        g = grads[name]
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + FD_STEP
            lp, _ = model.loss_and_grads(x, y, train=False)
            arr[ix] = orig - FD_STEP
            lm, _ = model.loss_and_grads(x, y, train=False)
            arr[ix] = orig
            fd = (lp - lm) / (2 * FD_STEP)
            diff = abs(g[ix] - fd)
            if diff <= 1e-9:
                continue
            scale = max(abs(g[ix]), abs(fd))
            rel = diff / max(scale, 1e-12)
            tol = 1e-4 if scale >= 1e-6 else 1e-3
            if rel > tol:
                worst = max(worst, rel)
    return worst


def auc_brute_force(scores, labels):
    """Mean over all positive/negative pairs of win=1, tie=0.5."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def wilcoxon_enumerate(differences):
    """Exact two-sided p for the signed-rank statistic by enumerating all
    2^n sign assignments (average ranks for tied magnitudes)."""
    d = np.asarray([v for v in differences if v != 0], dtype=float)
    n = len(d)
    mags = np.abs(d)
    order = np.argsort(mags, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    sorted_mags = mags[order]
    while i < n:
        j = i
        while j + 1 < n and sorted_mags[j + 1] == sorted_mags[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    t_plus = ranks[d > 0].sum()
    t_minus = ranks[d < 0].sum()
    w = min(t_plus, t_minus)
    at_most = 0
    for signs in itertools.product((0, 1), repeat=n):
        t = sum(r for r, s in zip(ranks, signs) if s)
        if t <= w + 1e-12:
            at_most += 1
    return w, min(1.0, 2.0 * at_most / 2 ** n)
