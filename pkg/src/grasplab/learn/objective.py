"""Angular bins, the masked per-bin cross-entropy, and Q-value prediction."""

from __future__ import annotations

import math

import numpy as np

from ..errors import PhiOutOfRange, ShapeMismatch
from .net import N_BINS, ModelParams, backward, forward

# tolerance for angles computed as k*w landing a hair below a bin edge
_BIN_EPS = 1e-9


def angle_to_bin(phi, n_bins=N_BINS) -> int:
    if not (0.0 <= phi < math.pi):
        raise PhiOutOfRange(f"phi={phi} outside [0, pi)")
    return min(int(math.floor(phi / (math.pi / n_bins) + _BIN_EPS)), n_bins - 1)


def bin_to_angle(b, n_bins=N_BINS) -> float:
    if not 0 <= b < n_bins:
        raise PhiOutOfRange(f"bin {b} outside [0, {n_bins})")
    return (b + 0.5) * math.pi / n_bins


def masked_loss(logits, bins, rewards):
    """Mean cross-entropy over each record's active logit pair.

    ``logits`` is ``(N, 2 * n_bins)`` (or a single 36-vector). Channels ``2k`` and
    ``2k + 1`` hold (fail, success) for bin ``k``. Returns ``(loss, dlogits)``;
    every non-active entry of ``dlogits`` is exactly zero.
    """
    z = np.asarray(logits)
    single = z.ndim == 1
    if single:
        z = z[None]
    bins = np.atleast_1d(np.asarray(bins, dtype=np.int64))
    rewards = np.atleast_1d(np.asarray(rewards, dtype=np.int64))
    n = z.shape[0]
    rows = np.arange(n)
    pair = np.stack([z[rows, 2 * bins], z[rows, 2 * bins + 1]], axis=1)
    m = pair.max(axis=1, keepdims=True)
    e = np.exp(pair - m)
    s = e.sum(axis=1, keepdims=True)
    lse = (m + np.log(s))[:, 0]
    loss = float(np.mean(lse - pair[rows, rewards]))
    p = e / s
    p[rows, rewards] -= 1.0
    d = np.zeros_like(z)
    d[rows, 2 * bins] = p[:, 0] / n
    d[rows, 2 * bins + 1] = p[:, 1] / n
    return loss, (d[0] if single else d)


def success_prob(logits, n_bins=N_BINS):
    """Per-bin success probability from ``(..., 2 * n_bins)`` logits."""
    z = np.asarray(logits, dtype=np.float64)
    z = z.reshape(z.shape[:-1] + (n_bins, 2))
    return 1.0 / (1.0 + np.exp(z[..., 0] - z[..., 1]))


def bin_probs(logits, n_bins=N_BINS):
    """``(..., n_bins, 2)`` (fail, success) softmax pairs."""
    z = np.asarray(logits, dtype=np.float64).reshape(np.shape(logits)[:-1] + (n_bins, 2))
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def predict_q(params: ModelParams, patch, b=None):
    """Success probability of bin ``b`` for one net-input patch (all bins when ``b`` is None).

    Also accepts a batch ``(N, S, S, 3)``.
    """
    x = np.asarray(patch)
    s = params.net.input_size
    if x.shape[-3:-1] != (s, s):
        raise ShapeMismatch(f"patch {x.shape} does not match network input {s}x{s}")
    out = forward(params, x if x.ndim == 4 else x[None])
    q = success_prob(out[:, 0, 0, :], params.net.n_bins)
    if x.ndim == 3:
        q = q[0]
    return q if b is None else q[..., b]


def dense_predict(params: ModelParams, image):
    """One fully-convolutional pass over ``image``.

    Returns ``(scores, stride, offset)``; ``scores[i, j, k]`` is the success
    probability of bin ``k`` for the window whose top-left pixel is
    ``(i * stride, j * stride)``, i.e. centred at ``offset + i * stride``.
    """
    x = np.asarray(image)
    out = forward(params, x if x.ndim == 4 else x[None])[0]
    return success_prob(out, params.net.n_bins), params.net.total_stride, params.net.offset


def loss_and_grads(params: ModelParams, x, bins, rewards):
    logits, caches = forward(params, x, keep=True)
    n = logits.shape[0]
    loss, d = masked_loss(logits.reshape(n, -1), bins, rewards)
    dw, db = backward(params, d.reshape(logits.shape), caches)
    return loss, dw, db


def _activation_pattern(caches):
    pat = []
    for ci, cache, act in caches:
        if act is not None:
            pat.append(act > 0)
        elif ci is None:
            pat.append(cache[0])
    return pat


def _same_pattern(a, b):
    return all(np.array_equal(u, v) for u, v in zip(a, b))


def gradient_check(params: ModelParams, record, epsilon=1e-5, n_weights=200, seed=0, max_draws=None):
    """Max relative error between analytic and central-difference gradients.

    ``record`` is ``(patch, bin, reward)``. The analytic gradient comes from
    backprop in ``params.dtype``. The numeric one perturbs the very same weight
    values by ``+-epsilon`` and evaluates the loss in float64, so reduced-precision
    roundoff does not swamp the difference quotient. A weight whose perturbation
    flips any ReLU sign or max-pool winner straddles a kink, where central
    differences do not estimate the derivative; it is redrawn and counted.

    Weights are drawn from every parameter array (at least one each), then
    uniformly over all parameters. Returns ``(max_rel_err, info)`` where
    ``info`` has ``checked`` tuples ``(array, flat_index, analytic, numeric)``
    and the ``kinks`` count.
    """
    patch, b, r = record
    x = np.asarray(patch, dtype=params.dtype)[None]
    _, dw, db = loss_and_grads(params, x, [b], [r])
    grads = []
    for gw, gb in zip(dw, db):
        grads += [gw, gb]
    p64 = params.astype(np.float64)
    x64 = x.astype(np.float64)
    arrays = p64.arrays()
    _, base_caches = forward(p64, x64, keep=True)
    base = _activation_pattern(base_caches)

    def loss_at():
        z, caches = forward(p64, x64, keep=True)
        return masked_loss(z.reshape(1, -1), [b], [r])[0], _activation_pattern(caches)

    rng = np.random.default_rng(seed)
    sizes = np.array([a.size for a in arrays])
    bounds = np.cumsum(sizes)

    def draw(i=None):
        if i is None:
            f = int(rng.integers(bounds[-1]))
            i = int(np.searchsorted(bounds, f, side="right"))
            return i, f - int(bounds[i - 1] if i else 0)
        return i, int(rng.integers(sizes[i]))

    max_draws = max_draws or 20 * n_weights
    worst = 0.0
    checked, seen, kinks, draws = [], set(), 0, 0
    forced = list(range(len(arrays)))
    while len(checked) < n_weights and draws < max_draws:
        draws += 1
        i, j = draw(forced[0] if forced else None)
        if (i, j) in seen:
            continue
        seen.add((i, j))
        a = arrays[i].reshape(-1)
        old = a[j]
        a[j] = old + epsilon
        lp, pp = loss_at()
        a[j] = old - epsilon
        lm, pm = loss_at()
        a[j] = old
        if not (_same_pattern(pp, base) and _same_pattern(pm, base)):
            kinks += 1
            continue
        if forced:
            forced.pop(0)
        g_n = (lp - lm) / (2 * epsilon)
        g_a = float(grads[i].reshape(-1)[j])
        err = abs(g_a - g_n) / max(abs(g_a), abs(g_n), 1e-8)
        worst = max(worst, err)
        checked.append((i, j, g_a, g_n))
    return worst, {"checked": checked, "kinks": kinks}
