"""Minibatch SGD with momentum on the masked per-bin objective."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError, EmptyDataset
from .net import ModelParams, forward
from .objective import loss_and_grads, success_prob


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 20
    seed: int = 0
    balanced: bool = True
    weight_decay: float = 0.0
    augment: bool = False

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError("learning rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ConfigError("momentum must be in [0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    train_accuracy: float


def _augment(x, bins, n_bins, rng):
    """Random horizontal mirror: the image flips and the closing angle maps to pi - phi."""
    flip = rng.random(len(x)) < 0.5
    if not flip.any():
        return x, bins
    x = x.copy()
    x[flip] = x[flip, :, ::-1]
    bins = bins.copy()
    bins[flip] = n_bins - 1 - bins[flip]
    return x, bins


def _batches(rewards, cfg: TrainConfig, rng):
    """Index batches for one epoch; ``ceil(n / batch)`` of them."""
    n = len(rewards)
    steps = -(-n // cfg.batch_size)
    pos = np.flatnonzero(rewards == 1)
    neg = np.flatnonzero(rewards == 0)
    if not cfg.balanced or len(pos) == 0 or len(neg) == 0:
        order = rng.permutation(n)
        return [order[i * cfg.batch_size : (i + 1) * cfg.batch_size] for i in range(steps)]
    half = cfg.batch_size // 2
    need_p, need_n = steps * (cfg.batch_size - half), steps * half

    def stream(idx, k):
        reps = -(-k // len(idx))
        return np.concatenate([rng.permutation(idx) for _ in range(reps)])[:k]

    sp, sn = stream(pos, need_p), stream(neg, need_n)
    out = []
    for i in range(steps):
        b = np.concatenate([sp[i * (cfg.batch_size - half) : (i + 1) * (cfg.batch_size - half)],
                            sn[i * half : (i + 1) * half]])
        out.append(b)
    return out


def train(params: ModelParams, patches, bins, rewards, cfg: TrainConfig = TrainConfig(), steps=None):
    """Train a copy of ``params``; returns ``(trained_params, [EpochStats])``.

    ``patches`` is ``(N, S, S, 3)``. If ``steps`` is given, training stops after
    that many minibatch updates, running extra epochs if needed.
    Deterministic for a fixed seed: shuffles come from their own seeded stream.
    """
    patches = np.asarray(patches)
    bins = np.asarray(bins, dtype=np.int64)
    rewards = np.asarray(rewards, dtype=np.int64)
    if len(patches) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if not (len(patches) == len(bins) == len(rewards)):
        raise ConfigError("patches, bins and rewards must have equal length")
    p = params.copy()
    p.meta["train"] = cfg.to_dict()
    dtype = p.dtype
    x_all = patches.astype(dtype, copy=False)
    rng = np.random.default_rng([cfg.seed, 0x7EA1])
    vel_w = [np.zeros_like(w) for w in p.weights]
    vel_b = [np.zeros_like(b) for b in p.biases]
    lr = dtype.type(cfg.lr)
    mom = dtype.type(cfg.momentum)
    wd = dtype.type(cfg.weight_decay)
    history = []
    done = 0
    per_epoch = -(-len(bins) // cfg.batch_size)
    epochs = cfg.epochs if steps is None else max(cfg.epochs, -(-steps // per_epoch))
    for epoch in range(epochs):
        losses = []
        for idx in _batches(rewards, cfg, rng):
            if steps is not None and done >= steps:
                break
            x, b, r = x_all[idx], bins[idx], rewards[idx]
            if cfg.augment:
                x, b = _augment(x, b, p.net.n_bins, rng)
            loss, dw, db = loss_and_grads(p, x, b, r)
            losses.append(loss)
            for i in range(len(p.weights)):
                g = dw[i] if not wd else dw[i] + wd * p.weights[i]
                vel_w[i] *= mom
                vel_w[i] -= lr * g
                p.weights[i] += vel_w[i]
                vel_b[i] *= mom
                vel_b[i] -= lr * db[i]
                p.biases[i] += vel_b[i]
            done += 1
        if not losses:
            break
        history.append(EpochStats(epoch, float(np.mean(losses)), accuracy(p, x_all, bins, rewards)))
    return p, history


def predict_all(params: ModelParams, patches, chunk=512):
    out = []
    for i in range(0, len(patches), chunk):
        z = forward(params, patches[i : i + chunk])
        out.append(success_prob(z[:, 0, 0, :], params.net.n_bins))
    return np.concatenate(out) if out else np.zeros((0, params.net.n_bins))


def accuracy(params, patches, bins, rewards):
    q = predict_all(params, np.asarray(patches))
    pred = q[np.arange(len(bins)), np.asarray(bins)] > 0.5
    return float(np.mean(pred == (np.asarray(rewards) == 1)))


def write_loss_csv(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_loss", "train_accuracy"])
        for h in history:
            w.writerow([h.epoch, repr(h.mean_loss), repr(h.train_accuracy)])
