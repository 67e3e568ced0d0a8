"""Training loop: sample chunks, encode/reparameterize/decode, loss, ADAM.

Per-step randomness comes from a counter RNG seeded by (seed, step), so a
resumed run continues bit-exactly and batch assembly order cannot depend on
timing. Metric rows (step, l_reconst, l_reg, total) are reproducible bitwise
for a fixed seed; the CSV adds a wall_ms column on top.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .episodes import NormStats, compute_norm_stats, sample_chunk
from .model import ActModel, ModelConfig
from .tensor import AdamState, Tape, adam_step, backward, clip_grad_norm


@dataclass
class TrainConfig:
    batch_size: int = 8
    steps: int = 20_000
    learning_rate: float = 1e-4
    lr_schedule: str = "cosine"  # "cosine" decays to lr_floor; "constant"
    lr_floor_frac: float = 0.02
    beta: float = 10.0
    seed: int = 0
    checkpoint_every: int = 0  # 0: final checkpoint only
    grad_clip: float = 10.0

    def __post_init__(self):
        if self.batch_size < 1 or self.steps < 1:
            raise ValueError("batch_size and steps must be >= 1")
        if self.lr_schedule not in ("cosine", "constant"):
            raise ValueError(f"unknown lr schedule {self.lr_schedule!r}")

    def lr_at(self, step):
        """Schedule is a pure function of the step index (resume-safe)."""
        if self.lr_schedule == "constant":
            return self.learning_rate
        frac = step / max(1, self.steps)
        floor = self.learning_rate * self.lr_floor_frac
        return floor + 0.5 * (self.learning_rate - floor) * (1 + np.cos(np.pi * frac))


def _assemble_batch(episodes, rng, k, stats, batch_size):
    samples = [sample_chunk(episodes, rng, k, stats) for _ in range(batch_size)]
    front = np.stack([s.front_prompted for s in samples]).astype(np.float64) / 255.0
    hand = np.stack([s.hand for s in samples]).astype(np.float64) / 255.0
    proprio = np.stack([s.proprio for s in samples])
    chunk = np.stack([s.chunk for s in samples])
    mask = np.stack([s.pad_mask for s in samples])
    return front, hand, proprio, chunk, mask


def train_step(model, episodes, stats, adam, cfg, step):
    """One optimizer step; returns the loss breakdown."""
    adam.lr = cfg.lr_at(step)
    rng = np.random.default_rng([cfg.seed, step, 7])
    k = model.config.chunk_size
    front, hand, proprio, chunk, mask = _assemble_batch(
        episodes, rng, k, stats, cfg.batch_size)
    model.zero_grads()
    with Tape():
        post = model.encode(chunk, proprio)
        z = model.reparameterize(post, rng=rng)
        pred, _ = model.decode(front, hand, proprio, z)
        lb = model.loss(pred, chunk, mask, post, beta=cfg.beta)
        if not np.isfinite(lb.total.data):
            raise RuntimeError(
                f"non-finite loss at step {step}; reproduce with seed {cfg.seed}, "
                f"batch rng [{cfg.seed}, {step}, 7]")
        backward(lb.total)
    clip_grad_norm(model.parameters(), cfg.grad_clip)
    adam_step(model.parameters(), adam)
    return lb


def _save(model, path, stats, adam, cfg, step):
    optimizer = {
        "step": adam.step_count, "lr": adam.lr, "beta1": adam.beta1,
        "beta2": adam.beta2, "eps": adam.eps, "m": adam.m, "v": adam.v,
    }
    meta = {"seed": cfg.seed, "step": step, "beta": cfg.beta,
            "batch_size": cfg.batch_size}
    model.save(path, norm_stats=stats, optimizer=optimizer, train_meta=meta)


def train(episodes, model_config, train_config, out_dir, resume_from=None):
    """Run the loop; returns (checkpoint path, metric rows).

    Metric rows are (step, l_reconst, l_reg, total). One epoch equals
    len(dataset)/batch_size steps; budgets are step-based.
    """
    cfg = train_config
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if resume_from is not None:
        model, stats, opt, meta = ActModel.load(resume_from)
        if opt is None:
            raise ValueError(f"{resume_from} has no optimizer state; cannot resume")
        adam = AdamState(model.parameters(), lr=opt["lr"], beta1=opt["beta1"],
                         beta2=opt["beta2"], eps=opt["eps"])
        adam.step_count = opt["step"]
        adam.m = opt["m"]
        adam.v = opt["v"]
        start_step = meta["step"]
    else:
        model = ActModel(model_config, seed=cfg.seed)
        stats = compute_norm_stats(episodes)
        adam = AdamState(model.parameters(), lr=cfg.learning_rate)
        start_step = 0

    metrics = []
    wall = []
    ckpt_path = out_dir / "model.actw"
    t_prev = time.perf_counter()
    for step in range(start_step, cfg.steps):
        lb = train_step(model, episodes, stats, adam, cfg, step)
        now = time.perf_counter()
        metrics.append((step, lb.l_reconst, lb.l_reg, lb.total_value))
        wall.append((now - t_prev) * 1000.0)
        t_prev = now
        if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0:
            _save(model, out_dir / f"model_step{step + 1:06d}.actw", stats, adam, cfg, step + 1)

    _save(model, ckpt_path, stats, adam, cfg, cfg.steps)
    with open(out_dir / "metrics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "l_reconst", "l_reg", "total", "wall_ms"])
        for (step, lr_, lg, tot), ms in zip(metrics, wall):
            w.writerow([step, repr(lr_), repr(lg), repr(tot), f"{ms:.3f}"])
    return ckpt_path, metrics
