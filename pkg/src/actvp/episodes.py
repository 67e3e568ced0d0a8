"""Episode container format, dataset manifest, chunk extraction, normalization.

File layout (ACTE): magic, version u16 LE, header-length u32 LE, header JSON
(metadata, dims, T), then per-step payloads in t order: front RGB8, hand
RGB8, proprio f32x4, action f32x4, all little-endian. Stream-appendable and
byte-exact on round trip.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .prompting import PromptBox, overlay

MAGIC = b"ACTE"
VERSION = 1
IMAGE_RES = 96
ACTION_DIM = 4
_FRAME_BYTES = IMAGE_RES * IMAGE_RES * 3
_STEP_BYTES = 2 * _FRAME_BYTES + 2 * ACTION_DIM * 4


class EpisodeFormatError(RuntimeError):
    pass


class BadMagicError(EpisodeFormatError):
    pass


class VersionMismatchError(EpisodeFormatError):
    pass


class TruncatedError(EpisodeFormatError):
    pass


@dataclass
class Episode:
    front: np.ndarray    # (T, 96, 96, 3) uint8, unprompted
    hand: np.ndarray     # (T, 96, 96, 3) uint8
    proprio: np.ndarray  # (T, 4) float32: x, y, z, aperture
    actions: np.ndarray  # (T, 4) float32: commanded target
    meta: dict           # scenario, seed, target_id, products, boxes, region

    @property
    def T(self):
        return self.front.shape[0]

    def boxes(self):
        return [PromptBox.from_json(d) for d in self.meta["boxes"]]

    def validate(self):
        T = self.T
        if not (self.front.shape == self.hand.shape == (T, IMAGE_RES, IMAGE_RES, 3)):
            raise ValueError(f"image stacks malformed: {self.front.shape}, {self.hand.shape}")
        if self.proprio.shape != (T, ACTION_DIM) or self.actions.shape != (T, ACTION_DIM):
            raise ValueError(f"state stacks malformed: {self.proprio.shape}, {self.actions.shape}")
        if self.front.dtype != np.uint8 or self.hand.dtype != np.uint8:
            raise ValueError("images must be uint8")
        if self.proprio.dtype != np.float32 or self.actions.dtype != np.float32:
            raise ValueError("proprio/actions must be float32")
        if not np.all(np.isfinite(self.actions)):
            raise ValueError("non-finite actions")
        return self


def write_episode(path, ep):
    ep.validate()
    header = {"meta": ep.meta, "T": int(ep.T), "image_res": IMAGE_RES, "action_dim": ACTION_DIM}
    head = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(struct.pack("<I", len(head)))
        f.write(head)
        for t in range(ep.T):
            f.write(ep.front[t].tobytes())
            f.write(ep.hand[t].tobytes())
            f.write(ep.proprio[t].astype("<f4").tobytes())
            f.write(ep.actions[t].astype("<f4").tobytes())


def read_episode(path):
    raw = Path(path).read_bytes()
    if len(raw) < 10:
        raise TruncatedError(f"{path}: shorter than fixed header")
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack("<H", raw[4:6])
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    (hlen,) = struct.unpack("<I", raw[6:10])
    if len(raw) < 10 + hlen:
        raise TruncatedError(f"{path}: truncated header")
    header = json.loads(raw[10:10 + hlen].decode("utf-8"))
    T = header["T"]
    if len(raw) != 10 + hlen + T * _STEP_BYTES:
        raise TruncatedError(f"{path}: body is {len(raw) - 10 - hlen} bytes, expected {T * _STEP_BYTES}")
    front = np.empty((T, IMAGE_RES, IMAGE_RES, 3), dtype=np.uint8)
    hand = np.empty_like(front)
    proprio = np.empty((T, ACTION_DIM), dtype=np.float32)
    actions = np.empty((T, ACTION_DIM), dtype=np.float32)
    off = 10 + hlen
    for t in range(T):
        front[t] = np.frombuffer(raw, np.uint8, _FRAME_BYTES, off).reshape(IMAGE_RES, IMAGE_RES, 3)
        off += _FRAME_BYTES
        hand[t] = np.frombuffer(raw, np.uint8, _FRAME_BYTES, off).reshape(IMAGE_RES, IMAGE_RES, 3)
        off += _FRAME_BYTES
        proprio[t] = np.frombuffer(raw, "<f4", ACTION_DIM, off)
        off += ACTION_DIM * 4
        actions[t] = np.frombuffer(raw, "<f4", ACTION_DIM, off)
        off += ACTION_DIM * 4
    return Episode(front=front, hand=hand, proprio=proprio, actions=actions,
                   meta=header["meta"]).validate()


def write_manifest(out_dir, entries):
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(entries, f, indent=1)


def save_dataset(out_dir, episodes):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, ep in enumerate(episodes):
        name = f"episode_{i:04d}.acte"
        write_episode(out_dir / name, ep)
        entries.append({
            "path": name,
            "scenario": ep.meta["scenario"],
            "products": ep.meta["products"],
            "T": int(ep.T),
            "seed": ep.meta["seed"],
        })
    write_manifest(out_dir, entries)
    return entries


def load_dataset(data_dir):
    data_dir = Path(data_dir)
    with open(data_dir / "manifest.json") as f:
        entries = json.load(f)
    return [read_episode(data_dir / e["path"]) for e in entries]


@dataclass
class NormStats:
    action_mean: np.ndarray
    action_std: np.ndarray
    proprio_mean: np.ndarray
    proprio_std: np.ndarray

    def to_json(self):
        return {
            "action_mean": [float(v) for v in self.action_mean],
            "action_std": [float(v) for v in self.action_std],
            "proprio_mean": [float(v) for v in self.proprio_mean],
            "proprio_std": [float(v) for v in self.proprio_std],
        }

    @staticmethod
    def from_json(doc):
        return NormStats(
            action_mean=np.array(doc["action_mean"], dtype=np.float64),
            action_std=np.array(doc["action_std"], dtype=np.float64),
            proprio_mean=np.array(doc["proprio_mean"], dtype=np.float64),
            proprio_std=np.array(doc["proprio_std"], dtype=np.float64),
        )

    def normalize_actions(self, a):
        return (np.asarray(a, dtype=np.float64) - self.action_mean) / self.action_std

    def denormalize_actions(self, a):
        return np.asarray(a, dtype=np.float64) * self.action_std + self.action_mean

    def normalize_proprio(self, p):
        return (np.asarray(p, dtype=np.float64) - self.proprio_mean) / self.proprio_std


SIGMA_FLOOR = 1e-6


def compute_norm_stats(episodes):
    """Exact per-dimension mean/sigma over the dataset; sigma floored at 1e-6."""
    if not episodes:
        raise ValueError("empty dataset")
    actions = np.concatenate([ep.actions for ep in episodes]).astype(np.float64)
    proprio = np.concatenate([ep.proprio for ep in episodes]).astype(np.float64)
    return NormStats(
        action_mean=actions.mean(axis=0),
        action_std=np.maximum(actions.std(axis=0), SIGMA_FLOOR),
        proprio_mean=proprio.mean(axis=0),
        proprio_std=np.maximum(proprio.std(axis=0), SIGMA_FLOOR),
    )


@dataclass
class ChunkSample:
    front_prompted: np.ndarray  # (96, 96, 3) uint8, boxes baked in
    hand: np.ndarray            # (96, 96, 3) uint8
    proprio: np.ndarray         # (4,) float64, normalized
    chunk: np.ndarray           # (k, 4) float64, normalized targets
    pad_mask: np.ndarray        # (k,) bool, True where beyond episode end


def extract_chunk(ep, t, k, stats):
    """The (I_vp, hand, proprio, a_{t:t+k}) training sample at timestep t."""
    T = ep.T
    if not 0 <= t < T:
        raise IndexError(f"t={t} outside episode of length {T}")
    end = min(T, t + k)
    chunk = np.empty((k, ACTION_DIM), dtype=np.float64)
    chunk[: end - t] = ep.actions[t:end]
    chunk[end - t:] = ep.actions[T - 1]  # repeat final action past the end
    pad = np.zeros(k, dtype=bool)
    pad[end - t:] = True
    return ChunkSample(
        front_prompted=overlay(ep.front[t], ep.boxes()),
        hand=ep.hand[t],
        proprio=stats.normalize_proprio(ep.proprio[t]),
        chunk=stats.normalize_actions(chunk),
        pad_mask=pad,
    )


def draw_sample_index(episodes, rng):
    """Uniform (episode, t) over all timesteps in the dataset."""
    if not episodes:
        raise ValueError("empty dataset")
    lengths = np.array([ep.T for ep in episodes])
    cum = np.cumsum(lengths)
    flat = int(rng.integers(int(cum[-1])))
    idx = int(np.searchsorted(cum, flat, side="right"))
    t = flat - (int(cum[idx - 1]) if idx else 0)
    return idx, t


def sample_chunk(episodes, rng, k, stats):
    """Uniform over all (episode, t) pairs, then chunked per extract_chunk."""
    if k < 1:
        raise ValueError(f"chunk size must be >= 1, got {k}")
    idx, t = draw_sample_index(episodes, rng)
    return extract_chunk(episodes[idx], t, k, stats)
