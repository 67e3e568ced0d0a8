import hashlib

import numpy as np
import pytest

from actvp.episodes import (
    BadMagicError,
    ChunkSample,
    Episode,
    TruncatedError,
    VersionMismatchError,
    compute_norm_stats,
    draw_sample_index,
    extract_chunk,
    load_dataset,
    read_episode,
    sample_chunk,
    save_dataset,
    write_episode,
)


def synth_episode(rng, T=5, boxes=None):
    return Episode(
        front=rng.integers(0, 255, size=(T, 96, 96, 3), dtype=np.uint8),
        hand=rng.integers(0, 255, size=(T, 96, 96, 3), dtype=np.uint8),
        proprio=rng.uniform(0, 1, size=(T, 4)).astype(np.float32),
        actions=rng.uniform(0, 1, size=(T, 4)).astype(np.float32),
        meta={
            "scenario": 1,
            "seed": 7,
            "target_id": 0,
            "target_category": "rigid-box-large",
            "products": ["rigid-box-large"] * 9,
            "boxes": boxes or [{"role": "pick", "rect": [10, 10, 20, 20]}],
            "region": [0.8, 0.05, 0.95, 0.25],
        },
    ).validate()


def ep_digest(ep):
    h = hashlib.sha256()
    for a in (ep.front, ep.hand, ep.proprio, ep.actions):
        h.update(a.tobytes())
    h.update(repr(sorted(ep.meta.items())).encode())
    return h.hexdigest()


def test_round_trip_bit_exact(tmp_path):
    ep = synth_episode(np.random.default_rng(0), T=1)
    p = tmp_path / "ep.acte"
    write_episode(p, ep)
    back = read_episode(p)
    assert ep_digest(back) == ep_digest(ep)


def test_50_random_episodes_hash_oracle(tmp_path):
    rng = np.random.default_rng(1)
    for i in range(50):
        ep = synth_episode(rng, T=int(rng.integers(1, 12)))
        before = ep_digest(ep)
        p = tmp_path / f"e{i}.acte"
        write_episode(p, ep)
        assert ep_digest(read_episode(p)) == before


def test_truncated_file_rejected(tmp_path):
    ep = synth_episode(np.random.default_rng(2), T=3)
    p = tmp_path / "ep.acte"
    write_episode(p, ep)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 100])  # cut mid-frame
    with pytest.raises(TruncatedError):
        read_episode(p)


def test_bad_magic_and_version(tmp_path):
    ep = synth_episode(np.random.default_rng(3), T=1)
    p = tmp_path / "ep.acte"
    write_episode(p, ep)
    raw = bytearray(p.read_bytes())
    bad = tmp_path / "bad.acte"
    bad.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(BadMagicError):
        read_episode(bad)
    raw[4] = 9
    bad.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatchError):
        read_episode(bad)


def test_manifest_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    eps = [synth_episode(rng, T=int(rng.integers(2, 8))) for _ in range(4)]
    entries = save_dataset(tmp_path, eps)
    assert len(entries) == 4
    back = load_dataset(tmp_path)
    assert [ep_digest(e) for e in back] == [ep_digest(e) for e in eps]


def test_norm_stats_floor_and_arithmetic():
    rng = np.random.default_rng(5)
    ep = synth_episode(rng, T=4)
    ep.actions[:] = 0.7  # constant -> sigma floored
    stats = compute_norm_stats([ep])
    assert np.allclose(stats.action_mean, 0.7, atol=1e-7)
    assert np.all(stats.action_std == 1e-6)

    two = synth_episode(rng, T=2)
    two.actions[0] = 0.0
    two.actions[1] = 2.0
    stats2 = compute_norm_stats([two])
    assert np.allclose(stats2.action_mean, 1.0)
    assert np.allclose(stats2.action_std, 1.0)


def test_norm_stats_two_pass_oracle():
    rng = np.random.default_rng(6)
    eps = [synth_episode(rng, T=int(rng.integers(3, 9))) for _ in range(5)]
    stats = compute_norm_stats(eps)
    # brute-force second pass
    alla = np.concatenate([e.actions for e in eps]).astype(np.float64)
    mean = alla.sum(axis=0) / len(alla)
    var = ((alla - mean) ** 2).sum(axis=0) / len(alla)
    assert np.allclose(stats.action_mean, mean, atol=1e-12)
    assert np.allclose(stats.action_std, np.sqrt(var), atol=1e-12)


def test_normalize_round_trip():
    rng = np.random.default_rng(7)
    eps = [synth_episode(rng, T=6)]
    stats = compute_norm_stats(eps)
    a = rng.uniform(-2, 2, size=(10, 4))
    back = stats.denormalize_actions(stats.normalize_actions(a))
    assert np.max(np.abs(back - a)) < 1e-9
    z = stats.normalize_actions(stats.action_mean)
    assert np.allclose(z, 0.0)


def test_chunk_padding_at_episode_end():
    rng = np.random.default_rng(8)
    ep = synth_episode(rng, T=5)
    stats = compute_norm_stats([ep])
    s = extract_chunk(ep, t=4, k=20, stats=stats)
    assert isinstance(s, ChunkSample)
    expected = stats.normalize_actions(ep.actions[4])
    assert np.allclose(s.chunk, np.tile(expected, (20, 1)))
    assert not s.pad_mask[0] and s.pad_mask[1:].all()


def test_chunk_prompt_overlay_applied():
    rng = np.random.default_rng(9)
    ep = synth_episode(rng, T=3)
    stats = compute_norm_stats([ep])
    s = extract_chunk(ep, t=1, k=4, stats=stats)
    assert (s.front_prompted[10, 10:20] == (0, 255, 0)).all()
    assert s.hand.tobytes() == ep.hand[1].tobytes()


def test_sample_index_uniform_frequency():
    # 1 episode, T=150, 10^6 draws: each t within 3 sigma of binomial p=1/150
    rng = np.random.default_rng(10)
    ep = synth_episode(rng, T=150)
    draws = 1_000_000
    counts = np.zeros(150, dtype=int)
    for _ in range(draws):
        idx, t = draw_sample_index([ep], rng)
        assert idx == 0
        counts[t] += 1
    p = 1 / 150
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 3 * sigma)


def test_sample_index_weights_by_length():
    rng = np.random.default_rng(12)
    eps = [synth_episode(rng, T=30), synth_episode(rng, T=10)]
    hits = sum(draw_sample_index(eps, rng)[0] == 0 for _ in range(20_000))
    assert abs(hits / 20_000 - 0.75) < 0.02


def test_sample_chunk_empty_and_bad_k():
    with pytest.raises(ValueError):
        sample_chunk([], np.random.default_rng(0), 4, None)
    rng = np.random.default_rng(11)
    ep = synth_episode(rng, T=3)
    stats = compute_norm_stats([ep])
    with pytest.raises(ValueError):
        sample_chunk([ep], rng, 0, stats)
    s = sample_chunk([ep], rng, 2, stats)
    assert s.chunk.shape == (2, 4)
