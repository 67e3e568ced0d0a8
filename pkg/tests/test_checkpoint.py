import numpy as np
import pytest

from actvp.tensor import (
    BadMagicError,
    TruncatedError,
    VersionMismatchError,
    load_checkpoint,
    save_checkpoint,
)


def make_params(rng):
    return [
        ("enc.w", rng.normal(size=(4, 3))),
        ("enc.b", rng.normal(size=(3,))),
        ("head.w", rng.normal(size=(3, 2))),
    ]


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    params = make_params(rng)
    opt = {
        "step": 17,
        "lr": 1e-4,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "m": [rng.normal(size=a.shape) for _, a in params],
        "v": [np.abs(rng.normal(size=a.shape)) for _, a in params],
    }
    p = tmp_path / "model.actw"
    save_checkpoint(p, params, optimizer=opt, extra={"seed": 5})
    params2, opt2, extra = load_checkpoint(p)
    assert [n for n, _ in params2] == [n for n, _ in params]
    for (_, a), (_, b) in zip(params, params2):
        assert a.tobytes() == b.tobytes()
    for s in ("m", "v"):
        for a, b in zip(opt[s], opt2[s]):
            assert a.tobytes() == b.tobytes()
    assert opt2["step"] == 17
    assert extra == {"seed": 5}

    # file-level byte exactness: re-saving the loaded state reproduces the file
    p2 = tmp_path / "model2.actw"
    save_checkpoint(p2, params2, optimizer=opt2, extra=extra)
    assert p.read_bytes() == p2.read_bytes()


def test_bad_magic(tmp_path):
    p = tmp_path / "x.actw"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagicError):
        load_checkpoint(p)


def test_version_mismatch(tmp_path):
    p = tmp_path / "x.actw"
    save_checkpoint(p, [("w", np.zeros(2))])
    raw = bytearray(p.read_bytes())
    raw[4] = 99
    p.write_bytes(bytes(raw))
    with pytest.raises(VersionMismatchError):
        load_checkpoint(p)


def test_truncated(tmp_path):
    p = tmp_path / "x.actw"
    save_checkpoint(p, [("w", np.arange(8, dtype=float))])
    raw = p.read_bytes()
    p.write_bytes(raw[:-5])
    with pytest.raises(TruncatedError):
        load_checkpoint(p)
