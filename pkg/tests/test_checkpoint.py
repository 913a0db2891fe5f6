import struct
import zlib

import numpy as np
import pytest

from trajflow import checkpoint, ddpm
from trajflow.checkpoint import Checkpoint
from trajflow.diffcore import SeededRng
from trajflow.domains import NormStats
from trajflow.errors import ChecksumError, ConfigError, DataError, IoError, SchemaError
from trajflow.vfnet import NetConfig, forward, init_net


def _ckpt(family="tcfm", moments=True):
    cfg = NetConfig(horizon=8, state_dim=2, context_dim=3, base_channels=8, depth=1, groups=2)
    rng = np.random.default_rng(0)
    net = init_net(cfg, SeededRng(0))
    net = net.with_params({k: v + rng.standard_normal(v.shape) for k, v in net.params.items()})
    model = ddpm.make_baseline(net, 32) if family == "ddpm" else net
    mom = None
    if moments:
        mom = {"m": {k: rng.standard_normal(v.shape) for k, v in net.params.items()},
               "v": {k: rng.random(v.shape) for k, v in net.params.items()}}
    return Checkpoint.from_model(
        model,
        run_config={"seed": 3, "trainer": {"lr": 1e-3}},
        norm={"traj": NormStats(np.array([0.0, -1.0]), np.array([5.0, 2.0]))},
        step=17,
        moments=mom,
    )


@pytest.mark.parametrize("family", ["tcfm", "ddpm"])
def test_roundtrip_is_byte_identical(tmp_path, family):
    ck = _ckpt(family)
    p = tmp_path / "a.ckpt"
    checkpoint.save(p, ck)
    back = checkpoint.load(p)
    assert back == ck
    checkpoint.save(tmp_path / "b.ckpt", back)
    assert (tmp_path / "b.ckpt").read_bytes() == p.read_bytes()
    assert back.step == 17 and back.family == family
    assert back.run_config == ck.run_config
    assert all(np.array_equal(back.params[k], ck.params[k]) for k in ck.params)


def test_restored_model_computes_the_same_field():
    ck = _ckpt()
    back = checkpoint.from_bytes(checkpoint.to_bytes(ck))
    x = np.random.default_rng(1).standard_normal((8, 2))
    c = np.ones(3)
    assert np.array_equal(forward(ck.model(), 0.4, x, c), forward(back.model(), 0.4, x, c))


def test_diffusion_schedule_length_survives():
    back = checkpoint.from_bytes(checkpoint.to_bytes(_ckpt("ddpm")))
    assert back.model().schedule.num_steps == 32


def test_without_moments():
    back = checkpoint.from_bytes(checkpoint.to_bytes(_ckpt(moments=False)))
    assert back.moments is None


@pytest.mark.parametrize("where", [20, 200, -10])
def test_flipped_byte_fails_checksum(where):
    data = bytearray(checkpoint.to_bytes(_ckpt()))
    data[where] ^= 0x01
    with pytest.raises(ChecksumError):
        checkpoint.from_bytes(bytes(data))


def test_truncated_file_fails_checksum():
    data = checkpoint.to_bytes(_ckpt())
    with pytest.raises(ChecksumError):
        checkpoint.from_bytes(data[:-9])


def test_version_mismatch_is_schema_error():
    data = bytearray(checkpoint.to_bytes(_ckpt()))
    body = data[:-4]
    body[8:12] = struct.pack("<I", 2)
    data = bytes(body) + struct.pack("<I", zlib.crc32(bytes(body)))
    with pytest.raises(SchemaError):
        checkpoint.from_bytes(data)


def test_wrong_magic():
    with pytest.raises(DataError):
        checkpoint.from_bytes(b"PK\x03\x04" + bytes(40))


def test_unknown_family():
    with pytest.raises(ConfigError):
        Checkpoint("gan", NetConfig(horizon=8, state_dim=1), {})


def test_unwritable_location(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoError):
        checkpoint.save(blocker / "sub" / "m.ckpt", _ckpt())


def test_missing_file():
    with pytest.raises(DataError):
        checkpoint.load("/nonexistent/dir/m.ckpt")
