import numpy as np
import pytest

from dragonfly_sim import synth_sequence
from dragonfly_sim.frameio import FrameFormatError, iter_frames, read_frames, write_frames

from conftest import single_tag_scenario, static_tag


def test_round_trip_byte_exact(cfg, tmp_path):
    sc = single_tag_scenario(cfg, static_tag(), duration_s=0.1, snr_db=20.0)
    frames = synth_sequence(cfg, sc, 3, seed=1)
    path = tmp_path / "frames.bin"
    assert write_frames(path, frames) == 3
    loaded = read_frames(path)
    assert len(loaded) == 3
    for a, b in zip(frames, loaded):
        assert a.chirp_index == b.chirp_index
        assert a.tx_channel == b.tx_channel
        assert a.t_start == b.t_start
        assert a.samples.dtype == np.float32
        assert np.array_equal(a.samples, b.samples)
    # identical write is byte-identical
    path2 = tmp_path / "frames2.bin"
    write_frames(path2, frames)
    assert path.read_bytes() == path2.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bogus.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FrameFormatError, match="magic"):
        list(iter_frames(path))


def test_truncated_samples(cfg, tmp_path):
    sc = single_tag_scenario(cfg, static_tag(), duration_s=0.1)
    frames = synth_sequence(cfg, sc, 1, seed=1)
    path = tmp_path / "frames.bin"
    write_frames(path, frames)
    data = path.read_bytes()
    path.write_bytes(data[:-100])
    with pytest.raises(FrameFormatError, match="truncated"):
        list(iter_frames(path))
