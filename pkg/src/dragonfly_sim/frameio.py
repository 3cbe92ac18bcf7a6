"""Binary IF frame dump format.

Byte-exact layout, all little-endian, no padding:

    file header:  magic b"DFIF", uint32 version (currently 1)
    per frame:    int32   chirp_index
                  int32   tx_channel
                  float64 t_start            (s)
                  int32   n_rx
                  int32   n_samples
                  float32 samples[n_rx * n_samples]   (row-major: channel, sample)

Frames are stored as float32, which is also their in-memory dtype, so a
dump/load round trip is lossless.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

import numpy as np

from .synth import IfFrame

MAGIC = b"DFIF"
VERSION = 1
_HEADER = struct.Struct("<iidii")


class FrameFormatError(ValueError):
    """The byte stream is not a valid frame dump."""


def write_frames(path: str | Path, frames: Iterable[IfFrame]) -> int:
    """Write frames to a dump file; returns the number written."""
    count = 0
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        for frame in frames:
            _write_one(fh, frame)
            count += 1
    return count


def _write_one(fh: BinaryIO, frame: IfFrame) -> None:
    samples = np.ascontiguousarray(frame.samples, dtype="<f4")
    n_rx, n_samples = samples.shape
    fh.write(_HEADER.pack(frame.chirp_index, frame.tx_channel, frame.t_start, n_rx, n_samples))
    fh.write(samples.tobytes())


def iter_frames(path: str | Path) -> Iterator[IfFrame]:
    """Yield frames from a dump file in stored order."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FrameFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise FrameFormatError(f"unsupported frame dump version {version}")
        while True:
            header = fh.read(_HEADER.size)
            if not header:
                return
            if len(header) != _HEADER.size:
                raise FrameFormatError("truncated frame header")
            k, tx, t_start, n_rx, n_samples = _HEADER.unpack(header)
            if n_rx <= 0 or n_samples <= 0:
                raise FrameFormatError(f"bad frame dimensions {n_rx}x{n_samples}")
            raw = fh.read(4 * n_rx * n_samples)
            if len(raw) != 4 * n_rx * n_samples:
                raise FrameFormatError("truncated frame samples")
            samples = np.frombuffer(raw, dtype="<f4").reshape(n_rx, n_samples)
            yield IfFrame(chirp_index=k, tx_channel=tx, t_start=t_start, samples=samples)


def read_frames(path: str | Path) -> list[IfFrame]:
    return list(iter_frames(path))
