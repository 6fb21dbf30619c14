"""Binary dataset files ("CSI3D1"): bit-exact, little-endian, CRC-checked.

Layout:
  magic   7 bytes  b"CSI3D1\\n"
  header  u32 version=1, u32 T, u32 K, u32 U, u32 N, u64 seed
  config  u32 byte length, then UTF-8 canonical key=value text
  payload N*T*K*U complex entries as float32 pairs (re, im),
          sample-major, then t, then k, then u
  footer  u32 CRC32 of the payload bytes

The config record is canonical: one key=value per line, keys sorted, floats
rendered with repr so they round-trip exactly. Rewriting a parsed file
therefore reproduces it byte for byte.
"""

from __future__ import annotations

import struct
import typing
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, ConfigError, CsiArray

MAGIC = b"CSI3D1\n"
VERSION = 1
_HEADER = struct.Struct("<IIIIIQ")


class FormatError(ValueError):
    """File does not conform to the CSI3D1 layout or fails its checksum."""


def _render_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config_record(config: ChannelConfig, extras: dict | None = None) -> str:
    items = {f.name: _render_value(getattr(config, f.name)) for f in fields(config)}
    for key, value in (extras or {}).items():
        if key in items:
            raise FormatError(f"extra key {key!r} collides with a config field")
        items[key] = _render_value(value)
    for key, value in items.items():
        if "=" in key or "\n" in key or "\n" in value:
            raise FormatError(f"config record entry {key!r} breaks key=value form")
    return "\n".join(f"{k}={items[k]}" for k in sorted(items)) + "\n"


def parse_config_record(text: str) -> tuple[ChannelConfig, dict]:
    entries = {}
    for line in text.splitlines():
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"malformed config line {line!r}")
        key, value = line.split("=", 1)
        entries[key] = value
    kwargs = {}
    hints = typing.get_type_hints(ChannelConfig)
    for f in fields(ChannelConfig):
        if f.name not in entries:
            raise FormatError(f"config record missing field {f.name!r}")
        raw = entries.pop(f.name)
        kind = hints[f.name]
        kwargs[f.name] = kind(raw) if kind in (int, float) else raw
    return ChannelConfig(**kwargs), entries


@dataclass
class DatasetFile:
    """Parsed CSI3D1 contents; h holds complex64 with shape (N, T, K, U)."""

    config: ChannelConfig
    h: np.ndarray
    extras: dict

    @property
    def n_samples(self) -> int:
        return self.h.shape[0]

    def split(self, name: str) -> np.ndarray:
        key = f"split_{name}"
        if key not in self.extras or not self.extras[key]:
            return np.arange(self.n_samples) if name == "train" else np.array([], dtype=int)
        return np.array([int(s) for s in self.extras[key].split(",")], dtype=int)

    def as_csi_arrays(self, indices=None) -> list[CsiArray]:
        indices = range(self.n_samples) if indices is None else indices
        return [
            CsiArray(self.h[i].astype(np.complex128), self.config, int(i)) for i in indices
        ]


def write_dataset(path, h: np.ndarray, config: ChannelConfig, extras: dict | None = None,
                  force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass force=True to overwrite")
    h = np.asarray(h)
    if h.ndim != 4 or h.shape[1:] != (config.T, config.K, config.U):
        raise FormatError(f"payload shape {h.shape} does not match config extents")
    n = h.shape[0]
    interleaved = np.empty(h.shape + (2,), dtype="<f4")
    interleaved[..., 0] = h.real
    interleaved[..., 1] = h.imag
    payload = interleaved.tobytes()
    record = render_config_record(config, extras).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, config.T, config.K, config.U, n, config.seed))
        fh.write(struct.pack("<I", len(record)))
        fh.write(record)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))
    return path


def read_dataset(path) -> DatasetFile:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    off = len(MAGIC)
    version, t, k, u, n, seed = _HEADER.unpack_from(blob, off)
    off += _HEADER.size
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    (record_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    record = blob[off : off + record_len].decode("utf-8")
    off += record_len
    config, extras = parse_config_record(record)
    if (config.T, config.K, config.U, config.seed) != (t, k, u, seed):
        raise FormatError(f"{path}: header disagrees with config record")
    count = n * t * k * u * 2
    payload = blob[off : off + count * 4]
    if len(payload) != count * 4:
        raise FormatError(f"{path}: truncated payload")
    off += count * 4
    (crc_stored,) = struct.unpack_from("<I", blob, off)
    if off + 4 != len(blob):
        raise FormatError(f"{path}: trailing bytes after footer")
    if zlib.crc32(payload) != crc_stored:
        raise FormatError(f"{path}: payload CRC32 mismatch")
    flat = np.frombuffer(payload, dtype="<f4").reshape(n, t, k, u, 2)
    h = (flat[..., 0] + 1j * flat[..., 1]).astype(np.complex64)
    return DatasetFile(config, h, extras)
