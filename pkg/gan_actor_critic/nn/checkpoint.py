"""Flat binary container of named float64 arrays.

Layout (little-endian)::

    magic "GACK" | version u32 | entry count u32
    per entry: name length u16 | utf-8 name | ndim u8 | dims u32 × ndim | f64 × prod(dims)

Round trips are bit-exact. Networks are stored as ``<prefix>layers.<i>.weight``
/ ``<prefix>layers.<i>.bias`` entries plus a ``<prefix>arch`` entry holding the
activation codes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Dict, List, Mapping, Tuple, Union

import numpy as np

from gan_actor_critic.autodiff import Tensor
from gan_actor_critic.autodiff.tensor import Array
from gan_actor_critic.core.errors import CheckpointError, ConfigError, ShapeError

from .network import HIDDEN_ACTIVATIONS, OUTPUT_ACTIVATIONS, Layer, Network

MAGIC = b"GACK"
VERSION = 1

_ACTIVATION_CODES = {"identity": 0.0, "relu": 1.0, "tanh": 2.0}
_ACTIVATION_NAMES = {code: name for name, code in _ACTIVATION_CODES.items()}

PathLike = Union[str, Path]


def encode_container(entries: Mapping[str, Array]) -> bytes:
    parts: List[bytes] = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for name, value in entries.items():
        array = np.asarray(value, dtype=np.float64)
        encoded_name = name.encode("utf-8")
        if len(encoded_name) > 0xFFFF:
            raise CheckpointError(f"Entry name too long: {name[:40]}...")
        parts.append(struct.pack("<H", len(encoded_name)))
        parts.append(encoded_name)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(np.ascontiguousarray(array, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_container(payload: bytes) -> Dict[str, Array]:
    if payload[:4] != MAGIC:
        raise CheckpointError("Not a checkpoint container (bad magic)")
    try:
        version, count = struct.unpack_from("<II", payload, 4)
        if version != VERSION:
            raise CheckpointError(f"Unsupported container version {version}; expected {VERSION}")
        offset = 12
        entries: Dict[str, Array] = {}
        for _ in range(count):
            (name_length,) = struct.unpack_from("<H", payload, offset)
            offset += 2
            name = payload[offset : offset + name_length].decode("utf-8")
            offset += name_length
            (ndim,) = struct.unpack_from("<B", payload, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", payload, offset)
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            end = offset + 8 * size
            if end > len(payload):
                raise CheckpointError(f"Entry {name!r} is truncated")
            entries[name] = np.frombuffer(payload[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
            offset = end
    except (struct.error, UnicodeDecodeError) as exc:
        raise CheckpointError(f"Malformed checkpoint container: {exc}") from exc
    if offset != len(payload):
        raise CheckpointError("Trailing bytes after the last container entry")
    return entries


def save_container(path: PathLike, entries: Mapping[str, Array]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_container(entries))
    return target


def load_container(path: PathLike) -> Dict[str, Array]:
    source = Path(path)
    if not source.exists():
        raise CheckpointError(f"Checkpoint not found: {source}")
    return decode_container(source.read_bytes())


def network_entries(net: Network, prefix: str = "") -> Dict[str, Array]:
    entries: Dict[str, Array] = {
        f"{prefix}arch": np.array(
            [_ACTIVATION_CODES[net.hidden_activation], _ACTIVATION_CODES[net.output_activation]]
        )
    }
    for name, param in net.named_parameters():
        entries[f"{prefix}{name}"] = param.data.copy()
    return entries


def network_from_entries(entries: Mapping[str, Array], prefix: str = "") -> Network:
    arch = entries.get(f"{prefix}arch")
    if arch is None or arch.shape != (2,):
        raise CheckpointError(f"Missing architecture entry {prefix}arch")
    hidden = _ACTIVATION_NAMES.get(float(arch[0]))
    output = _ACTIVATION_NAMES.get(float(arch[1]))
    if hidden not in HIDDEN_ACTIVATIONS or output not in OUTPUT_ACTIVATIONS:
        raise CheckpointError(f"Unknown activation codes {arch.tolist()} under {prefix!r}")

    layers: List[Layer] = []
    index = 0
    while f"{prefix}layers.{index}.weight" in entries:
        weight = entries[f"{prefix}layers.{index}.weight"]
        bias = entries.get(f"{prefix}layers.{index}.bias")
        if bias is None:
            raise CheckpointError(f"Missing bias for layer {index} under {prefix!r}")
        layers.append(Layer(Tensor(weight, requires_grad=True), Tensor(bias, requires_grad=True)))
        index += 1
    if not layers:
        raise CheckpointError(f"No layers stored under {prefix!r}")
    try:
        return Network(layers, hidden_activation=hidden, output_activation=output)
    except (ShapeError, ConfigError) as exc:
        raise CheckpointError(f"Inconsistent network under {prefix!r}: {exc}") from exc


def save_network(path: PathLike, net: Network, metadata: Mapping[str, Array] | None = None) -> Path:
    entries = network_entries(net)
    for name, value in (metadata or {}).items():
        entries[f"meta.{name}"] = np.asarray(value, dtype=np.float64)
    return save_container(path, entries)


def load_network(path: PathLike) -> Tuple[Network, Dict[str, Array]]:
    entries = load_container(path)
    metadata = {name[len("meta.") :]: value for name, value in entries.items() if name.startswith("meta.")}
    return network_from_entries(entries), metadata


__all__ = [
    "MAGIC",
    "VERSION",
    "decode_container",
    "encode_container",
    "load_container",
    "load_network",
    "network_entries",
    "network_from_entries",
    "save_container",
    "save_network",
]
