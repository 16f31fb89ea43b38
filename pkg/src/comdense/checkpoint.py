"""Checkpoint files: one JSON header line, then raw float32 tensor bytes.

The header records the model config, vocabulary sizes, a manifest of
(name, shape, offset, nbytes) for every parameter tensor, and an optional
optimizer section with the step counter and its own manifest (moment
buffers named ``m.<tensor>`` / ``v.<tensor>``).  Offsets are relative to
the first byte after the header's newline; tensor data is little-endian
32-bit float in manifest order.

Storage is always 32-bit.  Models configured with 64-bit compute load
back as the nearest 32-bit values; training resumes bit-exactly for
32-bit configs.  Header JSON is serialized with sorted keys, so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .adam import AdamState
from .model import ModelConfig, Parameters

FORMAT_VERSION = 1
_STORED_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    config: ModelConfig
    params: Parameters
    adam_state: AdamState | None
    header: dict


def _manifest_and_blob(named: list[tuple[str, np.ndarray]], start_offset: int) -> tuple[list[dict], bytes]:
    manifest = []
    chunks = []
    offset = start_offset
    for name, arr in named:
        data = np.ascontiguousarray(arr, dtype=_STORED_DTYPE).tobytes()
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    return manifest, b"".join(chunks)


def save_checkpoint(
    path: str | Path,
    config: ModelConfig,
    params: Parameters,
    adam_state: AdamState | None = None,
) -> None:
    """Write params (and optionally optimizer state) to one binary file."""
    tensors = list(params.named_tensors())
    manifest, blob = _manifest_and_blob(tensors, 0)
    header = {
        "format_version": FORMAT_VERSION,
        "model_config": asdict(config),
        "num_entities": params.num_entities,
        "num_relations": params.num_relations_stored,
        "tensors": manifest,
        "optimizer": None,
    }
    opt_blob = b""
    if adam_state is not None:
        opt_named = [(f"m.{name}", adam_state.m[name]) for name, _ in tensors]
        opt_named += [(f"v.{name}", adam_state.v[name]) for name, _ in tensors]
        opt_manifest, opt_blob = _manifest_and_blob(opt_named, len(blob))
        header["optimizer"] = {"t": adam_state.t, "tensors": opt_manifest}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(blob)
        fh.write(opt_blob)


def _read_tensors(data: bytes, manifest: list[dict], dtype) -> dict[str, np.ndarray]:
    out = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype=_STORED_DTYPE, count=count, offset=entry["offset"])
        out[entry["name"]] = arr.reshape(shape).astype(dtype)
    return out


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Parse header and tensors; rebuild Parameters and optimizer state."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        data = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"not a checkpoint file (bad header): {path}") from exc
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r} (expected {FORMAT_VERSION})")
    config = ModelConfig(**header["model_config"])
    config.validate()
    dtype = config.np_dtype()
    params = Parameters.from_named(_read_tensors(data, header["tensors"], dtype))
    adam_state = None
    if header.get("optimizer"):
        opt = header["optimizer"]
        buffers = _read_tensors(data, opt["tensors"], dtype)
        adam_state = AdamState.__new__(AdamState)
        adam_state.t = int(opt["t"])
        adam_state.m = {name[2:]: arr for name, arr in buffers.items() if name.startswith("m.")}
        adam_state.v = {name[2:]: arr for name, arr in buffers.items() if name.startswith("v.")}
    return Checkpoint(config=config, params=params, adam_state=adam_state, header=header)
