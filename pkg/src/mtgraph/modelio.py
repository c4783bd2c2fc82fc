"""Versioned binary model files for trained map components.

Layout: 4-byte magic, u32 header length, UTF-8 JSON header, raw float64
little-endian parameter payload. The header stores the component metadata
and a SHA-256 of the payload; loads reject anything whose magic, version,
or checksum does not match.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .component import MapComponent
from .errors import CorruptModelError
from .network import NetworkParams
from .quadrature import cc_rule

MAGIC = b"MTGM"
FORMAT_VERSION = 1


def save_component(mc: MapComponent, path) -> None:
    if mc.params is None:
        raise ValueError("only network-backed components can be serialized")
    payload = np.ascontiguousarray(mc.params.theta, dtype="<f8").tobytes()
    header = {
        "version": FORMAT_VERSION,
        "k": int(mc.k),
        "sizes": list(mc.params.sizes),
        "beta": float(mc.beta),
        "quad_nodes": len(mc.rule),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(payload)


def load_component(path) -> MapComponent:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise CorruptModelError(f"{path}: bad magic")
    (hlen,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"{path}: unreadable header") from exc
    if header.get("version") != FORMAT_VERSION:
        raise CorruptModelError(f"{path}: unsupported version {header.get('version')}")
    payload = raw[8 + hlen:]
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CorruptModelError(f"{path}: checksum mismatch")
    theta = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    params = NetworkParams(tuple(header["sizes"]), theta)
    return MapComponent(k=int(header["k"]), params=params,
                        beta=float(header["beta"]),
                        rule=cc_rule(int(header["quad_nodes"])))
