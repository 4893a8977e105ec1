"""Flat model-parameter vectors and the algebra the aggregation rules need.

A :class:`ParamVector` is the unit exchanged between clients and server: a
1-D float64 array plus a shape manifest naming each parameter segment and
its dims. Vectors are immutable after construction and every operation here
is a pure function, so they can be shared freely across concurrently
simulated clients.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyInputError, NumericError, ShapeError

Manifest = tuple[tuple[str, tuple[int, ...]], ...]


def _normalize_manifest(manifest) -> Manifest:
    out = []
    for name, dims in manifest:
        dims = tuple(int(d) for d in dims)
        if any(d <= 0 for d in dims):
            raise ShapeError(f"segment {name!r} has non-positive dims {dims}")
        out.append((str(name), dims))
    return tuple(out)


def manifest_size(manifest: Manifest) -> int:
    return int(sum(np.prod(dims) for _, dims in manifest))


@dataclass(frozen=True)
class ParamVector:
    """Immutable flat parameter vector with a named shape manifest.

    Two vectors are shape-compatible iff their manifests are identical.
    Non-finite values are rejected at construction.
    """

    values: np.ndarray
    manifest: Manifest = field()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        manifest = _normalize_manifest(self.manifest)
        if values.size != manifest_size(manifest):
            raise ShapeError(
                f"manifest describes {manifest_size(manifest)} values, "
                f"got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericError("parameter vector contains NaN or Inf")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "manifest", manifest)

    def __len__(self) -> int:
        return self.values.size

    def segments(self) -> dict[str, np.ndarray]:
        """Read-only views of the flat vector, reshaped per the manifest."""
        out = {}
        offset = 0
        for name, dims in self.manifest:
            size = int(np.prod(dims))
            out[name] = self.values[offset:offset + size].reshape(dims)
            offset += size
        return out

    def with_values(self, values: np.ndarray) -> "ParamVector":
        """New vector with the same manifest and different values."""
        return ParamVector(values, self.manifest)

    def allclose(self, other: "ParamVector", rtol=1e-12, atol=0.0) -> bool:
        return self.manifest == other.manifest and np.allclose(
            self.values, other.values, rtol=rtol, atol=atol
        )


def zeros_like(vec: ParamVector) -> ParamVector:
    return ParamVector(np.zeros(len(vec)), vec.manifest)


def from_segments(arrays: dict[str, np.ndarray], manifest: Manifest) -> ParamVector:
    """Pack named arrays into a flat vector, in manifest order."""
    manifest = _normalize_manifest(manifest)
    parts = []
    for name, dims in manifest:
        arr = np.asarray(arrays[name], dtype=np.float64)
        if arr.shape != dims:
            raise ShapeError(f"segment {name!r}: expected shape {dims}, got {arr.shape}")
        parts.append(arr.reshape(-1))
    return ParamVector(np.concatenate(parts), manifest)


def _require_compatible(vectors: list[ParamVector]):
    if not vectors:
        raise EmptyInputError("need at least one vector")
    manifest = vectors[0].manifest
    for v in vectors[1:]:
        if v.manifest != manifest:
            raise ShapeError("vectors have different shape manifests")
    return manifest


def weighted_sum(vectors: list[ParamVector], weights) -> ParamVector:
    """Convex combination of vectors; weights are normalized internally.

    Callers pass raw sample counts n_k directly. Weights must be finite,
    nonnegative, and sum to something positive.
    """
    manifest = _require_compatible(vectors)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(vectors),):
        raise ShapeError(f"{len(vectors)} vectors but {w.size} weights")
    if not np.all(np.isfinite(w)):
        raise NumericError("weights contain NaN or Inf")
    if np.any(w < 0):
        raise NumericError("weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise NumericError("weights must sum to a positive value")
    normalized = w / total
    stacked = np.stack([v.values for v in vectors])
    return ParamVector(normalized @ stacked, manifest)


def coordinate_median(vectors: list[ParamVector]) -> ParamVector:
    """Coordinate-wise median; even counts average the two middle order stats."""
    manifest = _require_compatible(vectors)
    stacked = np.stack([v.values for v in vectors])
    return ParamVector(np.median(stacked, axis=0), manifest)


def l2_distance(a: ParamVector, b: ParamVector) -> float:
    if a.manifest != b.manifest:
        raise ShapeError("vectors have different shape manifests")
    return float(np.linalg.norm(a.values - b.values))


def add(a: ParamVector, b: ParamVector) -> ParamVector:
    _require_compatible([a, b])
    return ParamVector(a.values + b.values, a.manifest)


def subtract(a: ParamVector, b: ParamVector) -> ParamVector:
    _require_compatible([a, b])
    return ParamVector(a.values - b.values, a.manifest)


def multiply(a: ParamVector, b: ParamVector) -> ParamVector:
    _require_compatible([a, b])
    return ParamVector(a.values * b.values, a.manifest)


def square(a: ParamVector) -> ParamVector:
    return ParamVector(a.values * a.values, a.manifest)


def sqrt_div_offset(a: ParamVector, b: ParamVector, tau: float) -> ParamVector:
    """Elementwise a / (sqrt(b) + tau), the adaptive-step denominator.

    tau must be positive; negative entries in b are a numeric error.
    """
    _require_compatible([a, b])
    if not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    if np.any(b.values < 0):
        raise NumericError("sqrt of negative value")
    return ParamVector(a.values / (np.sqrt(b.values) + tau), a.manifest)


# Checkpoint layout (single file, little-endian):
#   8-byte unsigned header length N_h
#   N_h bytes of UTF-8 JSON: {"segments": [{"name": ..., "dims": [...]}],
#                             "dtype": "f64", "count": N}
#   N * 8 bytes of IEEE-754 float64 values
_HEADER_LEN = struct.Struct("<Q")


def save_checkpoint(vec: ParamVector, path: str | Path) -> None:
    """Write a vector to the canonical single-file checkpoint layout."""
    header = json.dumps({
        "segments": [{"name": name, "dims": list(dims)} for name, dims in vec.manifest],
        "dtype": "f64",
        "count": len(vec),
    }).encode("utf-8")
    payload = vec.values.astype("<f8").tobytes()
    Path(path).write_bytes(_HEADER_LEN.pack(len(header)) + header + payload)


def load_checkpoint(path: str | Path) -> ParamVector:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER_LEN.size:
        raise ShapeError(f"{path}: truncated checkpoint")
    (header_len,) = _HEADER_LEN.unpack_from(raw)
    header_end = _HEADER_LEN.size + header_len
    try:
        header = json.loads(raw[_HEADER_LEN.size:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ShapeError(f"{path}: bad checkpoint header") from exc
    if header.get("dtype") != "f64":
        raise ShapeError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    manifest = _normalize_manifest(
        (seg["name"], seg["dims"]) for seg in header["segments"]
    )
    count = int(header["count"])
    if count != manifest_size(manifest):
        raise ShapeError(f"{path}: count {count} does not match manifest")
    payload = raw[header_end:]
    if len(payload) != 8 * count:
        raise ShapeError(f"{path}: expected {8 * count} payload bytes, got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return ParamVector(values, manifest)
