"""Self-describing JSON weight bundles with atomic writes.

A bundle carries the whole tiny model: manifest (format, version, dims,
per-layer shapes and flags) plus nested float lists for every tensor.
Serialization goes through repr-exact JSON floats, so finite 64-bit values
survive a save/load round trip bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapter import AdapterLayer
from .errors import DataError
from .harness import TinyModel

FORMAT = "tropiprune-bundle"
VERSION = 1


@dataclass(frozen=True)
class WeightBundle:
    model: TinyModel
    optimized: bool = False
    meta: dict = field(default_factory=dict)


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see halves."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def bundle_to_json(bundle: WeightBundle) -> str:
    model = bundle.model
    adapter = model.adapter
    manifest = {
        "model": {
            "in_dim": model.in_dim,
            "features": model.features,
            "bottleneck": adapter.bottleneck,
            "classes": model.classes,
        },
        "layers": [{
            "name": "adapter0",
            "bias_merged": True,
            "has_up_bias": adapter.up_bias is not None,
            "down_shape": list(adapter.down.shape),
            "up_shape": list(adapter.up.shape),
        }],
        "optimized": bundle.optimized,
        "meta": bundle.meta,
    }
    tensors = {
        "feature_map": model.feature_map.tolist(),
        "adapter0.down": adapter.down.tolist(),
        "adapter0.up": adapter.up.tolist(),
        "head.w": model.head_w.tolist(),
        "head.b": model.head_b.tolist(),
    }
    if adapter.up_bias is not None:
        tensors["adapter0.up_bias"] = adapter.up_bias.tolist()
    doc = {"format": FORMAT, "version": VERSION, "manifest": manifest, "tensors": tensors}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_bundle(bundle: WeightBundle, path: str | Path) -> None:
    write_text_atomic(path, bundle_to_json(bundle))


def _tensor(tensors: dict, name: str, shape: tuple[int, ...] | None = None) -> np.ndarray:
    if name not in tensors:
        raise DataError(f"bundle is missing tensor {name!r}")
    arr = np.array(tensors[name], dtype=np.float64)
    if shape is not None and arr.shape != shape:
        raise DataError(f"tensor {name!r} has shape {arr.shape}, manifest says {shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"tensor {name!r} contains non-finite values")
    return arr


def load_bundle(path: str | Path) -> WeightBundle:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"bundle file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"bundle is not valid JSON: {exc}") from None
    if doc.get("format") != FORMAT:
        raise DataError(f"unexpected bundle format {doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported bundle version {doc.get('version')!r}")
    manifest = doc.get("manifest", {})
    tensors = doc.get("tensors", {})
    dims = manifest.get("model", {})
    layers = manifest.get("layers", [])
    if len(layers) != 1:
        raise DataError("bundle must describe exactly one adapter layer")
    entry = layers[0]
    down = _tensor(tensors, "adapter0.down", tuple(entry["down_shape"]))
    up = _tensor(tensors, "adapter0.up", tuple(entry["up_shape"]))
    up_bias = None
    if entry.get("has_up_bias"):
        up_bias = _tensor(tensors, "adapter0.up_bias", (up.shape[0],))
    feature_map = _tensor(tensors, "feature_map",
                          (dims["features"], dims["in_dim"]))
    head_w = _tensor(tensors, "head.w", (dims["classes"], dims["features"]))
    head_b = _tensor(tensors, "head.b", (dims["classes"],))
    try:
        adapter = AdapterLayer(down, up, up_bias)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    model = TinyModel(feature_map, adapter, head_w, head_b)
    return WeightBundle(model, bool(manifest.get("optimized", False)),
                        dict(manifest.get("meta", {})))
