"""Magnitude ranking, mask construction, and pruning scopes.

Three scopes control how the smallest-magnitude fraction is counted: pooled
over every layer, per layer, or per node group (one group per matrix row, so
a hidden node groups its incoming weights plus merged bias and an output node
groups its up-projection row).  The geometry-aware mask prunes only where the
original ranking and the optimized surrogate's ranking agree, so its achieved
fraction never exceeds the requested one.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .adapter import AdapterLayer

DOWN, UP = "down", "up"


class PruneScope(Enum):
    CLASS_BLIND = "CB"
    CLASS_UNIFORM = "CU"
    NODE_WISE = "CN"

    @classmethod
    def from_token(cls, token: str) -> "PruneScope":
        try:
            return cls(token.upper())
        except ValueError:
            raise ValueError(f"unknown scope {token!r}; expected CB, CU, or CN") from None


class ParamIndex(NamedTuple):
    layer: int
    matrix: str
    row: int
    col: int


@dataclass(frozen=True)
class PruneMask:
    """Boolean matrices matching each layer's shapes; True marks a pruned entry."""

    entries: tuple[tuple[np.ndarray, np.ndarray], ...]

    @classmethod
    def from_indices(cls, layers: Sequence[AdapterLayer],
                     indices: Iterable[ParamIndex]) -> "PruneMask":
        masks = [(np.zeros(l.down.shape, dtype=bool), np.zeros(l.up.shape, dtype=bool))
                 for l in layers]
        for idx in indices:
            masks[idx.layer][0 if idx.matrix == DOWN else 1][idx.row, idx.col] = True
        for down_mask, up_mask in masks:
            down_mask.flags.writeable = False
            up_mask.flags.writeable = False
        return cls(tuple(masks))

    def count(self) -> int:
        return sum(int(d.sum()) + int(u.sum()) for d, u in self.entries)

    def size(self) -> int:
        return sum(d.size + u.size for d, u in self.entries)

    def fraction(self) -> float:
        return self.count() / self.size()

    def indices(self) -> set[ParamIndex]:
        found = set()
        for li, (down_mask, up_mask) in enumerate(self.entries):
            for tag, mask in ((DOWN, down_mask), (UP, up_mask)):
                for r, c in zip(*np.nonzero(mask)):
                    found.add(ParamIndex(li, tag, int(r), int(c)))
        return found


def _iter_params(layers: Sequence[AdapterLayer]):
    for li, layer in enumerate(layers):
        for tag, mat in ((DOWN, layer.down), (UP, layer.up)):
            rows, cols = mat.shape
            for r in range(rows):
                for c in range(cols):
                    yield ParamIndex(li, tag, r, c), abs(float(mat[r, c]))


def _group_key(idx: ParamIndex, scope: PruneScope):
    if scope is PruneScope.CLASS_BLIND:
        return ()
    if scope is PruneScope.CLASS_UNIFORM:
        return (idx.layer,)
    return (idx.layer, idx.matrix, idx.row)


def _take(fraction: float, size: int) -> int:
    # floor of the intended rational product; the epsilon undoes float dust
    return int(math.floor(fraction * size + 1e-9))


def select_smallest(layers: Sequence[AdapterLayer], fraction: float,
                    scope: PruneScope) -> set[ParamIndex]:
    """Indices of the bottom fraction by magnitude within each scope group.

    Equal magnitudes break ties by index order, so the selection is a pure
    function of the values.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    groups: dict[tuple, list[tuple[float, ParamIndex]]] = defaultdict(list)
    for idx, mag in _iter_params(layers):
        groups[_group_key(idx, scope)].append((mag, idx))
    chosen: set[ParamIndex] = set()
    for key in sorted(groups):
        members = sorted(groups[key])
        chosen.update(idx for _, idx in members[:_take(fraction, len(members))])
    return chosen


def _check_matching(originals: Sequence[AdapterLayer], optimized: Sequence) -> None:
    if len(originals) != len(optimized):
        raise ValueError("layer lists differ in length")
    for orig, opt in zip(originals, optimized):
        if orig.down.shape != opt.down.shape or orig.up.shape != opt.up.shape:
            raise ValueError("optimized matrices do not match the original shapes")


def tropical_mask(originals: Sequence[AdapterLayer], optimized: Sequence,
                  fraction: float, scope: PruneScope) -> tuple[PruneMask, float]:
    """Prune where the original and surrogate magnitude rankings agree.

    `optimized` is any sequence of objects with .down/.up matrices, e.g. the
    optimizer results.  Returns the mask and the achieved fraction, which is
    at most `fraction`.
    """
    _check_matching(originals, optimized)
    ranked_orig = select_smallest(originals, fraction, scope)
    surrogates = [AdapterLayer(o.down, o.up) for o in optimized]
    ranked_opt = select_smallest(surrogates, fraction, scope)
    agreed = ranked_orig & ranked_opt
    mask = PruneMask.from_indices(originals, agreed)
    return mask, mask.fraction()


def standard_mask(layers: Sequence[AdapterLayer], fraction: float,
                  scope: PruneScope) -> PruneMask:
    """Plain smallest-magnitude mask at the given (usually achieved) fraction."""
    return PruneMask.from_indices(layers, select_smallest(layers, fraction, scope))


def apply_mask(layers: Sequence[AdapterLayer], mask: PruneMask) -> list[AdapterLayer]:
    """Zero the masked entries, leaving everything else bit-identical."""
    if len(mask.entries) != len(layers):
        raise ValueError("mask does not cover the layer list")
    pruned = []
    for layer, (down_mask, up_mask) in zip(layers, mask.entries):
        if down_mask.shape != layer.down.shape or up_mask.shape != layer.up.shape:
            raise ValueError("mask shapes do not match layer shapes")
        pruned.append(AdapterLayer(
            np.where(down_mask, 0.0, layer.down),
            np.where(up_mask, 0.0, layer.up),
            layer.up_bias))
    return pruned


def combined_select(dev_metric_standard: float, dev_metric_tropical: float) -> str:
    """Pick the better method on the development metric; ties go tropical."""
    return "standard" if dev_metric_standard > dev_metric_tropical else "tropical"
