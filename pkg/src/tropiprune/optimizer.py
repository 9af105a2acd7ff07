"""Sparse surrogate fitting for adapter layers by alternating subgradient descent.

The objective keeps each node's generator pair close to the original layer's
in squared Frobenius distance while an entrywise L1 penalty pushes the
surrogate generators toward sparsity:

    sum_i  0.5*||Gp_i(hat) - Gp_i||_F^2 + 0.5*||Gn_i(hat) - Gn_i||_F^2
         + l1_pos*||Gp_i(hat)||_1      + l1_neg*||Gn_i(hat)||_1

where Gp_i / Gn_i are the positive- and negative-part generators of node i.
Descent alternates between the two branches: even iterations step every
node's positive branch, odd iterations the negative one.  ReLU and absolute
value contribute their minimal-norm subgradient (zero at the kink), which
keeps exact zeros stable once reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapter import AdapterLayer

POS, NEG = "pos", "neg"


@dataclass(frozen=True)
class OptimConfig:
    """Hyperparameters for the descent loop.

    tol is a relative-change threshold on the combined loss measured across
    `window` iterations; tol=0 disables early stopping.  The seed is carried
    for provenance only, the loop itself draws no randomness.
    """

    iterations: int = 1000
    lr: float = 0.01
    l1_pos: float = 0.1
    l1_neg: float = 0.1
    tol: float = 1e-6
    window: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.l1_pos < 0 or self.l1_neg < 0:
            raise ValueError("sparsity weights must be >= 0")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class OptimResult:
    down: np.ndarray
    up: np.ndarray
    loss_trace: tuple[tuple[int, float], ...]
    converged_at: int | None


def _check_shapes(layer: AdapterLayer, down_hat: np.ndarray, up_hat: np.ndarray) -> None:
    if down_hat.shape != layer.down.shape or up_hat.shape != layer.up.shape:
        raise ValueError(
            f"surrogate shapes {down_hat.shape}/{up_hat.shape} do not match "
            f"layer shapes {layer.down.shape}/{layer.up.shape}")


def _generator_stack(down: np.ndarray, up: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All node generators at once, shape (d, r, d+1) per branch."""
    pos = np.maximum(up, 0.0)[:, :, None] * down[None, :, :]
    neg = np.maximum(-up, 0.0)[:, :, None] * down[None, :, :]
    return pos, neg


def objective_value(layer: AdapterLayer, down_hat: np.ndarray, up_hat: np.ndarray,
                    l1_pos: float, l1_neg: float) -> float:
    """Full objective summed over all node slices and both branches."""
    down_hat = np.asarray(down_hat, dtype=np.float64)
    up_hat = np.asarray(up_hat, dtype=np.float64)
    _check_shapes(layer, down_hat, up_hat)
    ref_pos, ref_neg = _generator_stack(layer.down, layer.up)
    hat_pos, hat_neg = _generator_stack(down_hat, up_hat)
    value = 0.5 * np.sum((hat_pos - ref_pos) ** 2) + 0.5 * np.sum((hat_neg - ref_neg) ** 2)
    value += l1_pos * np.sum(np.abs(hat_pos)) + l1_neg * np.sum(np.abs(hat_neg))
    return float(value)


def branch_loss(layer: AdapterLayer, down_hat: np.ndarray, up_hat: np.ndarray,
                node: int, branch: str, l1: float) -> float:
    """One node's single-branch loss: 0.5 distance squared plus L1 penalty."""
    down_hat = np.asarray(down_hat, dtype=np.float64)
    up_hat = np.asarray(up_hat, dtype=np.float64)
    _check_shapes(layer, down_hat, up_hat)
    part_hat, part_ref = _branch_parts(layer, up_hat, node, branch)
    g_hat = part_hat[:, None] * down_hat
    g_ref = part_ref[:, None] * layer.down
    return float(0.5 * np.sum((g_hat - g_ref) ** 2) + l1 * np.sum(np.abs(g_hat)))


def _branch_parts(layer: AdapterLayer, up_hat: np.ndarray, node: int,
                  branch: str) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= node < layer.width:
        raise ValueError(f"node {node} out of range for width {layer.width}")
    if branch == POS:
        return np.maximum(up_hat[node], 0.0), np.maximum(layer.up[node], 0.0)
    if branch == NEG:
        return np.maximum(-up_hat[node], 0.0), np.maximum(-layer.up[node], 0.0)
    raise ValueError(f"branch must be {POS!r} or {NEG!r}, got {branch!r}")


def subgradient(layer: AdapterLayer, down_hat: np.ndarray, up_hat: np.ndarray,
                node: int, branch: str, l1: float) -> tuple[np.ndarray, np.ndarray]:
    """Minimal-norm subgradient of branch_loss w.r.t. the surrogate matrices.

    The rectifier inside the signed part contributes an indicator (1 only
    where the row weight is strictly on the branch's side of zero) and the L1
    term contributes sign(), with sign(0) = 0.
    """
    down_hat = np.asarray(down_hat, dtype=np.float64)
    up_hat = np.asarray(up_hat, dtype=np.float64)
    _check_shapes(layer, down_hat, up_hat)
    part_hat, part_ref = _branch_parts(layer, up_hat, node, branch)
    g_hat = part_hat[:, None] * down_hat
    diff = g_hat - part_ref[:, None] * layer.down
    pull = diff + l1 * np.sign(g_hat)
    d_down = part_hat[:, None] * pull
    row = up_hat[node]
    active = row > 0.0 if branch == POS else row < 0.0
    chain = 1.0 if branch == POS else -1.0
    d_row = chain * np.where(active, np.sum(pull * down_hat, axis=1), 0.0)
    d_up = np.zeros_like(up_hat)
    d_up[node] = d_row
    return d_down, d_up


def run(layer: AdapterLayer, config: OptimConfig) -> OptimResult:
    """Alternating per-node subgradient descent, recording the combined loss.

    Starts from the layer's own matrices (zero distance, only the sparsity
    pressure moves anything).  Iteration t steps every node once on the
    positive branch when t is even, on the negative branch when t is odd.
    """
    down_hat = layer.down.copy()
    up_hat = layer.up.copy()
    trace: list[tuple[int, float]] = [
        (0, objective_value(layer, down_hat, up_hat, config.l1_pos, config.l1_neg))]
    converged_at: int | None = None
    for t in range(1, config.iterations + 1):
        branch = POS if t % 2 == 0 else NEG
        l1 = config.l1_pos if branch == POS else config.l1_neg
        for node in range(layer.width):
            d_down, d_up = subgradient(layer, down_hat, up_hat, node, branch, l1)
            down_hat -= config.lr * d_down
            up_hat[node] -= config.lr * d_up[node]
        loss = objective_value(layer, down_hat, up_hat, config.l1_pos, config.l1_neg)
        trace.append((t, loss))
        if t >= config.window:
            prev = trace[t - config.window][1]
            if abs(loss - prev) / max(abs(prev), 1e-300) < config.tol:
                converged_at = t
                break
    down_hat.flags.writeable = False
    up_hat.flags.writeable = False
    return OptimResult(down_hat, up_hat, tuple(trace), converged_at)
