"""Pairwise losses with analytic gradients, plus desk-scale trainers.

Two losses are implemented in closed form:

  centered Bradley-Terry:  -log sigmoid(r_w - r_l) + lam * (r_w + r_l)^2
  preference (DPO-style):  -log sigmoid(beta * (logratio_w - logratio_l))

The centering term pins the score scale: plain Bradley-Terry only sees the
difference r_w - r_l, so scores can drift by any shared offset; penalizing
the squared sum anchors them around zero without touching the ordering.

Gradients come with a central finite-difference checker, and both losses
come with small full-batch gradient-descent trainers over a linear scorer.
All numerics are stable for large |x|: -log sigmoid(x) is computed as
logaddexp(0, -x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GradientCheckError(RuntimeError):
    """The loss surface returned a non-finite value during checking."""


def neg_log_sigmoid(x: float) -> float:
    """-log(sigmoid(x)), overflow-safe for any x."""
    return float(np.logaddexp(0.0, -x))


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def center_bt_loss(r_w: float, r_l: float, lam: float) -> float:
    return neg_log_sigmoid(r_w - r_l) + lam * (r_w + r_l) ** 2


def center_bt_grad(r_w: float, r_l: float, lam: float) -> tuple[float, float]:
    """(d/dr_w, d/dr_l) of center_bt_loss."""
    s = sigmoid(-(r_w - r_l))
    centering = 2.0 * lam * (r_w + r_l)
    return (-s + centering, s + centering)


def dpo_loss(logratio_w: float, logratio_l: float, beta: float) -> float:
    return neg_log_sigmoid(beta * (logratio_w - logratio_l))


def dpo_grad(logratio_w: float, logratio_l: float, beta: float) -> tuple[float, float]:
    """(d/dlogratio_w, d/dlogratio_l) of dpo_loss."""
    s = sigmoid(-beta * (logratio_w - logratio_l))
    return (-beta * s, beta * s)


def finite_diff_check(f, grad, point, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per coordinate is |g_fd - g_an| / max(1, |g_an|). Raises
    GradientCheckError if the loss comes back non-finite anywhere.
    """
    x = np.asarray(point, dtype=float)
    g_an = np.asarray(grad(x), dtype=float)
    g_fd = np.empty_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = step
        f_plus = float(f(x + bump))
        f_minus = float(f(x - bump))
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise GradientCheckError(f"loss is non-finite near coordinate {i}")
        g_fd[i] = (f_plus - f_minus) / (2.0 * step)
    rel = np.abs(g_fd - g_an) / np.maximum(1.0, np.abs(g_an))
    return float(rel.max())


@dataclass
class ToyScorer:
    """Linear scorer over fixed per-item feature vectors.

    ``weights`` may start as None; trainers then draw a small random init
    (seeded). Features never change once the scorer exists.
    """

    features: dict[str, np.ndarray]
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not self.features:
            raise ValueError("need at least one item")
        dims = {np.asarray(v).shape for v in self.features.values()}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ValueError("all feature vectors must be 1-D with one shared length")
        self.features = {k: np.asarray(v, dtype=float) for k, v in self.features.items()}
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != next(iter(dims)):
                raise ValueError("weights must match feature dimension")

    @property
    def dim(self) -> int:
        return next(iter(self.features.values())).size

    def score(self, item_id: str) -> float:
        if self.weights is None:
            raise ValueError("scorer has no weights yet")
        return float(self.features[item_id] @ self.weights)

    def score_matrix(self, item_ids) -> np.ndarray:
        return np.stack([self.features[i] for i in item_ids])


def _init_weights(scorer: ToyScorer, seed: int) -> np.ndarray:
    if scorer.weights is not None:
        return scorer.weights.copy()
    return np.random.default_rng(seed).normal(0.0, 0.1, scorer.dim)


def train_toy_rm(pairs, scorer: ToyScorer, lam: float = 0.1, lr: float = 0.3,
                 steps: int = 500, seed: int = 0) -> tuple[ToyScorer, list[dict]]:
    """Full-batch gradient descent on the centered Bradley-Terry loss.

    ``pairs`` is a list of (chosen_id, rejected_id). History rows record the
    state before each update plus one final row, so history[-1] describes
    the returned scorer. With lr=0 the weights never move.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one training pair")
    w = _init_weights(scorer, seed)
    xw = scorer.score_matrix([c for c, _ in pairs])
    xl = scorer.score_matrix([r for _, r in pairs])
    history = []
    for step in range(steps + 1):
        r_w = xw @ w
        r_l = xl @ w
        delta = r_w - r_l
        total = r_w + r_l
        loss = float(np.mean(np.logaddexp(0.0, -delta) + lam * total**2))
        history.append({
            "step": step,
            "loss": loss,
            "pairwise_accuracy": float(np.mean(delta > 0)),
            "mean_score_sum": float(np.mean(total)),
        })
        if step == steps:
            break
        sig = 1.0 / (1.0 + np.exp(np.clip(delta, -500, 500)))  # sigmoid(-delta)
        grad = (-sig[:, None] * (xw - xl) + (2.0 * lam * total)[:, None] * (xw + xl)).mean(axis=0)
        w = w - lr * grad
    return ToyScorer(features=scorer.features, weights=w), history


def train_toy_dpo(pairs, scorer: ToyScorer, ref: ToyScorer, beta: float = 0.1,
                  lr: float = 0.5, steps: int = 500, seed: int = 0) -> tuple[ToyScorer, list[dict]]:
    """Full-batch gradient descent on the preference loss.

    ``scorer`` holds the trainable policy logits by item, ``ref`` the frozen
    reference. A scorer with weights equal to the reference starts at loss
    log(2) exactly (every margin is zero).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one training pair")
    if ref.weights is None:
        raise ValueError("reference scorer must have weights")
    w = _init_weights(scorer, seed)
    xw = scorer.score_matrix([c for c, _ in pairs])
    xl = scorer.score_matrix([r for _, r in pairs])
    diff = xw - xl
    ref_margin = diff @ ref.weights
    history = []
    for step in range(steps + 1):
        margin = diff @ w - ref_margin
        loss = float(np.mean(np.logaddexp(0.0, -beta * margin)))
        history.append({
            "step": step,
            "loss": loss,
            "preference_rate": float(np.mean(margin > 0)),
        })
        if step == steps:
            break
        sig = 1.0 / (1.0 + np.exp(np.clip(beta * margin, -500, 500)))  # sigmoid(-beta*margin)
        grad = (-beta * sig[:, None] * diff).mean(axis=0)
        w = w - lr * grad
    return ToyScorer(features=scorer.features, weights=w), history


def make_separable_pairs(n_pairs: int, dim: int = 8, margin: float = 1.0,
                         offset: float = 2.0, flip_fraction: float = 0.0,
                         seed: int = 0) -> tuple[dict[str, np.ndarray], list, list]:
    """Synthetic preference pairs that a linear scorer can fully separate.

    Each pair shares a base point whose only systematic component sits in
    coordinate 1 (mean ``offset``); the chosen/rejected displacement lives
    in coordinate 0 (size ``margin``) plus small noise in coordinates 2+.
    Consequences worth knowing:

    - pair differences have zero coordinate-1 component, so the ranking
      loss alone never moves that weight; only the centering term does;
    - score sums are dominated by coordinate 1 times ``offset``, so an
      uncentered model keeps whatever offset its init gives it.

    ``flip_fraction`` swaps that share of pairs (label noise). Returns
    (features, pairs, clean_pairs) where clean_pairs keeps the true
    orientation.
    """
    if dim < 2:
        raise ValueError("need at least two dimensions")
    if not 0.0 <= flip_fraction <= 1.0:
        raise ValueError("flip_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    features: dict[str, np.ndarray] = {}
    clean_pairs = []
    for i in range(n_pairs):
        base = np.zeros(dim)
        base[1] = offset + rng.normal(0.0, 0.5)
        disp = np.zeros(dim)
        disp[0] = margin
        if dim > 2:
            disp[2:] = rng.normal(0.0, 0.3, dim - 2)
        chosen_id, rejected_id = f"w{i}", f"l{i}"
        features[chosen_id] = base + disp
        features[rejected_id] = base - disp
        clean_pairs.append((chosen_id, rejected_id))
    pairs = [tuple(p) for p in clean_pairs]
    if flip_fraction > 0:
        n_flip = int(round(flip_fraction * n_pairs))
        flip_idx = rng.choice(n_pairs, size=n_flip, replace=False)
        for idx in flip_idx:
            c, r = pairs[idx]
            pairs[idx] = (r, c)
    return features, pairs, clean_pairs
