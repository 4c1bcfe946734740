"""Regularized Newton boosting on the logistic loss, written from scratch.

Each round fits one binary regression tree to the first- and second-order
statistics of the loss (g = pred - label, h = pred * (1 - pred)). Splits are
scored by the regularized gain

    0.5 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma

over candidate thresholds proposed by a weighted quantile sketch of the
feature values (hessian-weighted). Leaf values are -G/(H+lambda); the model
prediction is logistic(base_margin + learning_rate * sum of tree outputs).

Setting sketch_eps <= 0 disables the sketch and considers every midpoint
between consecutive distinct feature values (exact greedy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import TrainingSample


class DegenerateData(Exception):
    """Raised when training data cannot define a binary problem."""


class DimensionMismatch(Exception):
    """Raised when a feature vector does not match the trained width."""


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 410
    max_depth: int = 5
    learning_rate: float = 0.05
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    sketch_eps: float = 0.05


@dataclass
class DecisionTree:
    """Flat-array binary tree in preorder; feature -1 marks a leaf.

    Leaves carry left = right = own index and threshold = +inf so that batch
    traversal can run a fixed number of branchless rounds.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    depth: int

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_one(self, x: np.ndarray) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] < self.threshold[i] else self.right[i]
        return float(self.weight[i])

    def predict(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        idx = np.zeros(n, dtype=np.int64)
        feat = np.maximum(self.feature, 0)
        rows = np.arange(n)
        for _ in range(self.depth):
            f = feat[idx]
            go_left = X[rows, f] < self.threshold[idx]
            idx = np.where(go_left, self.left[idx], self.right[idx])
        return self.weight[idx]

    def structure(self) -> list[tuple]:
        """Preorder (kind, feature, threshold | weight) rows for comparisons."""
        out = []
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                out.append(("split", int(self.feature[i]), float(self.threshold[i]),
                            int(self.left[i]), int(self.right[i])))
            else:
                out.append(("leaf", float(self.weight[i])))
        return out


@dataclass
class BoostedModel:
    n_features: int
    trees: list[DecisionTree] = field(default_factory=list)
    base_margin: float = 0.0
    learning_rate: float = 1.0
    train_loss: list[float] = field(default_factory=list)

    def margin(self, X: np.ndarray) -> np.ndarray:
        total = np.full(X.shape[0], self.base_margin, dtype=np.float64)
        for tree in self.trees:
            total += self.learning_rate * tree.predict(X)
        return total


def _sigmoid(z: np.ndarray | float):
    return 1.0 / (1.0 + np.exp(-z))


def classify(model: BoostedModel, f: Sequence[float]) -> float:
    """Matching score in (0, 1) for one feature vector."""
    x = np.asarray(f, dtype=np.float64)
    if x.ndim != 1 or x.size != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} features, got {x.shape}")
    margin = model.base_margin
    for tree in model.trees:
        margin += model.learning_rate * tree.predict_one(x)
    return float(_sigmoid(margin))


def classify_batch(model: BoostedModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected (n, {model.n_features}) features, got {X.shape}")
    return _sigmoid(model.margin(X))


def propose_splits(values, hessians, eps: float) -> list[float]:
    """Candidate thresholds from a hessian-weighted quantile sketch.

    Consecutive candidates bracket at most eps of the total hessian mass,
    except where a single repeated value alone carries more than that.
    Thresholds are midpoints between adjacent distinct values; eps <= 0
    yields every midpoint.
    """
    v = np.asarray(values, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    if v.size != h.size:
        raise ValueError("values and hessians must have equal length")
    if v.size == 0:
        return []
    order = np.argsort(v, kind="stable")
    sv, sh = v[order], h[order]
    uniq, starts = np.unique(sv, return_index=True)
    if uniq.size < 2:
        return []
    mass = np.add.reduceat(sh, starts)
    if eps <= 0:
        return [float(x) for x in (uniq[:-1] + uniq[1:]) / 2.0]
    cap = eps * float(mass.sum())
    out: list[float] = []
    acc = 0.0
    for i in range(uniq.size):
        m = float(mass[i])
        if i > 0 and acc > 0.0 and acc + m > cap:
            out.append(float((uniq[i - 1] + uniq[i]) / 2.0))
            acc = m
        else:
            acc += m
    return out


def _best_split(
    Xn: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: TrainConfig
) -> tuple[int, float, float] | None:
    """Highest-gain (feature, threshold, gain) at this node, or None.

    Features are scanned in ascending index and thresholds in ascending
    value with strict improvement, so ties resolve to the first candidate.
    """
    lam = cfg.reg_lambda
    best_gain = 0.0
    best: tuple[int, float, float] | None = None
    for j in range(Xn.shape[1]):
        col = Xn[:, j]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        cg = np.cumsum(g[order])
        ch = np.cumsum(h[order])
        G, H = float(cg[-1]), float(ch[-1])
        thresholds = propose_splits(sv, h[order], cfg.sketch_eps)
        if not thresholds:
            continue
        thr = np.asarray(thresholds)
        pos = np.searchsorted(sv, thr, side="left")
        GL, HL = cg[pos - 1], ch[pos - 1]
        GR, HR = G - GL, H - HL
        gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - G**2 / (H + lam)) - cfg.gamma
        gain = np.where(
            (HL >= cfg.min_child_weight) & (HR >= cfg.min_child_weight), gain, -np.inf
        )
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = float(gain[k])
            best = (j, float(thr[k]), best_gain)
    return best


def _build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: TrainConfig) -> DecisionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    weight: list[float] = []
    lam = cfg.reg_lambda

    def grow(rows: np.ndarray, depth: int) -> tuple[int, int]:
        nid = len(feature)
        feature.append(-1)
        threshold.append(math.inf)
        left.append(nid)
        right.append(nid)
        weight.append(0.0)

        split = None
        if depth < cfg.max_depth and rows.size >= 2:
            split = _best_split(X[rows], g[rows], h[rows], cfg)
        if split is None:
            cg = np.cumsum(g[rows])
            ch = np.cumsum(h[rows])
            weight[nid] = -float(cg[-1]) / (float(ch[-1]) + lam)
            return nid, 0
        j, thr, _ = split
        mask = X[rows, j] < thr
        lid, dl = grow(rows[mask], depth + 1)
        rid, dr = grow(rows[~mask], depth + 1)
        feature[nid] = j
        threshold[nid] = thr
        left[nid] = lid
        right[nid] = rid
        return nid, max(dl, dr) + 1

    _, depth = grow(np.arange(X.shape[0]), 0)
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        weight=np.asarray(weight, dtype=np.float64),
        depth=max(depth, 1),
    )


def _logistic_loss(margins: np.ndarray, y: np.ndarray) -> float:
    # -(1-y) log(1-p) - y log(p) written against margins for stability
    return float(np.mean(np.logaddexp(0.0, margins) - y * margins))


def train(samples: Sequence[TrainingSample], cfg: TrainConfig) -> BoostedModel:
    """Fit cfg.n_trees rounds of Newton boosting; records per-round training
    loss on the model for convergence checks."""
    if not samples:
        raise DegenerateData("no training samples")
    X = np.asarray([np.asarray(s.features, dtype=np.float64) for s in samples])
    y = np.asarray([float(s.label) for s in samples])
    if X.ndim != 2:
        raise DimensionMismatch("samples must share one feature length")
    if float(y.min()) == float(y.max()):
        raise DegenerateData("training labels are all identical")

    model = BoostedModel(
        n_features=X.shape[1],
        trees=[],
        base_margin=0.0,
        learning_rate=cfg.learning_rate,
    )
    margins = np.full(X.shape[0], model.base_margin, dtype=np.float64)
    for _ in range(cfg.n_trees):
        p = _sigmoid(margins)
        grad = p - y
        hess = p * (1.0 - p)
        tree = _build_tree(X, grad, hess, cfg)
        model.trees.append(tree)
        margins += cfg.learning_rate * tree.predict(X)
        model.train_loss.append(_logistic_loss(margins, y))
    return model


MODEL_HEADER = "sac-model v1"


def save_model(model: BoostedModel) -> str:
    """Portable text form: a header then one preorder node record per line."""
    lines = [
        f"{MODEL_HEADER} features={model.n_features} trees={len(model.trees)} "
        f"lr={model.learning_rate!r} base={model.base_margin!r}"
    ]
    for ti, tree in enumerate(model.trees):
        for ni in range(tree.n_nodes):
            if tree.feature[ni] >= 0:
                lines.append(
                    f"{ti},{ni},split,{int(tree.feature[ni])},{float(tree.threshold[ni])!r},"
                    f"{int(tree.left[ni])},{int(tree.right[ni])},0"
                )
            else:
                lines.append(f"{ti},{ni},leaf,-1,0,-1,-1,{float(tree.weight[ni])!r}")
    return "\n".join(lines) + "\n"


def load_model(text: str) -> BoostedModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(MODEL_HEADER):
        raise ValueError("not a recognized model file")
    header = dict(part.split("=", 1) for part in lines[0].split()[2:])
    n_features = int(header["features"])
    n_trees = int(header["trees"])
    lr = float(header["lr"])
    base = float(header["base"])

    per_tree: dict[int, list[tuple]] = {i: [] for i in range(n_trees)}
    for ln in lines[1:]:
        ti, ni, kind, feat, thr, lo, hi, w = ln.split(",")
        per_tree[int(ti)].append((int(ni), kind, int(feat), float(thr), int(lo), int(hi), float(w)))

    trees = []
    for ti in range(n_trees):
        rows = sorted(per_tree[ti])
        n = len(rows)
        feature = np.full(n, -1, dtype=np.int64)
        threshold = np.full(n, math.inf, dtype=np.float64)
        left = np.arange(n, dtype=np.int64)
        right = np.arange(n, dtype=np.int64)
        weight = np.zeros(n, dtype=np.float64)
        for ni, kind, feat, thr, lo, hi, w in rows:
            if kind == "split":
                feature[ni] = feat
                threshold[ni] = thr
                left[ni] = lo
                right[ni] = hi
            else:
                weight[ni] = w
        trees.append(
            DecisionTree(feature, threshold, left, right, weight, depth=_tree_depth(feature, left, right))
        )
    return BoostedModel(n_features=n_features, trees=trees, base_margin=base, learning_rate=lr)


def _tree_depth(feature: np.ndarray, left: np.ndarray, right: np.ndarray) -> int:
    def depth_of(i: int) -> int:
        if feature[i] < 0:
            return 0
        return 1 + max(depth_of(int(left[i])), depth_of(int(right[i])))

    return max(depth_of(0), 1)
