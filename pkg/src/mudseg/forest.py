"""Per-pixel feature extraction and a from-scratch random-forest classifier.

The feature stack is 18 planes per image: raw intensity, Gaussian blurs at
sigma 1/2/4/8, Sobel gradient magnitude of the raw and of each blurred plane,
and both Hessian eigenvalues at each sigma. Trees are grown fully (no depth
limit, minimum leaf size 1) on bootstrap resamples, choosing at each node the
best Gini split among ``mtry`` randomly drawn features, with candidate
thresholds at midpoints of consecutive distinct sorted values.

Reproducibility contract: all randomness comes from xoshiro256** generators
(see mudseg.prng). Tree t is seeded with ``seed XOR t``; bootstrap indices
are ``next_u64() mod N`` over a canonically sorted copy of the training rows
(sorted by label, then provenance), so retraining with one seed is
byte-identical regardless of row ingestion order or platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .morphology import gaussian, hessian_eigen, sobel_magnitude
from .prng import Xoshiro256StarStar, fnv1a64
from .raster import ClassMask, GrayImage

FEATURE_SIGMAS = (1, 2, 4, 8)
N_CLASSES = 3
FOREST_FILE_VERSION = 1


class ForestError(ValueError):
    pass


def feature_names() -> tuple:
    names = ["intensity"]
    names += [f"gauss_{s}" for s in FEATURE_SIGMAS]
    names += ["sobel_raw"] + [f"sobel_gauss_{s}" for s in FEATURE_SIGMAS]
    for s in FEATURE_SIGMAS:
        names += [f"hess_max_{s}", f"hess_min_{s}"]
    return tuple(names)


@dataclass(frozen=True, eq=False)
class FeatureStack:
    """(channels, height, width) float planes with their channel names."""

    planes: np.ndarray
    names: tuple

    @property
    def n_channels(self) -> int:
        return self.planes.shape[0]

    def matrix(self) -> np.ndarray:
        """Pixels as rows: (h*w, channels)."""
        c = self.planes.shape[0]
        return self.planes.reshape(c, -1).T


def extract_features(img: GrayImage) -> FeatureStack:
    """Fixed 18-channel feature stack; channel order is part of the contract."""
    raw = img.samples.astype(np.float64)
    planes = [raw]
    blurred = [gaussian(raw, s) for s in FEATURE_SIGMAS]
    planes += blurred
    planes.append(sobel_magnitude(raw))
    planes += [sobel_magnitude(b) for b in blurred]
    for s in FEATURE_SIGMAS:
        lmax, lmin = hessian_eigen(raw, s)
        planes += [lmax, lmin]
    return FeatureStack(np.stack(planes), feature_names())


@dataclass(frozen=True, eq=False)
class TrainingSet:
    x: np.ndarray  # (n_rows, n_features)
    y: np.ndarray  # (n_rows,) class codes
    provenance: list  # (source_id, pixel_index) per row
    names: tuple


def sample_training(pairs, per_class_per_image: int = 1000, seed: int = 0) -> TrainingSet:
    """Seeded per-image, per-class pixel sampling without replacement.

    ``pairs`` yields (GrayImage, ClassMask, source_id). Each image/class pool
    gets its own generator so the draw is independent of how many pixels the
    other classes have.
    """
    xs, ys, prov = [], [], []
    seen = set()
    for i, (img, mask, source_id) in enumerate(pairs):
        if img.samples.shape != mask.labels.shape:
            raise ForestError(f"source {source_id}: image and mask dimensions differ")
        stack = extract_features(img)
        matrix = stack.matrix()
        flat = mask.labels.ravel()
        for c in range(N_CLASSES):
            candidates = np.flatnonzero(flat == c)
            if candidates.size == 0:
                continue
            seen.add(c)
            k = min(candidates.size, per_class_per_image)
            if k < candidates.size:
                rng = Xoshiro256StarStar(seed ^ fnv1a64(f"sample|{i}|{c}".encode()))
                picked = candidates[rng.sample_indices(candidates.size, k)]
            else:
                picked = candidates
            xs.append(matrix[picked])
            ys.append(np.full(k, c, dtype=np.uint8))
            prov += [(source_id, int(p)) for p in picked]
    missing = [c for c in range(N_CLASSES) if c not in seen]
    if missing:
        raise ForestError(f"class(es) {missing} absent from every provided mask")
    return TrainingSet(np.concatenate(xs), np.concatenate(ys), prov, feature_names())


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 3), populated at leaves

    def leaf_classes(self) -> np.ndarray:
        return np.argmax(self.counts, axis=1).astype(np.uint8)


@dataclass(frozen=True)
class Forest:
    trees: list
    n_trees: int
    mtry: int
    seed: int
    channels: tuple


def _best_split(x, y, rows, feature_ids):
    """Best (feature, threshold) by Gini over midpoint candidates.

    Returns (score, feature, threshold, left_rows, right_rows) or None. The
    score is sum(left_count_c^2)/n_left + (right analogue); maximising it
    minimises the weighted Gini impurity.
    """
    labels = y[rows]
    best = None
    for f in feature_ids:
        vals = x[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        distinct = sv[:-1] < sv[1:]
        if not distinct.any():
            continue
        onehot = np.zeros((rows.size, N_CLASSES), dtype=np.float64)
        onehot[np.arange(rows.size), labels[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        nl = np.arange(1, rows.size, dtype=np.float64)
        left_sq = (cum[:-1] ** 2).sum(axis=1)
        right_sq = ((total - cum[:-1]) ** 2).sum(axis=1)
        score = np.where(distinct, left_sq / nl + right_sq / (rows.size - nl), -np.inf)
        k = int(np.argmax(score))
        if best is None or score[k] > best[0]:
            thr = (sv[k] + sv[k + 1]) / 2.0
            best = (float(score[k]), f, thr, rows[order[: k + 1]], rows[order[k + 1 :]])
    return best


def _grow_tree(x, y, rng, mtry):
    n = y.size
    n_features = x.shape[1]
    boot = np.array([rng.below(n) for _ in range(n)], dtype=np.intp)

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append([0, 0, 0])
        return len(feature) - 1

    stack = [(new_node(), boot)]
    while stack:
        node, rows = stack.pop()
        hist = np.bincount(y[rows], minlength=N_CLASSES).astype(np.int64)
        present = np.count_nonzero(hist)
        if present <= 1:
            counts[node] = hist.tolist()
            continue
        drawn = rng.sample_indices(n_features, mtry)
        split = _best_split(x, y, rows, drawn)
        # A split helps only if it beats the parent's own score (equal score
        # means zero impurity decrease).
        parent_score = float((hist.astype(np.float64) ** 2).sum() / rows.size)
        if split is None or split[0] <= parent_score + 1e-9:
            counts[node] = hist.tolist()
            continue
        _, f, thr, rows_l, rows_r = split
        feature[node] = int(f)
        threshold[node] = float(thr)
        # Children are allocated left-then-right so node ids are stable.
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], rows_r))
        stack.append((left[node], rows_l))

    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        counts=np.asarray(counts, dtype=np.int64),
    )


def canonical_order(ts: TrainingSet) -> np.ndarray:
    """Row permutation sorting by (label, provenance); bootstrap indexes this."""
    return np.asarray(
        sorted(range(ts.y.size), key=lambda i: (int(ts.y[i]), ts.provenance[i])),
        dtype=np.intp,
    )


def train_forest(ts: TrainingSet, n_trees: int = 200, mtry: int = 2, seed: int = 0) -> Forest:
    """Grow the ensemble; deterministic for a given seed."""
    if ts.y.size == 0:
        raise ForestError("empty training set")
    if n_trees < 1:
        raise ForestError(f"n_trees must be >= 1, got {n_trees}")
    if not 1 <= mtry <= ts.x.shape[1]:
        raise ForestError(f"mtry must be in [1, {ts.x.shape[1]}], got {mtry}")
    order = canonical_order(ts)
    x = np.ascontiguousarray(ts.x[order])
    y = np.ascontiguousarray(ts.y[order])
    trees = []
    for t in range(n_trees):
        rng = Xoshiro256StarStar(seed ^ t)
        trees.append(_grow_tree(x, y, rng, mtry))
    return Forest(trees=trees, n_trees=n_trees, mtry=mtry, seed=seed, channels=ts.names)


def _route(tree: Tree, matrix: np.ndarray) -> np.ndarray:
    """Leaf node index for every row of the feature matrix."""
    node = np.zeros(matrix.shape[0], dtype=np.int32)
    while True:
        feat = tree.feature[node]
        active = np.flatnonzero(feat >= 0)
        if active.size == 0:
            return node
        an = node[active]
        vals = matrix[active, tree.feature[an]]
        node[active] = np.where(vals <= tree.threshold[an], tree.left[an], tree.right[an])


def predict(forest: Forest, stack: FeatureStack) -> ClassMask:
    """Majority vote over trees; each tree votes its leaf histogram argmax.

    Ties at both levels resolve to the lowest class code.
    """
    if tuple(stack.names) != tuple(forest.channels):
        raise ForestError(
            f"feature channels {list(stack.names)} do not match the forest's {list(forest.channels)}"
        )
    matrix = stack.matrix()
    votes = np.zeros((matrix.shape[0], N_CLASSES), dtype=np.int32)
    for tree in forest.trees:
        leaf = _route(tree, matrix)
        cls = tree.leaf_classes()[leaf]
        for c in range(N_CLASSES):
            votes[:, c] += cls == c
    h, w = stack.planes.shape[1:]
    return ClassMask(np.argmax(votes, axis=1).astype(np.uint8).reshape(h, w))


def predict_image(forest: Forest, img: GrayImage) -> ClassMask:
    return predict(forest, extract_features(img))


def oob_error(ts: TrainingSet, n_trees: int = 200, mtry: int = 2, seed: int = 0):
    """Train and estimate out-of-bag error in one pass.

    Returns (forest, error) where the error is the misclassification rate of
    rows voted on only by trees whose bootstrap missed them; None if every
    row was in every bootstrap.
    """
    forest = train_forest(ts, n_trees, mtry, seed)
    order = canonical_order(ts)
    x = np.ascontiguousarray(ts.x[order])
    y = np.ascontiguousarray(ts.y[order])
    n = y.size
    votes = np.zeros((n, N_CLASSES), dtype=np.int32)
    for t, tree in enumerate(forest.trees):
        rng = Xoshiro256StarStar(seed ^ t)
        boot = np.array([rng.below(n) for _ in range(n)], dtype=np.intp)
        outside = np.setdiff1d(np.arange(n), boot)
        if outside.size == 0:
            continue
        leaf = _route(tree, x[outside])
        cls = tree.leaf_classes()[leaf]
        votes[outside, :] += np.eye(N_CLASSES, dtype=np.int32)[cls]
    covered = votes.sum(axis=1) > 0
    if not covered.any():
        return forest, None
    pred = np.argmax(votes[covered], axis=1)
    return forest, float(np.mean(pred != y[covered]))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _tree_to_nodes(tree: Tree) -> list:
    nodes = []
    for i in range(tree.feature.size):
        if tree.feature[i] < 0:
            nodes.append({"counts": [int(c) for c in tree.counts[i]]})
        else:
            nodes.append(
                {
                    "feature": int(tree.feature[i]),
                    "threshold": float(tree.threshold[i]),
                    "left": int(tree.left[i]),
                    "right": int(tree.right[i]),
                }
            )
    return nodes


def _tree_from_nodes(nodes: list) -> Tree:
    n = len(nodes)
    feature = np.full(n, -1, dtype=np.int32)
    threshold = np.zeros(n, dtype=np.float64)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    counts = np.zeros((n, N_CLASSES), dtype=np.int64)
    for i, nd in enumerate(nodes):
        if "counts" in nd:
            c = nd["counts"]
            if len(c) != N_CLASSES or any(v < 0 for v in c) or sum(c) == 0:
                raise ForestError(f"malformed leaf node {i}: {nd}")
            counts[i] = c
        else:
            try:
                feature[i] = nd["feature"]
                threshold[i] = nd["threshold"]
                left[i] = nd["left"]
                right[i] = nd["right"]
            except KeyError as e:
                raise ForestError(f"malformed internal node {i}: missing {e}") from None
            if not (0 <= left[i] < n and 0 <= right[i] < n):
                raise ForestError(f"malformed internal node {i}: child index out of range")
    return Tree(feature, threshold, left, right, counts)


def save_forest(forest: Forest, path) -> None:
    payload = {
        "version": FOREST_FILE_VERSION,
        "n_trees": forest.n_trees,
        "mtry": forest.mtry,
        "seed": forest.seed,
        "channels": list(forest.channels),
        "trees": [{"nodes": _tree_to_nodes(t)} for t in forest.trees],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", "utf-8")


def load_forest(path) -> Forest:
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as e:
        raise ForestError(f"{path}: not valid JSON ({e})") from None
    version = raw.get("version")
    if version != FOREST_FILE_VERSION:
        raise ForestError(f"{path}: unsupported forest file version {version!r}")
    try:
        return Forest(
            trees=[_tree_from_nodes(t["nodes"]) for t in raw["trees"]],
            n_trees=int(raw["n_trees"]),
            mtry=int(raw["mtry"]),
            seed=int(raw["seed"]),
            channels=tuple(raw["channels"]),
        )
    except (KeyError, TypeError) as e:
        raise ForestError(f"{path}: malformed forest file ({e})") from None
