"""The frequency forest classifier.

One metric tree per named frequency feature. Trees are built by
incremental insertion: an item descends through pivot/threshold split
nodes to a leaf, and a leaf splits once it is large enough and the
binned distribution of distances to a randomly drawn pivot has low
enough Shannon entropy (low entropy means the distances clump, so a
distance threshold separates the clumps). Queries are defeatist: one
root-to-leaf descent with no backtracking, then exact nearest neighbors
within the reached leaf.

A tree only votes when its top neighbors are dominated by one label
(at least three of the top five share it); the forest prediction is the
plurality over the trees that voted.

Training mutates one tree at a time; distinct trees may be trained
concurrently. A trained forest is immutable and safe for any number of
concurrent readers.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DataError, ParseError

DEFAULT_ENTROPY_THRESHOLD = 1.79


@dataclass(frozen=True)
class ForestParams:
    """Knobs for tree construction and retrieval.

    ``entropy_threshold`` is in bits over ``histogram_bins`` equal-width
    bins of a node's pivot-distance range; ``capacity`` is the smallest
    leaf eligible for splitting and ``max_leaf`` forces a split even
    when the entropy gate says no.
    """

    k: int = 5
    entropy_threshold: float = DEFAULT_ENTROPY_THRESHOLD
    capacity: int = 32
    max_leaf: int = 256
    histogram_bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.capacity < 2:
            raise ValueError(f"capacity must be >= 2, got {self.capacity}")
        if self.max_leaf < self.capacity:
            raise ValueError(
                f"max_leaf ({self.max_leaf}) must be >= capacity ({self.capacity})")
        if self.histogram_bins < 2:
            raise ValueError(f"histogram_bins must be >= 2, got {self.histogram_bins}")


@dataclass
class Sample:
    """A labeled clip: named frequency-feature vectors of equal length."""

    clip_id: str
    label: str
    features: dict
    actor: Optional[str] = None
    scenario: Optional[str] = None


class Neighbor(NamedTuple):
    clip_id: str
    label: str
    distance: float


def entropy_bits(distances, bins: int = 10) -> float:
    """Shannon entropy (bits) of distances histogrammed into ``bins``
    equal-width bins over their own [min, max] range.

    All-equal distances occupy a single bin and give 0; the maximum is
    log2(bins).
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("entropy_bits needs a non-empty 1-D distance list")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("distances must be finite and nonnegative")
    lo = float(d.min())
    hi = float(d.max())
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(d, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / d.size
    return float(-(p * np.log2(p)).sum())


def tree_vote(neighbors, k: int) -> Optional[str]:
    """A single tree's vote over its retrieved neighbors, or None to
    abstain.

    With a full list (m == k == 5) this is the dominance rule: vote the
    label held by at least three of the top five. Short lists from small
    leaves extend the rule proportionally: strict majority (> m/2) for
    m >= 3, abstain below that.
    """
    m = len(neighbors)
    if m > k:
        raise ValueError(f"got {m} neighbors for k={k}")
    if m < 3:
        return None
    need = m // 2 + 1
    counts = Counter(label for label, _ in neighbors)
    dominant = [label for label, c in counts.items() if c >= need]
    if len(dominant) != 1:
        return None
    return dominant[0]


class _Item:
    __slots__ = ("clip_id", "label", "vector", "seq")

    def __init__(self, clip_id, label, vector, seq):
        self.clip_id = clip_id
        self.label = label
        self.vector = vector
        self.seq = seq


class _Leaf:
    __slots__ = ("items",)

    def __init__(self, items=None):
        self.items = items if items is not None else []


class _Split:
    __slots__ = ("pivot", "tau", "left", "right")

    def __init__(self, pivot, tau, left, right):
        self.pivot = pivot
        self.tau = tau
        self.left = left
        self.right = right


def _dist(a: np.ndarray, b: np.ndarray) -> float:
    # Single shared distance routine: split thresholds, routing and leaf
    # scans must agree bit-for-bit or boundary items could change sides.
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


def _check_token(value, what: str) -> str:
    if not isinstance(value, str) or not value or any(ch.isspace() for ch in value):
        raise ValueError(f"{what} must be a non-empty string without whitespace: {value!r}")
    return value


class FrequencyTree:
    """Incrementally built pivot-split metric tree for one feature."""

    def __init__(self, dim: int, params: ForestParams, rng: random.Random):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.params = params
        self._rng = rng
        self.root = _Leaf()
        self.count = 0
        self._next_seq = 0

    def _check_vector(self, vector) -> np.ndarray:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ValueError(f"feature vector has shape {vec.shape}, tree expects ({self.dim},)")
        if not np.all(np.isfinite(vec)):
            raise DataError("feature vector contains non-finite values")
        return vec

    def insert(self, vector, label: str, clip_id: str) -> None:
        vec = self._check_vector(vector)
        item = _Item(_check_token(clip_id, "clip_id"), _check_token(label, "label"),
                     vec, self._next_seq)
        self._next_seq += 1
        parent = None
        went_left = False
        node = self.root
        while isinstance(node, _Split):
            parent = node
            went_left = _dist(vec, node.pivot) <= node.tau
            node = node.left if went_left else node.right
        node.items.append(item)
        self.count += 1
        split = self._maybe_split(node)
        if split is not None:
            if parent is None:
                self.root = split
            elif went_left:
                parent.left = split
            else:
                parent.right = split

    def _maybe_split(self, leaf: _Leaf) -> Optional[_Split]:
        size = len(leaf.items)
        if size < self.params.capacity:
            return None
        pivot = leaf.items[self._rng.randrange(size)].vector
        dists = [_dist(it.vector, pivot) for it in leaf.items]
        if size < self.params.max_leaf:
            if entropy_bits(dists, self.params.histogram_bins) > self.params.entropy_threshold:
                return None
        tau = sorted(dists)[(size - 1) // 2]  # lower median balances children
        for attempt in range(2):
            left = [it for it, d in zip(leaf.items, dists) if d <= tau]
            right = [it for it, d in zip(leaf.items, dists) if d > tau]
            if left and right:
                return _Split(pivot, tau, _Leaf(left), _Leaf(right))
            tau = (min(dists) + max(dists)) / 2.0
        return None  # all pivot distances equal: nothing separates them

    def query(self, vector, k: int):
        """The ``min(k, leaf size)`` exact nearest items of the leaf a
        defeatist descent reaches, as Neighbor tuples sorted by distance
        (ties by insertion order)."""
        if self.count == 0:
            raise DataError("query against an empty tree")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        vec = self._check_vector(vector)
        node = self.root
        while isinstance(node, _Split):
            node = node.left if _dist(vec, node.pivot) <= node.tau else node.right
        scored = sorted(
            ((_dist(it.vector, vec), it.seq, it) for it in node.items),
            key=lambda t: (t[0], t[1]))
        return [Neighbor(it.clip_id, it.label, d) for d, _, it in scored[:k]]


@dataclass
class PredictionDetail:
    """Per-tree votes behind a forest prediction."""

    label: str
    votes: dict                 # feature name -> label or None (abstain)
    counts: dict                # label -> supporting tree count
    fallback: bool              # True when every tree abstained
    mean_distances: dict = field(default_factory=dict)  # feature name -> mean neighbor distance


class Forest:
    """One FrequencyTree per feature name plus the shared parameters."""

    def __init__(self, params: ForestParams, dim: int, feature_names, labels, trees):
        self.params = params
        self.dim = dim
        self.feature_names = tuple(feature_names)
        self.labels = tuple(labels)
        self.trees = trees

    def predict(self, features) -> tuple[str, PredictionDetail]:
        """Classify one sample's feature map.

        Every tree retrieves its top-k neighbors and votes (or
        abstains); the plurality label over voting trees wins, ties
        going to the label whose supporting trees saw the closest
        neighbors on average. When every tree abstains, the plurality of
        the trees' single nearest-neighbor labels decides instead.
        """
        missing = [n for n in self.feature_names if n not in features]
        if missing:
            raise ValueError(f"feature map is missing {len(missing)} names, e.g. {missing[0]!r}")
        votes: dict = {}
        mean_dist: dict = {}
        nearest: dict = {}
        for name in self.feature_names:
            neigh = self.trees[name].query(features[name], self.params.k)
            votes[name] = tree_vote([(nb.label, nb.distance) for nb in neigh], self.params.k)
            mean_dist[name] = sum(nb.distance for nb in neigh) / len(neigh)
            nearest[name] = (neigh[0].label, neigh[0].distance)

        counts = Counter(v for v in votes.values() if v is not None)
        fallback = not counts
        if not fallback:
            best = max(counts.values())
            tied = sorted(lab for lab, c in counts.items() if c == best)
            if len(tied) == 1:
                label = tied[0]
            else:
                def tie_key(lab):
                    ds = [mean_dist[n] for n, v in votes.items() if v == lab]
                    return (sum(ds) / len(ds), lab)
                label = min(tied, key=tie_key)
        else:
            counts = Counter(lab for lab, _ in nearest.values())
            best = max(counts.values())
            tied = sorted(lab for lab, c in counts.items() if c == best)
            if len(tied) == 1:
                label = tied[0]
            else:
                def tie_key(lab):
                    return (min(d for l, d in nearest.values() if l == lab), lab)
                label = min(tied, key=tie_key)
        detail = PredictionDetail(label=label, votes=votes, counts=dict(counts),
                                  fallback=fallback, mean_distances=mean_dist)
        return label, detail

    def save(self, path) -> None:
        save_forest(self, path)

    @classmethod
    def load(cls, path) -> "Forest":
        return load_forest(path)


def train_forest(samples, params: Optional[ForestParams] = None) -> Forest:
    """Build one tree per feature name by inserting every sample in
    input order. Deterministic for a fixed input order and seed."""
    if params is None:
        params = ForestParams()
    samples = list(samples)
    if not samples:
        raise ValueError("cannot train a forest on an empty dataset")
    names = sorted(samples[0].features)
    if not names:
        raise ValueError("samples carry no features")
    name_set = set(names)
    for s in samples:
        if set(s.features) != name_set:
            raise ValueError(f"sample {s.clip_id!r} has a different feature-name set")
    for name in names:
        _check_token(name, "feature name")
    dim = len(np.atleast_1d(samples[0].features[names[0]]))

    trees = {}
    for name in names:
        rng = random.Random(f"{params.seed}:{name}")
        tree = FrequencyTree(dim, params, rng)
        for s in samples:
            tree.insert(s.features[name], s.label, s.clip_id)
        trees[name] = tree
    labels = tuple(sorted({s.label for s in samples}))
    return Forest(params=params, dim=dim, feature_names=names, labels=labels, trees=trees)


# ---------------------------------------------------------------------------
# Serialization: versioned line-oriented text, full round-trip precision.
# ---------------------------------------------------------------------------

_MAGIC = "FREQFOREST 1"


def _fmt(x: float) -> str:
    return repr(float(x))


def _dump_node(node, vec_fmt, out: list) -> None:
    if isinstance(node, _Split):
        out.append("split " + _fmt(node.tau) + " " + vec_fmt(node.pivot))
        _dump_node(node.left, vec_fmt, out)
        _dump_node(node.right, vec_fmt, out)
    else:
        out.append(f"leaf {len(node.items)}")
        for it in node.items:
            out.append(f"item {it.clip_id} {it.label} {it.seq} " + vec_fmt(it.vector))


def forest_to_text(forest: Forest) -> str:
    def vec_fmt(vec):
        return " ".join(_fmt(x) for x in vec)

    p = forest.params
    lines = [
        _MAGIC,
        (f"params k {p.k} entropy_threshold {_fmt(p.entropy_threshold)}"
         f" capacity {p.capacity} max_leaf {p.max_leaf}"
         f" histogram_bins {p.histogram_bins} seed {p.seed}"),
        f"dim {forest.dim}",
        "labels " + " ".join(forest.labels),
        f"features {len(forest.feature_names)} " + " ".join(forest.feature_names),
    ]
    for name in forest.feature_names:
        tree = forest.trees[name]
        lines.append(f"tree {name} {tree._next_seq}")
        _dump_node(tree.root, vec_fmt, lines)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_forest(forest: Forest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(forest_to_text(forest))


class _LineReader:
    def __init__(self, lines, path):
        self.lines = lines
        self.path = path
        self.pos = 0

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line.strip()
        raise ParseError("unexpected end of file", path=self.path, line=self.pos)

    @property
    def lineno(self) -> int:
        return self.pos


def _read_node(reader: _LineReader, dim: int, seen_counts: list):
    line = reader.next()
    parts = line.split()
    if parts[0] == "split":
        if len(parts) != 2 + dim:
            raise ParseError("split line has wrong component count",
                             path=reader.path, line=reader.lineno)
        tau = float(parts[1])
        pivot = np.array([float(x) for x in parts[2:]])
        left = _read_node(reader, dim, seen_counts)
        right = _read_node(reader, dim, seen_counts)
        return _Split(pivot, tau, left, right)
    if parts[0] == "leaf":
        n = int(parts[1])
        items = []
        for _ in range(n):
            tok = reader.next().split()
            if tok[0] != "item" or len(tok) != 4 + dim:
                raise ParseError("malformed item line", path=reader.path, line=reader.lineno)
            vec = np.array([float(x) for x in tok[4:]])
            items.append(_Item(tok[1], tok[2], vec, int(tok[3])))
        seen_counts[0] += n
        return _Leaf(items)
    raise ParseError(f"expected split/leaf, got {parts[0]!r}",
                     path=reader.path, line=reader.lineno)


def load_forest(path) -> Forest:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    reader = _LineReader(lines, str(path))
    if reader.next() != _MAGIC:
        raise ParseError(f"not a forest file (expected {_MAGIC!r} header)",
                         path=str(path), line=1)
    ptok = reader.next().split()
    if ptok[0] != "params" or len(ptok) != 13:
        raise ParseError("malformed params line", path=str(path), line=reader.lineno)
    kv = dict(zip(ptok[1::2], ptok[2::2]))
    try:
        params = ForestParams(
            k=int(kv["k"]),
            entropy_threshold=float(kv["entropy_threshold"]),
            capacity=int(kv["capacity"]),
            max_leaf=int(kv["max_leaf"]),
            histogram_bins=int(kv["histogram_bins"]),
            seed=int(kv["seed"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad params: {exc}", path=str(path), line=reader.lineno) from None
    dtok = reader.next().split()
    if dtok[0] != "dim":
        raise ParseError("expected dim line", path=str(path), line=reader.lineno)
    dim = int(dtok[1])
    ltok = reader.next().split()
    if ltok[0] != "labels":
        raise ParseError("expected labels line", path=str(path), line=reader.lineno)
    labels = tuple(ltok[1:])
    ftok = reader.next().split()
    if ftok[0] != "features" or len(ftok) != 2 + int(ftok[1]):
        raise ParseError("malformed features line", path=str(path), line=reader.lineno)
    names = tuple(ftok[2:])

    trees = {}
    for name in names:
        ttok = reader.next().split()
        if ttok[0] != "tree" or ttok[1] != name:
            raise ParseError(f"expected tree {name!r}", path=str(path), line=reader.lineno)
        tree = FrequencyTree(dim, params, random.Random(f"{params.seed}:{name}"))
        seen = [0]
        tree.root = _read_node(reader, dim, seen)
        tree.count = seen[0]
        tree._next_seq = int(ttok[2])
        trees[name] = tree
    if reader.next() != "end":
        raise ParseError("expected end marker", path=str(path), line=reader.lineno)
    return Forest(params=params, dim=dim, feature_names=names, labels=labels, trees=trees)
