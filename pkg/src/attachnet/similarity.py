"""Attachment bags per user, nearest-neighbour queries and k-means.

Each user is described by the multiset of attachment digests they took
part in sharing, much like a bag of words. Clustering runs k-means over
the rows of the pairwise weighted-Jaccard distance matrix.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Literal, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DegenerateInput, UnknownUser
from .net_extract import AttachmentIndex

Metric = Literal["weighted_jaccard", "cosine"]
KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class UserBag:
    user: str
    counts: Mapping[str, int]

    def __post_init__(self):
        if any(c < 1 for c in self.counts.values()):
            raise ValueError("bag counts must be positive")
        object.__setattr__(self, "counts", MappingProxyType(dict(sorted(self.counts.items()))))

    @property
    def total(self) -> int:
        return sum(self.counts.values())


BagLike = Union[UserBag, Mapping[str, int]]


def _counts(bag: BagLike) -> Mapping[str, int]:
    return bag.counts if isinstance(bag, UserBag) else bag


def build_user_bags(index: AttachmentIndex, filters=None,
                    core_users: Optional[Iterable[str]] = None) -> list[UserBag]:
    """One bag per user who took part in at least one surviving event.

    ``counts[d]`` is the number of events of digest ``d`` the user took part
    in. Bags are returned sorted by user.
    """
    if filters is not None:
        from .tram_filter import apply_filters
        index = apply_filters(index, filters)
    core = frozenset(core_users) if core_users is not None else None
    tally: dict[str, Counter] = defaultdict(Counter)
    for ev in index.events.values():
        for user in ev.participants:
            if core is None or user in core:
                tally[user][ev.digest] += 1
    return [UserBag(u, dict(tally[u])) for u in sorted(tally)]


def weighted_jaccard_distance(a: BagLike, b: BagLike) -> float:
    """``1 - sum(min)/sum(max)`` over digest counts; 0 for two empty bags."""
    ca, cb = _counts(a), _counts(b)
    lo = hi = 0
    for key in ca.keys() | cb.keys():
        x, y = ca.get(key, 0), cb.get(key, 0)
        lo += min(x, y)
        hi += max(x, y)
    if hi == 0:
        return 0.0
    # (hi - lo) / hi is correctly rounded for integer counts; 1 - lo/hi is not.
    return (hi - lo) / hi


def cosine_distance(a: BagLike, b: BagLike) -> float:
    ca, cb = _counts(a), _counts(b)
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    dot = sum(v * cb.get(k, 0) for k, v in ca.items())
    return max(0.0, 1.0 - dot / (na * nb))


_METRICS = {"weighted_jaccard": weighted_jaccard_distance, "cosine": cosine_distance}


def knn_query(bags: Sequence[UserBag], target: str, k: int = 6,
              metric: Metric = "weighted_jaccard") -> list[tuple[str, float]]:
    """The ``k`` bags nearest to ``target``'s, the target itself first."""
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    by_user = {b.user: b for b in bags}
    if target not in by_user:
        raise UnknownUser(f"no attachment bag for {target}")
    if not 1 <= k <= len(bags):
        raise ValueError(f"k must be between 1 and {len(bags)}")
    dist = _METRICS[metric]
    query = by_user[target]
    others = sorted(((u, dist(query, b)) for u, b in by_user.items() if u != target),
                    key=lambda ud: (ud[1], ud[0]))
    return [(target, 0.0)] + others[:k - 1]


def distance_matrix(bags: Sequence[UserBag], metric: Metric = "weighted_jaccard") -> tuple[list[str], np.ndarray]:
    """Users sorted by address and the symmetric pairwise distance matrix."""
    ordered = sorted(bags, key=lambda b: b.user)
    dist = _METRICS[metric]
    n = len(ordered)
    mat = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            mat[i, j] = mat[j, i] = dist(ordered[i], ordered[j])
    return [b.user for b in ordered], mat


@dataclass
class ClusterAssignment:
    k: int
    seed: int
    assignment: dict[str, int]
    inertia: float
    n_iter: int = 0
    inertia_history: list[float] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def clusters(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = defaultdict(list)
        for user in sorted(self.assignment):
            out[self.assignment[user]].append(user)
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "inertia": self.inertia,
            "n_iter": self.n_iter,
            "assignment": dict(sorted(self.assignment.items())),
            "clusters": {str(c): users for c, users in self.clusters().items()},
            "notes": list(self.notes),
        }


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0:
            break
        cum = np.cumsum(d2)
        idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
        idx = min(idx, n - 1)
        while d2[idx] <= 0:  # never re-pick an existing center
            idx -= 1
        chosen.append(idx)
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return x[chosen].copy()


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = KMEANS_MAX_ITER):
    """Lloyd iterations from ``centers``.

    Returns labels, final centers, iteration count, per-iteration inertia and
    notes on empty-cluster repairs. An emptied cluster takes the point
    farthest from its own centroid.
    """
    k = centers.shape[0]
    labels = None
    history: list[float] = []
    notes: list[str] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d = _sq_dists(x, centers)
        new = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            if np.any(labels == c):
                continue
            sizes = np.bincount(labels, minlength=k)
            own = d[np.arange(len(labels)), labels]
            own = np.where(sizes[labels] > 1, own, -1.0)
            far = int(np.argmax(own))
            notes.append(f"iteration {n_iter}: cluster {c} was empty; moved point {far} into it")
            labels[far] = c
        centers = np.stack([x[labels == c].mean(axis=0) for c in range(k)])
        history.append(float(((x - centers[labels]) ** 2).sum()))
    return labels, centers, n_iter, history, notes


def kmeans_cluster(bags: Sequence[UserBag], k: int = 15, seed: int = 0,
                   max_iter: int = KMEANS_MAX_ITER) -> ClusterAssignment:
    """k-means (k-means++ seeding, Lloyd updates) over distance-matrix rows.

    Users are sorted before the matrix is built, so the result depends only
    on the bags, ``k`` and ``seed``. Cluster ids are renumbered in order of
    first appearance over the sorted users.

    Raises:
        DegenerateInput: ``k`` exceeds the number of users.
    """
    if k < 1:
        raise ValueError("k must be positive")
    users, mat = distance_matrix(bags)
    n = len(users)
    if k > n:
        raise DegenerateInput(f"k={k} exceeds the number of users ({n})")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(mat, k, rng)
    notes = []
    if centers.shape[0] < k:
        notes.append(f"only {centers.shape[0]} distinct rows for k={k}; "
                     f"{k - centers.shape[0]} clusters left empty")
    labels, centers, n_iter, history, lloyd_notes = lloyd(mat, centers, max_iter)
    notes.extend(lloyd_notes)
    relabel: dict[int, int] = {}
    for lab in labels:
        relabel.setdefault(int(lab), len(relabel))
    assignment = {u: relabel[int(lab)] for u, lab in zip(users, labels)}
    inertia = float(((mat - centers[labels]) ** 2).sum())
    return ClusterAssignment(k, seed, assignment, inertia, n_iter, history, notes)


def write_bags_csv(bags: Iterable[UserBag], path: str | Path, header_comment: Optional[str] = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user", "digest", "count"])
        for bag in bags:
            for digest, count in bag.counts.items():
                writer.writerow([bag.user, digest, count])


def read_bags_csv(path: str | Path) -> list[UserBag]:
    tally: dict[str, dict[str, int]] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(rows):
        tally[row["user"]][row["digest"]] = int(row["count"])
    return [UserBag(u, tally[u]) for u in sorted(tally)]
