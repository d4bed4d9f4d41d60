"""Network statistics, centrality rankings and tie comparison.

Path-based quantities (distances, betweenness, closeness) use hop counts
on the simple graph; edge weights only enter weighted degree and
eigenvector centrality.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy import sparse

from .errors import ConvergenceFailure, EmptyNetwork
from .net_extract import AttachmentIndex
from .network import Network

MEASURES = ("degree", "eigenvector", "betweenness", "closeness", "unique_ties")
EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 1000
_RANK_DECIMALS = 12


# ---------------------------------------------------------------------------
# Graph helpers
# ---------------------------------------------------------------------------

def _bfs(adj: Mapping[str, Mapping[str, int]], source: str) -> dict[str, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def connected_components(net: Network) -> list[list[str]]:
    """Components as sorted node lists, largest first, then by first node."""
    adj = net.adjacency
    seen: set[str] = set()
    comps = []
    for n in adj:
        if n in seen:
            continue
        comp = sorted(_bfs(adj, n))
        seen.update(comp)
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


def local_clustering(net: Network) -> dict[str, float]:
    adj = net.adjacency
    out = {}
    for v, nbrs in adj.items():
        k = len(nbrs)
        if k < 2:
            out[v] = 0.0
            continue
        nb = list(nbrs)
        links = sum(1 for a, b in combinations(nb, 2) if b in adj[a])
        out[v] = 2.0 * links / (k * (k - 1))
    return out


def average_clustering(net: Network) -> float:
    values = local_clustering(net)
    return math.fsum(values.values()) / len(values) if values else 0.0


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StatsReport:
    clustering_coefficient: float
    connected_components: int
    diameter: int
    radius: int
    centralization: float
    characteristic_path_length: float
    avg_neighbors: float
    node_count: int
    edge_count: int
    density: float
    heterogeneity: float

    def to_dict(self) -> dict:
        return asdict(self)


def network_statistics(net: Network) -> StatsReport:
    """Whole-network summary.

    Diameter, radius and characteristic path length are taken over the
    largest connected component. Centralization and heterogeneity are the
    degree-based indices: ``n/(n-2) * (max_k/(n-1) - density)`` and
    ``std(k)/mean(k)``.
    """
    n = len(net.nodes)
    if n == 0:
        raise EmptyNetwork("network has no nodes")
    m = len(net.edges)
    adj = net.adjacency
    degrees = [len(adj[v]) for v in adj]

    comps = connected_components(net)
    lcc = comps[0]
    eccentricities = []
    total = 0
    pairs = 0
    for v in lcc:
        dist = _bfs(adj, v)
        eccentricities.append(max(dist.values()))
        total += sum(dist.values())
        pairs += len(dist) - 1

    density = 2.0 * m / (n * (n - 1)) if n > 1 else 0.0
    mean_k = sum(degrees) / n
    if mean_k > 0:
        var = math.fsum((k - mean_k) ** 2 for k in degrees) / n
        heterogeneity = math.sqrt(var) / mean_k
    else:
        heterogeneity = 0.0
    if n > 2:
        centralization = n / (n - 2) * (max(degrees) / (n - 1) - density)
    else:
        centralization = 0.0

    return StatsReport(
        clustering_coefficient=average_clustering(net),
        connected_components=len(comps),
        diameter=max(eccentricities),
        radius=min(eccentricities),
        centralization=centralization,
        characteristic_path_length=total / pairs if pairs else 0.0,
        avg_neighbors=2.0 * m / n,
        node_count=n,
        edge_count=m,
        density=density,
        heterogeneity=heterogeneity,
    )


# ---------------------------------------------------------------------------
# Centrality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CentralityScores:
    measure: str
    scores: Mapping[str, float]
    ranks: Mapping[str, int]

    def top(self, k: int) -> list[tuple[str, float]]:
        order = sorted(self.ranks, key=self.ranks.__getitem__)
        return [(u, self.scores[u]) for u in order[:k]]


def rank_scores(scores: Mapping[str, float]) -> dict[str, int]:
    """1 = highest score; equal scores are ordered by address."""
    order = sorted(scores, key=lambda u: (-round(scores[u], _RANK_DECIMALS), u))
    return {u: i for i, u in enumerate(order, start=1)}


def weighted_degree(net: Network) -> dict[str, float]:
    return {v: float(sum(nb.values())) for v, nb in net.adjacency.items()}


def unique_ties(net: Network) -> dict[str, float]:
    return {v: float(len(nb)) for v, nb in net.adjacency.items()}


def betweenness(net: Network) -> dict[str, float]:
    """Brandes' algorithm on the unweighted graph, unnormalized.

    Each unordered pair ``{s, t}`` is counted once.
    """
    adj = net.adjacency
    cb = dict.fromkeys(adj, 0.0)
    for s in adj:
        stack = []
        preds: dict[str, list[str]] = {v: [] for v in adj}
        sigma = dict.fromkeys(adj, 0)
        sigma[s] = 1
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(adj, 0.0)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return {v: c / 2.0 for v, c in cb.items()}


def closeness(net: Network) -> dict[str, float]:
    """``(n_c - 1) / sum of hop distances`` within the node's component."""
    adj = net.adjacency
    out = {}
    for v in adj:
        dist = _bfs(adj, v)
        total = sum(dist.values())
        out[v] = (len(dist) - 1) / total if total else 0.0
    return out


def _power_iteration(matrix: sparse.csr_matrix, tol: float, max_iter: int) -> tuple[np.ndarray, float]:
    n = matrix.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    # Iterate on A + I: same eigenvectors, but no oscillation on bipartite graphs.
    for _ in range(max_iter):
        y = matrix @ x + x
        y /= np.linalg.norm(y)
        if np.max(np.abs(y - x)) < tol:
            x = y
            break
        x = y
    else:
        raise ConvergenceFailure(f"power iteration did not converge in {max_iter} iterations")
    lam = float(x @ (matrix @ x))
    return x, lam


def eigenvector(net: Network, tol: float = EIGEN_TOL, max_iter: int = EIGEN_MAX_ITER) -> dict[str, float]:
    """Perron vector of the weighted adjacency matrix, unit Euclidean norm.

    On a disconnected graph each component's vector is scaled by its
    spectral radius relative to the largest one, so isolated nodes score 0.
    """
    comps = connected_components(net)
    if not comps:
        return {}
    parts = []
    for comp in comps:
        if len(comp) == 1:
            parts.append((comp, np.zeros(1), 0.0))
            continue
        pos = {u: i for i, u in enumerate(comp)}
        rows, cols, vals = [], [], []
        for u in comp:
            for v, w in net.adjacency[u].items():
                rows.append(pos[u])
                cols.append(pos[v])
                vals.append(float(w))
        mat = sparse.csr_matrix((vals, (rows, cols)), shape=(len(comp), len(comp)))
        vec, lam = _power_iteration(mat, tol, max_iter)
        parts.append((comp, vec, lam))
    lam_max = max(p[2] for p in parts)
    scores: dict[str, float] = {}
    for comp, vec, lam in parts:
        scale = lam / lam_max if lam_max > 0 else 0.0
        if len(parts) == 1:
            scale = 1.0
        for u, x in zip(comp, vec):
            scores[u] = float(x) * scale
    norm = math.sqrt(math.fsum(s * s for s in scores.values()))
    if norm > 0:
        scores = {u: s / norm for u, s in scores.items()}
    return {u: max(0.0, s) for u, s in sorted(scores.items())}


_MEASURE_FUNCS = {
    "degree": weighted_degree,
    "eigenvector": eigenvector,
    "betweenness": betweenness,
    "closeness": closeness,
    "unique_ties": unique_ties,
}


def centrality(net: Network, measure: str) -> CentralityScores:
    if measure not in _MEASURE_FUNCS:
        raise ValueError(f"unknown measure {measure!r}; expected one of {MEASURES}")
    if not net.nodes:
        raise EmptyNetwork("network has no nodes")
    scores = _MEASURE_FUNCS[measure](net)
    return CentralityScores(measure, scores, rank_scores(scores))


def all_centralities(net: Network, measures: Sequence[str] = MEASURES) -> list[CentralityScores]:
    return [centrality(net, m) for m in measures]


def overall_rank(score_sets: Sequence[CentralityScores], top_k: int = 10) -> list[tuple[str, float]]:
    """Combine several rankings into one.

    A node scores ``sum(1/rank)`` over the measures plus one for every
    measure that places it within ``top_k``. Sorted descending, ties by
    address.
    """
    if not score_sets:
        return []
    universe = set(score_sets[0].ranks)
    for s in score_sets[1:]:
        if set(s.ranks) != universe:
            raise ValueError("score sets cover different node sets")
    values = {}
    for u in universe:
        ranks = [s.ranks[u] for s in score_sets]
        values[u] = math.fsum(1.0 / r for r in ranks) + sum(1 for r in ranks if r <= top_k)
    return sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))


# ---------------------------------------------------------------------------
# Gained / lost ties
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GainedTie:
    u: str
    v: str
    weight: int
    friend: Optional[str]
    friend_events: int


@dataclass(frozen=True)
class LostTie:
    u: str
    v: str
    frequency: int


@dataclass(frozen=True)
class TieDiff:
    gained: list
    lost: list

    def to_dict(self) -> dict:
        return {"gained": [asdict(g) for g in self.gained], "lost": [asdict(t) for t in self.lost]}


def tie_diff(net_a: Network, net_b: Network, index: Optional[AttachmentIndex] = None) -> TieDiff:
    """Edges present in only one of two networks.

    ``gained`` are ties of ``net_b`` missing from ``net_a``; each is
    attributed to the third-party sender whose emails put both users on
    the same attachment most often (None when no such sender exists).
    ``index`` should be the (filtered) index ``net_b`` was projected from.
    """
    gained_pairs = [p for p in net_b.edges if p not in net_a.edges]
    lost_pairs = [p for p in net_a.edges if p not in net_b.edges]

    contrib: dict[tuple[str, str], Counter] = {p: Counter() for p in gained_pairs}
    if index is not None and gained_pairs:
        for ev in index.events.values():
            if ev.sender is None:
                continue
            members = sorted(ev.participants - {ev.sender})
            for pair in combinations(members, 2):
                if pair in contrib:
                    contrib[pair][ev.sender] += 1

    gained = []
    for u, v in gained_pairs:
        friend, count = None, 0
        if contrib[(u, v)]:
            friend, count = min(contrib[(u, v)].items(), key=lambda kv: (-kv[1], kv[0]))
        gained.append(GainedTie(u, v, net_b.edges[(u, v)], friend, count))
    gained.sort(key=lambda t: (-t.weight, t.u, t.v))
    lost = sorted((LostTie(u, v, net_a.edges[(u, v)]) for u, v in lost_pairs),
                  key=lambda t: (-t.frequency, t.u, t.v))
    return TieDiff(gained, lost)
