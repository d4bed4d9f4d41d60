"""Undirected weighted user graph and its file formats.

Nodes are rendered addresses (``user@domain``). Edges are keyed by the
sorted address pair, so ``{u, v}`` and ``{v, u}`` are the same edge.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import networkx as nx

from .errors import InputError


class NetworkKind(str, Enum):
    COMMUNICATION = "communication"
    ATTACHMENT = "attachment"


def edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Network:
    nodes: frozenset
    edges: Mapping[tuple[str, str], int]
    kind: NetworkKind = NetworkKind.COMMUNICATION
    meta: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        clean = {}
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u}")
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge {u}-{v} has an endpoint outside the node set")
            if int(w) != w or w < 1:
                raise ValueError(f"edge {u}-{v} has invalid weight {w!r}")
            clean[edge_key(u, v)] = int(w)
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", MappingProxyType(dict(sorted(clean.items()))))
        object.__setattr__(self, "kind", NetworkKind(self.kind))
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @classmethod
    def from_weights(cls, weights: Mapping[tuple[str, str], int], kind=NetworkKind.COMMUNICATION,
                     nodes: Optional[Iterable[str]] = None, meta=None) -> "Network":
        node_set = set(nodes or ())
        merged: dict[tuple[str, str], int] = {}
        for (u, v), w in weights.items():
            key = edge_key(u, v)
            merged[key] = merged.get(key, 0) + w
            node_set.update(key)
        return cls(frozenset(node_set), merged, kind, meta or {})

    @cached_property
    def adjacency(self) -> Mapping[str, Mapping[str, int]]:
        adj: dict[str, dict[str, int]] = {n: {} for n in sorted(self.nodes)}
        for (u, v), w in self.edges.items():
            adj[u][v] = w
            adj[v][u] = w
        return MappingProxyType({n: MappingProxyType(dict(sorted(nb.items()))) for n, nb in adj.items()})

    def weight(self, u: str, v: str) -> int:
        return self.edges.get(edge_key(u, v), 0)

    def __len__(self) -> int:
        return len(self.nodes)

    def sorted_nodes(self) -> list[str]:
        return sorted(self.nodes)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.sorted_nodes())
        for (u, v), w in self.edges.items():
            g.add_edge(u, v, weight=w)
        return g

    def with_meta(self, **meta) -> "Network":
        return Network(self.nodes, self.edges, self.kind, {**self.meta, **meta})


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------

def _header_comment(net: Network) -> str:
    extras = " ".join(f"{k}={v}" for k, v in sorted(net.meta.items()))
    return f"# attachnet kind={net.kind.value}" + (f" {extras}" if extras else "")


def write_edge_csv(net: Network, path: str | Path) -> None:
    """``src,dst,weight`` with one ``#`` comment line carrying metadata."""
    buf = io.StringIO()
    buf.write(_header_comment(net) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["src", "dst", "weight"])
    for (u, v), w in net.edges.items():
        writer.writerow([u, v, w])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _parse_comment(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def read_edge_csv(path: str | Path) -> Network:
    meta: dict = {}
    weights = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = []
        for line in fh:
            if line.startswith("#"):
                meta.update(_parse_comment(line))
            else:
                rows.append(line)
    reader = csv.DictReader(rows)
    for row in reader:
        weights[edge_key(row["src"], row["dst"])] = int(row["weight"])
    kind = meta.pop("kind", NetworkKind.COMMUNICATION.value)
    return Network.from_weights(weights, kind=kind, meta=meta)


def network_to_json(net: Network) -> dict:
    return {
        "kind": net.kind.value,
        "meta": dict(sorted(net.meta.items())),
        "nodes": net.sorted_nodes(),
        "adjacency": {u: dict(nb) for u, nb in net.adjacency.items()},
    }


def write_json(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_json(net), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_json(path: str | Path) -> Network:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    weights = {}
    for u, nb in data["adjacency"].items():
        for v, w in nb.items():
            weights[edge_key(u, v)] = int(w)
    return Network(frozenset(data["nodes"]), weights, data["kind"], data.get("meta", {}))


def write_graphml(net: Network, path: str | Path) -> None:
    g = nx.Graph(kind=net.kind.value, **dict(net.meta))
    for n in net.sorted_nodes():
        g.add_node(n, address=n)
    for (u, v), w in net.edges.items():
        g.add_edge(u, v, weight=w)
    nx.write_graphml(g, str(path))


def read_graphml(path: str | Path) -> Network:
    g = nx.read_graphml(str(path))
    meta = {k: str(v) for k, v in g.graph.items() if k != "kind" and not k.startswith("node_default")
            and not k.startswith("edge_default")}
    kind = g.graph.get("kind", NetworkKind.COMMUNICATION.value)
    nodes = frozenset(g.nodes[n].get("address", n) for n in g.nodes)
    weights = {}
    for u, v, data in g.edges(data=True):
        u = g.nodes[u].get("address", u)
        v = g.nodes[v].get("address", v)
        weights[edge_key(u, v)] = int(data.get("weight", 1))
    return Network(nodes, weights, kind, meta)


_WRITERS = {".graphml": write_graphml, ".csv": write_edge_csv, ".json": write_json}
_READERS = {".graphml": read_graphml, ".csv": read_edge_csv, ".json": read_json}


def save_network(net: Network, path: str | Path) -> None:
    suffix = Path(path).suffix.lower()
    if suffix not in _WRITERS:
        raise ValueError(f"unsupported network format {suffix!r}")
    _WRITERS[suffix](net, path)


def load_network(path: str | Path) -> Network:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in _READERS:
        raise InputError(f"unsupported network format {suffix!r}")
    if not path.is_file():
        raise InputError(f"network file not found: {path}")
    return _READERS[suffix](path)
