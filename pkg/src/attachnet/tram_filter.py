"""Drop attachments that create ties without a social meaning.

Logos, signatures, broadcast mail and viral content are removed with
three rules before projection:

* size: digests of at most ``min_size_bytes`` bytes;
* bulk: events (single emails) with more than ``bulk_recipient_threshold``
  recipients;
* frequency: digests seen in more than ``max_event_frequency`` unique
  emails, or sent by more than ``max_sender_frequency`` unique senders.

Frequencies are always measured on the unfiltered index, so the rules
commute.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Literal, Optional, Sequence

from .net_extract import AttachmentIndex, PairScope, project_shared_attachment_network

RULES = ("size", "bulk", "event_freq", "sender_freq")
SweepParameter = Literal["bulk", "event_freq", "sender_freq", "size"]

_SWEEP_FIELDS = {
    "bulk": ("bulk_recipient_threshold", "bulk_rule"),
    "event_freq": ("max_event_frequency", "event_frequency_rule"),
    "sender_freq": ("max_sender_frequency", "sender_frequency_rule"),
    "size": ("min_size_bytes", "size_rule"),
}


@dataclass(frozen=True)
class FilterConfig:
    min_size_bytes: int = 1024
    bulk_recipient_threshold: int = 35
    max_event_frequency: int = 2
    max_sender_frequency: int = 2
    size_rule: bool = True
    bulk_rule: bool = True
    event_frequency_rule: bool = True
    sender_frequency_rule: bool = True

    def __post_init__(self):
        for name in ("min_size_bytes", "bulk_recipient_threshold",
                     "max_event_frequency", "max_sender_frequency"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def disabled(cls) -> "FilterConfig":
        return cls(size_rule=False, bulk_rule=False, event_frequency_rule=False,
                   sender_frequency_rule=False)

    def to_dict(self) -> dict:
        return {
            "min_size_bytes": self.min_size_bytes,
            "bulk_recipient_threshold": self.bulk_recipient_threshold,
            "max_event_frequency": self.max_event_frequency,
            "max_sender_frequency": self.max_sender_frequency,
            "size_rule": self.size_rule,
            "bulk_rule": self.bulk_rule,
            "event_frequency_rule": self.event_frequency_rule,
            "sender_frequency_rule": self.sender_frequency_rule,
        }


# Each rule keeps or drops events of ``current`` while reading frequencies
# from ``reference`` (the original index).
Rule = Callable[[AttachmentIndex, AttachmentIndex, FilterConfig], AttachmentIndex]


def _size_rule(current, reference, cfg):
    if not cfg.size_rule:
        return current
    return current.subset(mid for mid, ev in current.events.items()
                          if reference.sizes[ev.digest] > cfg.min_size_bytes)


def _bulk_rule(current, reference, cfg):
    if not cfg.bulk_rule:
        return current
    return current.subset(mid for mid, ev in current.events.items()
                          if ev.recipient_count <= cfg.bulk_recipient_threshold)


def _event_freq_rule(current, reference, cfg):
    if not cfg.event_frequency_rule:
        return current
    return current.subset(mid for mid, ev in current.events.items()
                          if len(reference.message_ids(ev.digest)) <= cfg.max_event_frequency)


def _sender_freq_rule(current, reference, cfg):
    if not cfg.sender_frequency_rule:
        return current
    return current.subset(mid for mid, ev in current.events.items()
                          if len(reference.senders(ev.digest)) <= cfg.max_sender_frequency)


_RULE_FUNCS: dict[str, Rule] = {
    "size": _size_rule,
    "bulk": _bulk_rule,
    "event_freq": _event_freq_rule,
    "sender_freq": _sender_freq_rule,
}


def apply_rules(index: AttachmentIndex, config: FilterConfig,
                order: Sequence[str] = RULES) -> AttachmentIndex:
    """Apply the named rules in ``order``; any permutation gives the same result."""
    current = index
    for name in order:
        current = _RULE_FUNCS[name](current, index, config)
    return current


def apply_filters(index: AttachmentIndex, config: FilterConfig) -> AttachmentIndex:
    return apply_rules(index, config, RULES)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    avg_degree: float
    avg_clustering: float
    nodes: int
    edges: int


def sweep_threshold(index: AttachmentIndex, config: FilterConfig, parameter: SweepParameter,
                    values: Sequence[float], core_users: Optional[Iterable[str]] = None,
                    pair_scope: PairScope = "digest") -> list[SweepPoint]:
    """Average degree and clustering of the projected network per threshold.

    Each value is substituted for ``parameter`` (and its rule enabled) and
    the network is rebuilt from scratch.
    """
    from .graph_metrics import average_clustering

    if parameter not in _SWEEP_FIELDS:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be ascending")
    field_name, flag = _SWEEP_FIELDS[parameter]
    core = list(core_users) if core_users is not None else None
    out = []
    for value in values:
        cfg = replace(config, **{field_name: value, flag: True})
        net = project_shared_attachment_network(index, cfg, core, pair_scope)
        n, m = len(net.nodes), len(net.edges)
        out.append(SweepPoint(value, 2 * m / n if n else 0.0, average_clustering(net) if n else 0.0, n, m))
    return out


@dataclass(frozen=True)
class SizeHistogram:
    """Counts per right-closed bucket: ``(-inf, e0], (e0, e1], ..., (e_last, inf)``."""

    edges: tuple
    counts: tuple

    def rows(self) -> list[tuple[str, str, int]]:
        lows = ["-inf"] + [str(e) for e in self.edges]
        highs = [str(e) for e in self.edges] + ["inf"]
        return list(zip(lows, highs, self.counts))


def attachment_size_histogram(index: AttachmentIndex, bucket_edges: Sequence[int]) -> SizeHistogram:
    """Number of distinct digests per size bucket."""
    edges = tuple(bucket_edges)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError("bucket edges must be strictly ascending")
    counts = [0] * (len(edges) + 1)
    for size in index.sizes.values():
        counts[bisect.bisect_left(edges, size)] += 1
    return SizeHistogram(edges, tuple(counts))
