"""Build the communication network and the shared-attachment network.

The attachment network is the one-mode projection, onto users, of the
bipartite user/attachment graph. Each email contributes at most one
sharing event (its first attachment); the participants of an event are
the archive owner, the sender and every recipient.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from pathlib import Path
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Literal, Mapping, Optional, Sequence

from .errors import InputError
from .mime_ingest import AttachmentRecord, EmailMessage, canonicalize_address
from .network import Network, NetworkKind, edge_key

if TYPE_CHECKING:
    from .tram_filter import FilterConfig

INDEX_FORMAT = "attachnet-index"
INDEX_VERSION = 1

PairScope = Literal["digest", "event"]


@dataclass(frozen=True)
class SharingEvent:
    """One (message, selected attachment) occurrence."""

    message_id: str
    digest: str
    sender: Optional[str]
    participants: frozenset
    recipient_count: int
    custodians: frozenset = frozenset()


class AttachmentIndex:
    """Digest-keyed view over sharing events.

    Events are keyed by Message-ID: a message yields at most one event, and
    copies of the same message held by different custodians merge into it.
    """

    def __init__(self, events: Iterable[SharingEvent], sizes: Mapping[str, int],
                 media: Optional[Mapping[str, str]] = None):
        by_id = {}
        for ev in events:
            if ev.message_id in by_id:
                raise ValueError(f"duplicate event for message {ev.message_id}")
            if ev.digest not in sizes:
                raise ValueError(f"no size recorded for digest {ev.digest}")
            by_id[ev.message_id] = ev
        self.events: Mapping[str, SharingEvent] = MappingProxyType(dict(sorted(by_id.items())))
        used = {ev.digest for ev in by_id.values()}
        self.sizes: Mapping[str, int] = MappingProxyType({d: int(sizes[d]) for d in sorted(used)})
        media = media or {}
        self.media: Mapping[str, str] = MappingProxyType(
            {d: media.get(d, "other") for d in sorted(used)})

    def __eq__(self, other):
        if not isinstance(other, AttachmentIndex):
            return NotImplemented
        return (dict(self.events) == dict(other.events) and dict(self.sizes) == dict(other.sizes)
                and dict(self.media) == dict(other.media))

    def __repr__(self):
        return f"AttachmentIndex(events={len(self.events)}, digests={len(self.sizes)})"

    def __len__(self) -> int:
        return len(self.events)

    @cached_property
    def _by_digest(self) -> Mapping[str, tuple[SharingEvent, ...]]:
        groups: dict[str, list[SharingEvent]] = {}
        for ev in self.events.values():
            groups.setdefault(ev.digest, []).append(ev)
        return MappingProxyType({d: tuple(groups[d]) for d in sorted(groups)})

    def digests(self) -> list[str]:
        return list(self._by_digest)

    def events_for(self, digest: str) -> tuple[SharingEvent, ...]:
        return self._by_digest.get(digest, ())

    def users(self, digest: str) -> frozenset:
        out = set()
        for ev in self.events_for(digest):
            out |= ev.participants
        return frozenset(out)

    def message_ids(self, digest: str) -> frozenset:
        return frozenset(ev.message_id for ev in self.events_for(digest))

    def senders(self, digest: str) -> frozenset:
        return frozenset(ev.sender for ev in self.events_for(digest) if ev.sender)

    def all_users(self) -> frozenset:
        out = set()
        for ev in self.events.values():
            out |= ev.participants
        return frozenset(out)

    def subset(self, keep_events: Iterable[str]) -> "AttachmentIndex":
        keep = set(keep_events)
        return AttachmentIndex((ev for mid, ev in self.events.items() if mid in keep),
                               self.sizes, self.media)

    # -- persistence -------------------------------------------------------

    def to_columns(self) -> dict:
        evs = list(self.events.values())
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "digests": {
                "digest": list(self.sizes),
                "size_bytes": list(self.sizes.values()),
                "media_class": [self.media[d] for d in self.sizes],
            },
            "events": {
                "message_id": [e.message_id for e in evs],
                "digest": [e.digest for e in evs],
                "sender": [e.sender for e in evs],
                "recipient_count": [e.recipient_count for e in evs],
                "participants": [sorted(e.participants) for e in evs],
                "custodians": [sorted(e.custodians) for e in evs],
            },
        }

    @classmethod
    def from_columns(cls, data: Mapping) -> "AttachmentIndex":
        if data.get("format") != INDEX_FORMAT:
            raise InputError("not an attachment index file")
        if data.get("version") != INDEX_VERSION:
            raise InputError(f"unsupported index version {data.get('version')!r}")
        d = data["digests"]
        sizes = dict(zip(d["digest"], d["size_bytes"]))
        media = dict(zip(d["digest"], d["media_class"]))
        e = data["events"]
        events = [
            SharingEvent(mid, dg, snd, frozenset(parts), int(rc), frozenset(cust))
            for mid, dg, snd, rc, parts, cust in zip(
                e["message_id"], e["digest"], e["sender"], e["recipient_count"],
                e["participants"], e["custodians"])
        ]
        return cls(events, sizes, media)


def merge_indexes(*indexes: AttachmentIndex) -> AttachmentIndex:
    """Associative merge; events sharing a Message-ID are unioned."""
    merged: dict[str, SharingEvent] = {}
    sizes: dict[str, int] = {}
    media: dict[str, str] = {}
    for index in indexes:
        sizes.update(index.sizes)
        media.update(index.media)
        for mid, ev in index.events.items():
            prev = merged.get(mid)
            if prev is None:
                merged[mid] = ev
            else:
                merged[mid] = SharingEvent(
                    mid, prev.digest, prev.sender or ev.sender,
                    prev.participants | ev.participants,
                    max(prev.recipient_count, ev.recipient_count),
                    prev.custodians | ev.custodians,
                )
    return AttachmentIndex(merged.values(), sizes, media)


def save_index(index: AttachmentIndex, path: str | Path, meta: Optional[Mapping] = None) -> None:
    data = index.to_columns()
    if meta:
        data["meta"] = dict(sorted(meta.items()))
    Path(path).write_text(json.dumps(data, sort_keys=True, separators=(",", ":")) + "\n",
                          encoding="utf-8")


def load_index(path: str | Path) -> AttachmentIndex:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"index file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return AttachmentIndex.from_columns(data)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

def select_event_attachments(message: EmailMessage) -> list[AttachmentRecord]:
    """The single attachment that stands for this email's sharing event.

    The first attachment in MIME order wins; the rest of the email's
    attachments do not create ties.
    """
    for att in message.attachments:
        if att.digest:
            return [att]
    return []


def resolve_custodian(custodian: str, custodian_addresses: Optional[Mapping[str, str]] = None) -> Optional[str]:
    if custodian_addresses and custodian in custodian_addresses:
        addr = canonicalize_address(custodian_addresses[custodian])
    else:
        addr = canonicalize_address(custodian)
    return str(addr) if addr else None


def _archive_index(custodian: str, messages: Iterable[EmailMessage],
                   custodian_addresses, include_bcc: bool) -> AttachmentIndex:
    owner = resolve_custodian(custodian, custodian_addresses)
    events: dict[str, SharingEvent] = {}
    sizes: dict[str, int] = {}
    media: dict[str, str] = {}
    for msg in messages:
        selected = select_event_attachments(msg)
        if not selected:
            continue
        att = selected[0]
        recipients = [str(a) for a in msg.recipients(include_bcc)]
        participants = set(recipients)
        sender = str(msg.sender) if msg.sender else None
        if sender:
            participants.add(sender)
        if owner:
            participants.add(owner)
        ev = SharingEvent(msg.message_id, att.digest, sender, frozenset(participants),
                          len(recipients), frozenset([custodian]))
        prev = events.get(msg.message_id)
        if prev is not None:
            ev = SharingEvent(prev.message_id, prev.digest, prev.sender or ev.sender,
                              prev.participants | ev.participants,
                              max(prev.recipient_count, ev.recipient_count), prev.custodians)
        events[msg.message_id] = ev
        sizes.setdefault(att.digest, att.size_bytes)
        media.setdefault(att.digest, att.media_class.value)
    return AttachmentIndex(events.values(), sizes, media)


def build_attachment_index(archives: Iterable[tuple[str, Iterable[EmailMessage]]],
                           custodian_addresses: Optional[Mapping[str, str]] = None,
                           include_bcc: bool = True) -> AttachmentIndex:
    """Index sharing events over several custodians' archives.

    ``custodian_addresses`` maps archive owner names to addresses; an owner
    name that already is an address needs no entry. Per-archive partial
    indexes are merged by Message-ID.
    """
    partials = [_archive_index(c, msgs, custodian_addresses, include_bcc) for c, msgs in archives]
    return merge_indexes(*partials)


def build_communication_network(messages: Iterable[EmailMessage],
                                core_users: Optional[Iterable[str]] = None,
                                include_bcc: bool = True) -> Network:
    """Sender-recipient network weighted by number of messages.

    Messages are deduplicated by Message-ID first. With ``core_users``
    only those addresses (and edges between them) are kept.
    """
    core = frozenset(core_users) if core_users is not None else None
    weights: Counter = Counter()
    nodes: set[str] = set()
    seen: set[str] = set()
    for msg in messages:
        if msg.message_id in seen:
            continue
        seen.add(msg.message_id)
        sender = str(msg.sender) if msg.sender else None
        recipients = [str(r) for r in msg.recipients(include_bcc)]
        for addr in ([sender] if sender else []) + recipients:
            if core is None or addr in core:
                nodes.add(addr)
        if sender is None or (core is not None and sender not in core):
            continue
        for r in recipients:
            if r == sender or (core is not None and r not in core):
                continue
            weights[edge_key(sender, r)] += 1
    return Network.from_weights(weights, kind=NetworkKind.COMMUNICATION, nodes=nodes)


def pair_cooccurrence(events: Sequence[SharingEvent], core: Optional[frozenset] = None) -> Counter:
    co: Counter = Counter()
    for ev in events:
        members = sorted(p for p in ev.participants if core is None or p in core)
        for pair in combinations(members, 2):
            co[pair] += 1
    return co


def project_shared_attachment_network(index: AttachmentIndex,
                                      filters: Optional["FilterConfig"] = None,
                                      core_users: Optional[Iterable[str]] = None,
                                      pair_scope: PairScope = "digest") -> Network:
    """One-mode projection of the user/attachment graph onto users.

    With ``pair_scope="event"`` a pair gains one unit of weight for every
    sharing event of a digest in which both took part. With the default
    ``"digest"`` scope, users who received the same attachment in separate
    emails are tied as well: every pair drawn from the digest's whole user
    set gains ``max(1, shared events)``.

    Users left without any edge are not part of the result.
    """
    if pair_scope not in ("digest", "event"):
        raise ValueError(f"unknown pair scope {pair_scope!r}")
    if filters is not None:
        from .tram_filter import apply_filters
        index = apply_filters(index, filters)
    core = frozenset(core_users) if core_users is not None else None
    weights: Counter = Counter()
    for digest in index.digests():
        events = index.events_for(digest)
        co = pair_cooccurrence(events, core)
        if pair_scope == "event":
            weights.update(co)
            continue
        users = sorted(u for u in index.users(digest) if core is None or u in core)
        for pair in combinations(users, 2):
            weights[pair] += max(1, co[pair])
    return Network.from_weights(weights, kind=NetworkKind.ATTACHMENT)

