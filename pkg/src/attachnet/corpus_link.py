"""Link a header-authoritative corpus to a copy that carries attachments.

Messages are matched on composite content keys, in three passes of
decreasing strictness:

1. full key: custodian, folder, subject, UTC date, body digest;
2. downgraded key: subject, UTC date, body digest;
3. truncated body: same subject and date, and the attachment-side body
   (normalized) is a prefix of the header-side body of at least
   ``min_truncation_len`` bytes.

The attachment-side dates are tried at their plain UTC value first and
then shifted by each repair offset, because some copies record the time
in a different zone than the original.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from email.utils import parsedate_to_datetime
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import UnparseableDate
from .mime_ingest import EmailMessage, content_digest, normalize_body

ZONE = "zone"
DEFAULT_REPAIR_OFFSETS: tuple[Union[str, float], ...] = (ZONE, 2, 3, 4, 10, 12)
DEFAULT_MIN_TRUNCATION_LEN = 100

_DATE_FORMATS = (
    "%Y-%m-%d %H:%M %z",
    "%Y-%m-%d %H:%M:%S %z",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%d %H:%M:%S",
)


class MatchMode(str, Enum):
    FULL_KEY = "full_key"
    DOWNGRADED_KEY = "downgraded_key"
    TRUNCATED_BODY = "truncated_body"


@dataclass(frozen=True)
class LinkKey:
    custodian: str
    folder: str
    subject: str
    date_gmt: datetime
    body_digest: str

    def downgraded(self) -> tuple[str, datetime, str]:
        return (self.subject, self.date_gmt, self.body_digest)


@dataclass(frozen=True)
class LinkPair:
    id_a: str
    id_b: str
    mode: MatchMode
    date_repaired: bool = False


@dataclass
class LinkReport:
    matched: list[LinkPair]
    unmatched_a: list[str]
    unmatched_b: list[str]
    total_a: int
    ambiguous: int = 0
    params: dict = field(default_factory=dict)

    @property
    def match_rate(self) -> float:
        return len(self.matched) / self.total_a if self.total_a else 0.0

    def mode_counts(self) -> dict[str, int]:
        counts = {m.value: 0 for m in MatchMode}
        for pair in self.matched:
            counts[pair.mode.value] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "total_a": self.total_a,
            "match_rate": self.match_rate,
            "mode_counts": self.mode_counts(),
            "date_repairs": sum(p.date_repaired for p in self.matched),
            "ambiguous": self.ambiguous,
            "matched": [
                {"id_a": p.id_a, "id_b": p.id_b, "mode": p.mode.value, "date_repaired": p.date_repaired}
                for p in self.matched
            ],
            "unmatched_a": self.unmatched_a,
            "unmatched_b": self.unmatched_b,
        }


def to_utc(date: Union[str, datetime, None]) -> datetime:
    """Parse ``date`` and convert to an aware UTC datetime.

    Naive values are taken to already be UTC.
    """
    if date is None or (isinstance(date, str) and not date.strip()):
        raise UnparseableDate("no date")
    if isinstance(date, str):
        text = date.strip()
        parsed = None
        try:
            parsed = parsedate_to_datetime(text)
        except (TypeError, ValueError, IndexError):
            pass
        if parsed is None:
            for fmt in _DATE_FORMATS:
                try:
                    parsed = datetime.strptime(text, fmt)
                    break
                except ValueError:
                    continue
        if parsed is None:
            try:
                parsed = datetime.fromisoformat(text)
            except ValueError:
                raise UnparseableDate(f"cannot parse date {text!r}") from None
        date = parsed
    if date.tzinfo is None:
        return date.replace(tzinfo=timezone.utc)
    return date.astimezone(timezone.utc)


def _zone_hours(date: Union[str, datetime]) -> float:
    if isinstance(date, str):
        try:
            date = parsedate_to_datetime(date.strip())
        except (TypeError, ValueError, IndexError):
            date = None
        if date is None:
            return 0.0
    offset = date.utcoffset() if date.tzinfo else None
    return abs(offset.total_seconds()) / 3600 if offset else 0.0


def normalize_date_gmt(date: Union[str, datetime, None],
                       repair_offsets: Optional[Sequence[Union[str, float]]] = None) -> list[datetime]:
    """Candidate UTC timestamps for ``date``.

    The first candidate is the plain UTC conversion; each repair offset
    (hours, or ``"zone"`` for the absolute zone difference with UTC) adds
    one more candidate shifted forward. Duplicates are dropped, order kept.
    ``repair_offsets=None`` uses ``DEFAULT_REPAIR_OFFSETS``.
    """
    base = to_utc(date)
    if repair_offsets is None:
        repair_offsets = DEFAULT_REPAIR_OFFSETS
    out = [base]
    for off in repair_offsets:
        hours = _zone_hours(date) if off == ZONE else float(off)
        cand = base + timedelta(hours=hours)
        if cand not in out:
            out.append(cand)
    return out


@dataclass
class _Prepared:
    pos: int
    msg: EmailMessage
    subject: str
    body: str
    digest: str
    dates: list[datetime]


def _prepare(messages: Sequence[EmailMessage], trailer: Optional[re.Pattern],
             offsets: Optional[Sequence], folder_offsets: Mapping[str, Sequence[float]],
             candidates: bool) -> list[_Prepared]:
    out = []
    for pos, msg in enumerate(messages):
        body = msg.body_text
        if trailer is not None:
            m = trailer.search(body)
            if m:
                body = body[:m.start()]
        norm = normalize_body(body)
        if msg.date is None:
            dates = []
        elif candidates:
            extra = list(offsets if offsets is not None else DEFAULT_REPAIR_OFFSETS)
            extra = list(folder_offsets.get(msg.folder, ())) + extra
            dates = normalize_date_gmt(msg.date, extra)
        else:
            dates = [to_utc(msg.date)]
        out.append(_Prepared(pos, msg, msg.subject.strip(), norm, content_digest(norm), dates))
    out.sort(key=lambda p: (p.msg.message_id, p.pos))
    return out


def link_corpora(corpus_a: Sequence[EmailMessage], corpus_b: Sequence[EmailMessage],
                 min_truncation_len: int = DEFAULT_MIN_TRUNCATION_LEN,
                 repair_offsets: Optional[Sequence[Union[str, float]]] = None,
                 folder_offsets: Optional[Mapping[str, Sequence[float]]] = None,
                 trailer_pattern: Optional[str] = None) -> LinkReport:
    """Match messages of ``corpus_b`` (attachment side) to ``corpus_a``.

    Every message is matched at most once. When several A messages share a
    key, the lexicographically smallest Message-ID wins and the event is
    counted in ``LinkReport.ambiguous``.

    Args:
        folder_offsets: extra hour offsets tried first for B messages in the
            named folders.
        trailer_pattern: regex; body content from the first match onward is
            dropped on both sides before keys are built.
    """
    trailer = re.compile(trailer_pattern) if trailer_pattern else None
    folder_offsets = dict(folder_offsets or {})
    side_a = _prepare(corpus_a, trailer, None, {}, candidates=False)
    side_b = _prepare(corpus_b, trailer, repair_offsets, folder_offsets, candidates=True)

    used_a: set[int] = set()
    used_b: set[int] = set()
    matched: list[LinkPair] = []
    ambiguous = 0

    def run_pass(mode: MatchMode, key_a, key_b, accept=None):
        nonlocal ambiguous
        index: dict = {}
        for a in side_a:
            if a.pos in used_a or not a.dates:
                continue
            index.setdefault(key_a(a, a.dates[0]), []).append(a)
        for b in side_b:
            if b.pos in used_b:
                continue
            for ci, date in enumerate(b.dates):
                pool = [a for a in index.get(key_b(b, date), ())
                        if a.pos not in used_a and (accept is None or accept(a, b))]
                if not pool:
                    continue
                if len(pool) > 1:
                    ambiguous += 1
                a = pool[0]
                used_a.add(a.pos)
                used_b.add(b.pos)
                matched.append(LinkPair(a.msg.message_id, b.msg.message_id, mode, ci > 0))
                break

    run_pass(MatchMode.FULL_KEY,
             lambda a, d: (a.msg.custodian, a.msg.folder, a.subject, d, a.digest),
             lambda b, d: (b.msg.custodian, b.msg.folder, b.subject, d, b.digest))
    run_pass(MatchMode.DOWNGRADED_KEY,
             lambda a, d: (a.subject, d, a.digest),
             lambda b, d: (b.subject, d, b.digest))
    run_pass(MatchMode.TRUNCATED_BODY,
             lambda a, d: (a.subject, d),
             lambda b, d: (b.subject, d),
             accept=lambda a, b: (len(b.body.encode("utf-8")) >= min_truncation_len
                                  and a.body.startswith(b.body)))

    return LinkReport(
        matched=matched,
        unmatched_a=[a.msg.message_id for a in side_a if a.pos not in used_a],
        unmatched_b=[b.msg.message_id for b in side_b if b.pos not in used_b],
        total_a=len(side_a),
        ambiguous=ambiguous,
        params={
            "min_truncation_len": min_truncation_len,
            "repair_offsets": [o if o == ZONE else float(o)
                               for o in (repair_offsets if repair_offsets is not None
                                         else DEFAULT_REPAIR_OFFSETS)],
            "folder_offsets": {k: [float(v) for v in vs] for k, vs in sorted(folder_offsets.items())},
            "trailer_pattern": trailer_pattern,
        },
    )


def merge_linked(corpus_a: Iterable[EmailMessage], corpus_b: Iterable[EmailMessage],
                 report: LinkReport) -> list[EmailMessage]:
    """Matched B messages with their address headers taken from A.

    The linked message also takes A's Message-ID, so copies of one email
    held by several custodians collapse to a single sharing event later.
    """
    by_a = {m.message_id: m for m in corpus_a}
    by_b = {m.message_id: m for m in corpus_b}
    out = []
    for pair in report.matched:
        a, b = by_a[pair.id_a], by_b[pair.id_b]
        out.append(replace(
            b,
            message_id=a.message_id,
            sender=a.sender,
            recipients_to=a.recipients_to,
            recipients_cc=a.recipients_cc,
            recipients_bcc=a.recipients_bcc,
            unresolved=a.unresolved,
        ))
    return out
