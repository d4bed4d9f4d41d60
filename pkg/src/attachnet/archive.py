"""Load email archives from disk.

Two layouts are understood:

* an EML tree ``<root>/<custodian>/<folder...>/<file>``, one message per file;
* mbox files, either ``<root>/<custodian>.mbox`` or
  ``<root>/<custodian>/<folder>.mbox``.
"""

from __future__ import annotations

import json
import logging
import mailbox
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import InputError, UnparseableMessage
from .mime_ingest import EmailMessage, MediaClass, NameDirectory, parse_message

log = logging.getLogger(__name__)

MBOX_SUFFIXES = (".mbox", ".mbx")


@dataclass
class IngestResult:
    messages: list[EmailMessage]
    failures: list[tuple[str, str]] = field(default_factory=list)


def _is_hidden(path: Path, root: Path) -> bool:
    return any(part.startswith(".") for part in path.relative_to(root).parts)


def _iter_sources(root: Path) -> Iterator[tuple[str, str, str, Path]]:
    """Yield (kind, custodian, folder, path) in a stable order."""
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        if _is_hidden(path, root):
            continue
        rel = path.relative_to(root).parts
        if path.suffix.lower() in MBOX_SUFFIXES:
            if len(rel) == 1:
                yield "mbox", path.stem, "", path
            else:
                yield "mbox", rel[0], "/".join(rel[1:-1] + (path.stem,)), path
        elif len(rel) >= 2:
            yield "eml", rel[0], "/".join(rel[1:-1]), path
        else:
            log.warning("skipping %s: not inside a custodian directory", path)


def _raw_items(root: Path) -> Iterator[tuple[str, str, str, bytes]]:
    for kind, custodian, folder, path in _iter_sources(root):
        if kind == "eml":
            yield str(path.relative_to(root)), custodian, folder, path.read_bytes()
        else:
            box = mailbox.mbox(str(path), create=False)
            try:
                for n, key in enumerate(box.iterkeys()):
                    yield f"{path.relative_to(root)}#{n}", custodian, folder, box.get_bytes(key)
            finally:
                box.close()


def _parse_one(item, directory):
    label, custodian, folder, raw = item
    try:
        return label, parse_message(raw, custodian, folder, directory), None
    except UnparseableMessage as exc:
        return label, None, str(exc)


def load_archive(root: str | Path, directory: Optional[NameDirectory] = None,
                 jobs: int = 1) -> IngestResult:
    """Parse every message below ``root``.

    Unparseable files are collected in ``failures`` rather than aborting.
    Output order follows the sorted file layout regardless of ``jobs``.
    """
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"archive directory not found: {root}")
    items = list(_raw_items(root))
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_parse_one, items, [directory] * len(items),
                                    chunksize=max(1, len(items) // (jobs * 4))))
    else:
        results = [_parse_one(item, directory) for item in items]
    result = IngestResult(messages=[])
    for label, msg, err in results:
        if msg is None:
            log.warning("unparseable message %s: %s", label, err)
            result.failures.append((label, err))
        else:
            result.messages.append(msg)
    return result


def dedupe_messages(messages: Iterable[EmailMessage]) -> list[EmailMessage]:
    """Keep the first message seen for each Message-ID."""
    seen = set()
    out = []
    for msg in messages:
        if msg.message_id not in seen:
            seen.add(msg.message_id)
            out.append(msg)
    return out


def group_by_custodian(messages: Iterable[EmailMessage]) -> list[tuple[str, list[EmailMessage]]]:
    groups: dict[str, list[EmailMessage]] = defaultdict(list)
    for msg in messages:
        groups[msg.custodian].append(msg)
    return sorted(groups.items())


def write_messages(messages: Iterable[EmailMessage], path: str | Path) -> None:
    """One JSON object per line, keys sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for msg in messages:
            fh.write(json.dumps(msg.to_dict(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def read_messages(path: str | Path) -> list[EmailMessage]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(EmailMessage.from_dict(json.loads(line)))
    return out


def archive_statistics(messages: Iterable[EmailMessage]) -> dict:
    """Attachment footprint per mailbox, averaged over mailboxes.

    Returns the mean share of mailbox bytes taken by attachments, the mean
    share of messages carrying attachments, and the split of all
    attachments across media classes.
    """
    per_box = defaultdict(lambda: {"bytes": 0, "attachment_bytes": 0, "messages": 0, "with_attachments": 0})
    media = {mc.value: 0 for mc in MediaClass}
    for msg in messages:
        box = per_box[msg.custodian]
        box["messages"] += 1
        box["bytes"] += msg.size_bytes
        if msg.attachments:
            box["with_attachments"] += 1
        for att in msg.attachments:
            box["attachment_bytes"] += att.size_bytes
            media[att.media_class.value] += 1

    def share(num, den):
        return num / den if den else 0.0

    boxes = sorted(per_box.items())
    n_boxes = len(boxes)
    total_attachments = sum(media.values())
    return {
        "mailboxes": n_boxes,
        "messages": sum(b["messages"] for _, b in boxes),
        "avg_attachment_size_share": (
            sum(min(1.0, share(b["attachment_bytes"], b["bytes"])) for _, b in boxes) / n_boxes
            if n_boxes else 0.0
        ),
        "avg_messages_with_attachments_share": (
            sum(share(b["with_attachments"], b["messages"]) for _, b in boxes) / n_boxes
            if n_boxes else 0.0
        ),
        "media_class_share": {k: share(v, total_attachments) for k, v in media.items()},
        "per_mailbox": {
            name: {
                "messages": b["messages"],
                "attachment_size_share": min(1.0, share(b["attachment_bytes"], b["bytes"])),
                "messages_with_attachments_share": share(b["with_attachments"], b["messages"]),
            }
            for name, b in boxes
        },
    }
