import random
import sys
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from attachnet.mime_ingest import AttachmentRecord, CanonicalAddress, EmailMessage, MediaClass

HERE = Path(__file__).parent
FIXTURE = HERE / "fixtures" / "synthetic"
sys.path.insert(0, str(HERE))

CRITERIA_RESULTS: list[str] = []


def addr(name: str) -> CanonicalAddress:
    local, domain = name.split("@") if "@" in name else (name.lower(), "x.org")
    return CanonicalAddress(local, domain)


def att(tag: str, size: int = 2048, mime: str = "application/pdf") -> AttachmentRecord:
    from attachnet.mime_ingest import content_digest, media_class_for
    return AttachmentRecord(content_digest(tag), size, media_class_for(mime), mime)


def msg(mid, sender, to=(), cc=(), bcc=(), attachments=(), custodian="", folder="inbox",
        subject="s", date=None, body="") -> EmailMessage:
    return EmailMessage(
        message_id=mid, custodian=custodian, folder=folder, subject=subject,
        date=date or datetime(2001, 5, 1, 10, tzinfo=timezone.utc),
        sender=addr(sender) if sender else None,
        recipients_to=tuple(addr(a) for a in to), recipients_cc=tuple(addr(a) for a in cc),
        recipients_bcc=tuple(addr(a) for a in bcc), body_text=body,
        attachments=tuple(attachments))


@dataclass
class RandomCorpus:
    """Messages grouped by custodian plus the ground-truth event list."""

    archives: list            # [(custodian address, [EmailMessage])]
    events: list              # [(message_id, digest, frozenset participants)]
    event_senders: dict       # message_id -> sender address
    recipient_counts: dict    # message_id -> distinct recipients
    sizes: dict               # digest -> bytes


def random_corpus(seed: int, max_messages: int = 50, max_users: int = 10,
                  max_attachments: int = 8) -> RandomCorpus:
    rng = random.Random(seed)
    users = [f"u{i}@x.org" for i in range(rng.randint(2, max_users))]
    n_att = rng.randint(1, max_attachments)
    pool = [(f"a{seed}-{i}", rng.choice([200, 1024, 1025, 3000, 9000])) for i in range(n_att)]
    records = [att(tag, size) for tag, size in pool]
    sizes = {r.digest: r.size_bytes for r in records}
    archives = {u: [] for u in users}
    events = {}
    senders = {}
    rcounts = {}
    base = datetime(2001, 1, 1, tzinfo=timezone.utc)
    for i in range(rng.randint(1, max_messages)):
        sender = rng.choice(users)
        recips = rng.sample(users, rng.randint(1, len(users)))
        split = rng.randint(0, len(recips))
        to, cc = recips[:split], recips[split:]
        bcc = rng.sample(users, 1) if rng.random() < 0.2 else []
        attached = rng.sample(records, rng.randint(0, min(3, len(records))))
        holders = rng.sample(users, rng.randint(1, min(3, len(users))))
        mid = f"<m{i}@x.org>"
        m = msg(mid, sender, to, cc, bcc, attached, date=base + timedelta(hours=i))
        for h in holders:
            archives[h].append(m)
        if attached:
            parts = set(to) | set(cc) | set(bcc) | {sender} | set(holders)
            events[mid] = (mid, attached[0].digest, frozenset(parts))
            senders[mid] = sender
            rcounts[mid] = len(set(to) | set(cc) | set(bcc))
    return RandomCorpus([(c, ms) for c, ms in archives.items()], sorted(events.values()),
                        senders, rcounts, sizes)


@pytest.fixture
def fixture_paths():
    return {
        "archives": FIXTURE / "archives",
        "names": FIXTURE / "names.csv",
        "core_users": FIXTURE / "core_users.txt",
        "custodians": FIXTURE / "custodians.csv",
    }


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_RESULTS:
            terminalreporter.write_line(line)
