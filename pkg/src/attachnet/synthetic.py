"""Deterministic synthetic archives for demos and tests.

``generate_corpus`` writes a small corporate archive in the EML tree
layout: ten core employees, an external mailing list used for one
broadcast, shared documents, a tiny logo that rides along on many emails,
and copies of the same email in several custodians' folders.

``generate_link_pair`` writes two views of one set of emails: a
header-authoritative copy without attachments and an attachment-bearing
copy with mangled headers, shifted time zones and truncated bodies.
"""

from __future__ import annotations

import csv
import random
from datetime import datetime, timedelta, timezone
from email.message import EmailMessage as MimeMessage
from email.utils import format_datetime
from pathlib import Path

DOMAIN = "corp.example"
EMPLOYEES = [
    ("Alice", "Adams"), ("Brian", "Baker"), ("Carla", "Cruz"), ("Derek", "Dunn"),
    ("Elena", "Evans"), ("Frank", "Fox"), ("Gina", "Grant"), ("Hugo", "Hale"),
    ("Irene", "Ito"), ("Jonas", "James"),
]
LIST_MEMBERS = [f"member{i:02d}@list.example" for i in range(40)]
WORDS = ("gas power trading desk contract review schedule price curve legal memo draft "
         "update meeting report forecast position counterparty deal volume west east").split()
DOC_TYPES = [
    ("application/pdf", "pdf"),
    ("application/msword", "doc"),
    ("application/vnd.ms-excel", "xls"),
    ("image/jpeg", "jpg"),
]
BASE_DATE = datetime(2001, 5, 1, 9, 0, tzinfo=timezone(timedelta(hours=-5)))


def address(first: str, last: str) -> str:
    return f"{first.lower()}.{last.lower()}@{DOMAIN}"


def custodian_name(first: str, last: str) -> str:
    return f"{last.lower()}-{first[0].lower()}"


def _words(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(n))


def _fix_boundaries(msg: MimeMessage, tag: str) -> None:
    for i, part in enumerate(msg.walk()):
        if part.is_multipart():
            part.set_boundary(f"==attachnet-{tag}-{i}==")


def _header_form(rng: random.Random, first: str, last: str) -> str:
    """One of the display forms seen in legacy archives, some without an address."""
    addr = address(first, last)
    form = rng.randrange(5)
    if form == 0:
        return f'"{first} {last}" <{addr}>'
    if form == 1:
        return f"<{addr}>"
    if form == 2:
        return f'<{last}>,"{first}"'
    if form == 3:
        return f"{first} {last}"
    return f'"{last.upper()} {first.upper()}" <{addr}>'


def _build(msg_id: str, sender: str, to: list[str], cc: list[str], subject: str, date: datetime,
           body: str, attachments: list[tuple[bytes, str, str]], tag: str) -> bytes:
    msg = MimeMessage()
    msg["Message-ID"] = msg_id
    msg["Date"] = format_datetime(date)
    msg["From"] = sender
    if to:
        msg["To"] = ", ".join(to)
    if cc:
        msg["Cc"] = ", ".join(cc)
    msg["Subject"] = subject
    msg.set_content(body)
    for data, mime, filename in attachments:
        maintype, subtype = mime.split("/")
        msg.add_attachment(data, maintype=maintype, subtype=subtype, filename=filename)
    _fix_boundaries(msg, tag)
    return msg.as_bytes()


def generate_corpus(out_dir: str | Path, n_messages: int = 50, seed: int = 0) -> dict[str, Path]:
    """Write the EML tree plus ``names.csv``, ``core_users.txt`` and ``custodians.csv``.

    Returns the written paths keyed by role (``archives``, ``names``,
    ``core_users``, ``custodians``).
    """
    rng = random.Random(seed)
    out = Path(out_dir)
    archives = out / "archives"
    archives.mkdir(parents=True, exist_ok=True)

    people = [(f, l, address(f, l)) for f, l in EMPLOYEES]
    custodians = people[:6]
    docs = []
    for i in range(14):
        mime, ext = DOC_TYPES[i % len(DOC_TYPES)]
        docs.append((rng.randbytes(rng.randint(1500, 6000)), mime, f"doc{i:02d}.{ext}"))
    logo = (rng.randbytes(420), "image/gif", "logo.gif")
    broadcast = (rng.randbytes(5000), "application/pdf", "quarterly_results.pdf")

    written = 0
    i = 0
    while written < n_messages:
        i += 1
        date = BASE_DATE + timedelta(hours=7 * i, minutes=rng.randrange(60))
        subject = f"{rng.choice(WORDS)} {rng.choice(WORDS)} #{i}"
        body = _words(rng, rng.randint(20, 80)) + "\n"
        s_first, s_last, s_addr = rng.choice(people)
        if i == 5:
            to = [f'"{s_first} {s_last}" <{s_addr}>']
            cc = LIST_MEMBERS
            recipients = []
            atts = [broadcast]
            owners = [p for p in custodians if p[2] == s_addr] or [custodians[0]]
        else:
            others = [p for p in people if p[2] != s_addr]
            chosen = rng.sample(others, rng.randint(1, 4))
            split = rng.randint(1, len(chosen))
            to = [_header_form(rng, f, l) for f, l, _ in chosen[:split]]
            cc = [_header_form(rng, f, l) for f, l, _ in chosen[split:]]
            recipients = [p[2] for p in chosen]
            atts = []
            roll = rng.random()
            if roll < 0.6:
                atts.append(rng.choice(docs))
                if rng.random() < 0.3:
                    atts.append(rng.choice(docs))
            if rng.random() < 0.25:
                atts.insert(0, logo) if rng.random() < 0.5 else atts.append(logo)
            holders = [p for p in custodians if p[2] in recipients + [s_addr]]
            if not holders:
                holders = [rng.choice(custodians)]
            owners = holders[:2] if rng.random() < 0.3 else holders[:1]
        sender_header = f'"{s_first} {s_last}" <{s_addr}>'
        raw = _build(f"<synthetic.{i}@{DOMAIN}>", sender_header, to, cc, subject, date, body, atts, str(i))
        for f, l, addr in owners:
            if written >= n_messages:
                break
            folder = "sent_items" if addr == s_addr else "inbox"
            target = archives / custodian_name(f, l) / folder
            target.mkdir(parents=True, exist_ok=True)
            (target / f"{i:04d}.eml").write_bytes(raw)
            written += 1

    names = out / "names.csv"
    with open(names, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["display_name", "address"])
        for f, l, addr in people:
            w.writerow([f"{f} {l}", addr])
    core = out / "core_users.txt"
    core.write_text("".join(f"{addr}\n" for _, _, addr in people), encoding="utf-8")
    cust = out / "custodians.csv"
    with open(cust, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["custodian", "address"])
        for f, l, addr in custodians:
            w.writerow([custodian_name(f, l), addr])
    return {"archives": archives, "names": names, "core_users": core, "custodians": cust}


def generate_link_pair(out_dir: str | Path, n_messages: int = 30, seed: int = 0) -> dict[str, Path]:
    """Write ``primary/`` (clean headers) and ``attachments/`` (attachment copy).

    Every third attachment-side copy is re-zoned to UTC and then set back
    two hours, every fifth has its body truncated to 150 bytes, every
    seventh is filed under another folder, and the last message is
    truncated to 50 bytes so it must stay unmatched.
    """
    rng = random.Random(seed)
    out = Path(out_dir)
    people = [(f, l, address(f, l)) for f, l in EMPLOYEES]
    for i in range(n_messages):
        s_first, s_last, s_addr = people[i % len(people)]
        r_first, r_last, r_addr = people[(i + 3) % len(people)]
        date = BASE_DATE + timedelta(hours=5 * i)
        subject = f"{rng.choice(WORDS)} item {i}"
        body = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(400)) + "\n"
        custodian = custodian_name(s_first, s_last)
        primary = _build(f"<primary.{i}@{DOMAIN}>", f'"{s_first} {s_last}" <{s_addr}>',
                         [f'"{r_first} {r_last}" <{r_addr}>'], [], subject, date, body, [], f"a{i}")
        p_dir = out / "primary" / custodian / "sent_items"
        p_dir.mkdir(parents=True, exist_ok=True)
        (p_dir / f"{i:04d}.eml").write_bytes(primary)

        b_date = date
        b_body = body
        folder = "sent_items"
        if i % 3 == 1:
            b_date = date.astimezone(timezone.utc) - timedelta(hours=2)
        if i % 5 == 2:
            b_body = body[:150]
        if i % 7 == 3:
            folder = "all_documents"
        if i == n_messages - 1:
            b_body = body[:50]
        attachment = (rng.randbytes(2048), "application/pdf", f"file{i}.pdf")
        copy = _build(f"<edrm.{1000 + i}@archive.example>", f'<{s_last}>,"{s_first}"',
                      [f"{r_first} {r_last}"], [], subject, b_date, b_body, [attachment], f"b{i}")
        b_dir = out / "attachments" / custodian / folder
        b_dir.mkdir(parents=True, exist_ok=True)
        (b_dir / f"{i:04d}.eml").write_bytes(copy)
    return {"primary": out / "primary", "attachments": out / "attachments"}
