"""Parse raw email into structured messages.

Covers address canonicalization for the messy header forms found in
legacy corporate archives, MIME walking with attachment extraction, body
normalization, and SHA-1 content digests.
"""

from __future__ import annotations

import codecs
import csv
import hashlib
import re
from dataclasses import dataclass, field
from datetime import datetime
from email import errors as email_errors
from email import message_from_bytes
from email.header import decode_header, make_header
from email.message import Message
from email.utils import parsedate_to_datetime
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional

from .errors import UnparseableMessage

__all__ = [
    "AttachmentRecord",
    "CanonicalAddress",
    "EmailMessage",
    "MediaClass",
    "NameDirectory",
    "ParsedAddresses",
    "body_digest",
    "canonicalize_address",
    "content_digest",
    "media_class_for",
    "normalize_body",
    "parse_address_header",
    "parse_message",
]


# ---------------------------------------------------------------------------
# Digests and body normalization
# ---------------------------------------------------------------------------

def content_digest(data: bytes | str) -> str:
    """Lowercase hex SHA-1 of ``data`` (str is UTF-8 encoded first)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha1(data).hexdigest()


_QP_SOFT_BREAK = re.compile(r"=[ \t]*\r?\n")
_QP_ESCAPE = re.compile(r"=[0-9A-Fa-f]{2}")
_WHITESPACE = re.compile(r"\s+")
_QMARK_RUN = re.compile(r"\?{2,}")


def normalize_body(text: str) -> str:
    """Canonical body form used for content keys.

    Soft line breaks and ``=XX`` escapes become ``?``, all whitespace is
    removed and runs of ``?`` collapse to one. Soft breaks are rewritten
    before whitespace removal so that ``=\\n`` never fuses with the
    following characters into a fake escape; escapes are rewritten after
    it so that the result is a fixpoint.
    """
    text = _QP_SOFT_BREAK.sub("?", text)
    text = _WHITESPACE.sub("", text)
    text = _QP_ESCAPE.sub("?", text)
    return _QMARK_RUN.sub("?", text)


def body_digest(text: str) -> str:
    return content_digest(normalize_body(text))


# ---------------------------------------------------------------------------
# Media classes
# ---------------------------------------------------------------------------

class MediaClass(str, Enum):
    DOCUMENT = "document"
    MULTIMEDIA = "multimedia"
    OTHER = "other"


_DOCUMENT_TYPES = frozenset({
    "application/pdf",
    "application/msword",
    "application/rtf",
    "application/vnd.ms-excel",
    "application/vnd.ms-powerpoint",
    "application/vnd.ms-project",
    "application/vnd.visio",
    "application/wordperfect",
    "application/vnd.wordperfect",
    "application/x-msexcel",
    "application/x-excel",
    "application/x-msword",
    "application/postscript",
})
_DOCUMENT_PREFIXES = (
    "application/vnd.openxmlformats-officedocument.",
    "application/vnd.oasis.opendocument.",
    "application/vnd.ms-excel.",
    "application/vnd.ms-word.",
    "application/vnd.ms-powerpoint.",
)


def media_class_for(mime_type: str) -> MediaClass:
    """Map a MIME type onto the three attachment buckets.

    Every string maps to exactly one class; unknown types are ``OTHER``.
    """
    mime_type = (mime_type or "").strip().lower()
    maintype = mime_type.partition("/")[0]
    if maintype in ("image", "audio", "video"):
        return MediaClass.MULTIMEDIA
    if maintype == "text" or mime_type in _DOCUMENT_TYPES:
        return MediaClass.DOCUMENT
    if mime_type.startswith(_DOCUMENT_PREFIXES):
        return MediaClass.DOCUMENT
    return MediaClass.OTHER


# ---------------------------------------------------------------------------
# Addresses
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class CanonicalAddress:
    local: str
    domain: str
    display_name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.local or not self.domain:
            raise ValueError("address needs a non-empty local part and domain")
        if self.local != self.local.lower() or self.domain != self.domain.lower():
            raise ValueError("address parts must be lowercase")

    def __str__(self) -> str:
        return f"{self.local}@{self.domain}"


_ADDR_STRIP = " \t\r\n\"'<>()[],;:."
_ADDRESS_RE = re.compile(
    r"[A-Za-z0-9!#$%&'*+/=?^_`{|}~.\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*"
)


def canonicalize_address(value, display_name: Optional[str] = None) -> Optional[CanonicalAddress]:
    """Return the canonical ``user@domain`` form of ``value`` or None.

    Idempotent: feeding the rendered result back in yields an equal address.
    """
    if isinstance(value, CanonicalAddress):
        return value
    text = str(value).strip()
    if text.lower().startswith("mailto:"):
        text = text[7:]
    text = text.strip(_ADDR_STRIP)
    if text.count("@") != 1 or any(c.isspace() for c in text):
        return None
    local, domain = text.lower().split("@")
    local = local.strip(_ADDR_STRIP)
    domain = domain.strip(_ADDR_STRIP)
    if not local or not domain:
        return None
    return CanonicalAddress(local, domain, display_name or None)


def _name_key(name: str) -> str:
    name = name.replace(".", " ").replace('"', " ").replace("'", "")
    return " ".join(name.lower().split())


def _drop_initials(key: str) -> str:
    return " ".join(tok for tok in key.split() if len(tok) > 1)


class NameDirectory:
    """Resolve bare display names (and X.500 aliases) to addresses.

    Lookups ignore case, dots and repeated whitespace. A second index with
    single-letter initials removed catches "Phillip K Allen" vs
    "Phillip Allen"; it is only consulted when unambiguous.
    """

    def __init__(self, entries: Mapping[str, str] | Iterable[tuple[str, str]] = ()):
        if isinstance(entries, Mapping):
            entries = entries.items()
        self._exact: dict[str, CanonicalAddress] = {}
        loose: dict[str, set[CanonicalAddress]] = {}
        for name, address in entries:
            addr = canonicalize_address(address)
            if addr is None:
                raise ValueError(f"directory entry {name!r} has no valid address: {address!r}")
            key = _name_key(name)
            if not key:
                continue
            self._exact.setdefault(key, addr)
            loose.setdefault(_drop_initials(key), set()).add(addr)
        self._loose = {k: next(iter(v)) for k, v in loose.items() if k and len(v) == 1}

    @classmethod
    def from_csv(cls, path: str | Path) -> "NameDirectory":
        """Load a ``display_name,address`` CSV (header row optional)."""
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if len(row) < 2 or row[0].startswith("#"):
                    continue
                if row[0].strip().lower() == "display_name":
                    continue
                rows.append((row[0].strip(), row[1].strip()))
        return cls(rows)

    def __len__(self) -> int:
        return len(self._exact)

    def lookup(self, name: str) -> Optional[CanonicalAddress]:
        key = _name_key(name)
        if not key:
            return None
        found = self._exact.get(key)
        if found is None:
            found = self._loose.get(_drop_initials(key))
        if found is None:
            return None
        return CanonicalAddress(found.local, found.domain, name.strip() or None)


class ParsedAddresses(NamedTuple):
    addresses: list[CanonicalAddress]
    unresolved: list[str]


@dataclass
class _NameToken:
    text: str
    aliases: list[str]
    surname_first: bool


_X500_RE = re.compile(r"<?\s*/O=[^<>,]*>?", re.IGNORECASE)
_CN_RE = re.compile(r"CN=([^/<>\s]+)", re.IGNORECASE)
_QUOTED_RE = re.compile(r'"([^"]*)"')
_MAX_NAME_WINDOW = 4


def _split_top_level(text: str) -> list[str]:
    """Split on commas/semicolons outside quotes and angle brackets."""
    parts, buf = [], []
    in_quote = False
    depth = 0
    for ch in text:
        if ch == '"':
            in_quote = not in_quote
        elif not in_quote and ch == "<":
            depth += 1
        elif not in_quote and ch == ">":
            depth = max(0, depth - 1)
        if ch in ",;" and not in_quote and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return [p.strip() for p in parts if p.strip()]


def _decode_header_text(raw: str) -> str:
    if "=?" not in raw:
        return raw
    try:
        return str(make_header(decode_header(raw)))
    except (email_errors.HeaderParseError, LookupError, UnicodeError, ValueError):
        return raw


def _resolve_run(run: list[_NameToken], directory: Optional[NameDirectory],
                 out: list[CanonicalAddress], unresolved: list[str]) -> None:
    i = 0
    while i < len(run):
        matched = False
        if directory is not None:
            for width in range(min(_MAX_NAME_WINDOW, len(run) - i), 0, -1):
                window = run[i:i + width]
                texts = [t.text for t in window]
                forward = " ".join(texts)
                rotated = " ".join(texts[1:] + texts[:1]) if width > 1 else None
                candidates = [rotated, forward] if window[0].surname_first else [forward, rotated]
                # An X.500 alias names the person whose segment it closes.
                candidates += window[-1].aliases
                for cand in candidates:
                    if cand is None:
                        continue
                    addr = directory.lookup(cand)
                    if addr is not None:
                        out.append(addr)
                        i += width
                        matched = True
                        break
                if matched:
                    break
        if not matched:
            tok = run[i]
            unresolved.append(tok.text or "/".join(tok.aliases))
            i += 1


def parse_address_header(raw_header: Optional[str],
                         directory: Optional[NameDirectory] = None) -> ParsedAddresses:
    """Extract every recognizable address from a free-form header value.

    Handles ``"Name" <a@b>``, bare ``<a@b>``, ``<Surname>,"First"`` pairs,
    Exchange X.500 paths (``/O=.../CN=alias``), bare names and comma-run
    name lists. Tokens without a domain are looked up in ``directory``;
    anything left over is returned in ``unresolved``.
    """
    if not raw_header:
        return ParsedAddresses([], [])
    text = _decode_header_text(str(raw_header)).replace("\r", " ").replace("\n", " ")

    found: list[CanonicalAddress] = []
    unresolved: list[str] = []
    run: list[_NameToken] = []

    for segment in _split_top_level(text):
        aliases = []
        for x500 in _X500_RE.findall(segment):
            cns = _CN_RE.findall(x500)
            if cns:
                aliases.append(cns[-1])
        rest = _X500_RE.sub(" ", segment)
        emails = _ADDRESS_RE.findall(rest)
        if emails:
            if run:
                _resolve_run(run, directory, found, unresolved)
                run = []
            quoted = _QUOTED_RE.findall(rest)
            if quoted:
                display = quoted[0].strip()
            else:
                display = rest.split("<", 1)[0].strip() if "<" in rest else ""
            for e in emails:
                addr = canonicalize_address(e, display_name=" ".join(display.split()) or None)
                if addr is not None:
                    found.append(addr)
            continue
        stripped = rest.strip()
        surname_first = stripped.startswith("<") and stripped.endswith(">") and '"' not in stripped
        name = " ".join(re.sub(r'[<>"]', " ", rest).split())
        if name or aliases:
            run.append(_NameToken(name, aliases, surname_first))
    if run:
        _resolve_run(run, directory, found, unresolved)

    seen = set()
    unique = []
    for addr in found:
        if addr not in seen:
            seen.add(addr)
            unique.append(addr)
    return ParsedAddresses(unique, unresolved)


# ---------------------------------------------------------------------------
# Messages
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttachmentRecord:
    digest: str
    size_bytes: int
    media_class: MediaClass
    mime_type: str
    filename: Optional[str] = None

    def __post_init__(self):
        if len(self.digest) != 40 or any(c not in "0123456789abcdef" for c in self.digest):
            raise ValueError(f"not a SHA-1 hex digest: {self.digest!r}")
        if self.size_bytes < 0:
            raise ValueError("size_bytes must be non-negative")

    def to_dict(self) -> dict:
        return {
            "digest": self.digest,
            "size_bytes": self.size_bytes,
            "media_class": self.media_class.value,
            "mime_type": self.mime_type,
            "filename": self.filename,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AttachmentRecord":
        return cls(data["digest"], int(data["size_bytes"]), MediaClass(data["media_class"]),
                   data["mime_type"], data.get("filename"))


def _addr_to_dict(addr: CanonicalAddress) -> dict:
    return {"address": str(addr), "display_name": addr.display_name}


def _addr_from_dict(data: Mapping) -> CanonicalAddress:
    addr = canonicalize_address(data["address"], data.get("display_name"))
    if addr is None:
        raise ValueError(f"bad address in serialized message: {data!r}")
    return addr


@dataclass(frozen=True)
class EmailMessage:
    """One parsed message; immutable once built."""

    message_id: str
    custodian: str
    folder: str
    subject: str
    date: Optional[datetime]
    sender: Optional[CanonicalAddress]
    recipients_to: tuple[CanonicalAddress, ...] = ()
    recipients_cc: tuple[CanonicalAddress, ...] = ()
    recipients_bcc: tuple[CanonicalAddress, ...] = ()
    body_text: str = ""
    attachments: tuple[AttachmentRecord, ...] = ()
    size_bytes: int = 0
    unresolved: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    def recipients(self, include_bcc: bool = True) -> list[CanonicalAddress]:
        """Distinct recipients across To/Cc(/Bcc), header order preserved."""
        groups = [self.recipients_to, self.recipients_cc]
        if include_bcc:
            groups.append(self.recipients_bcc)
        seen, out = set(), []
        for group in groups:
            for addr in group:
                if addr not in seen:
                    seen.add(addr)
                    out.append(addr)
        return out

    @property
    def body_digest(self) -> str:
        return body_digest(self.body_text)

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "custodian": self.custodian,
            "folder": self.folder,
            "subject": self.subject,
            "date": self.date.isoformat() if self.date else None,
            "sender": _addr_to_dict(self.sender) if self.sender else None,
            "to": [_addr_to_dict(a) for a in self.recipients_to],
            "cc": [_addr_to_dict(a) for a in self.recipients_cc],
            "bcc": [_addr_to_dict(a) for a in self.recipients_bcc],
            "body_text": self.body_text,
            "attachments": [a.to_dict() for a in self.attachments],
            "size_bytes": self.size_bytes,
            "unresolved": list(self.unresolved),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EmailMessage":
        return cls(
            message_id=data["message_id"],
            custodian=data["custodian"],
            folder=data["folder"],
            subject=data["subject"],
            date=datetime.fromisoformat(data["date"]) if data.get("date") else None,
            sender=_addr_from_dict(data["sender"]) if data.get("sender") else None,
            recipients_to=tuple(_addr_from_dict(a) for a in data.get("to", ())),
            recipients_cc=tuple(_addr_from_dict(a) for a in data.get("cc", ())),
            recipients_bcc=tuple(_addr_from_dict(a) for a in data.get("bcc", ())),
            body_text=data.get("body_text", ""),
            attachments=tuple(AttachmentRecord.from_dict(a) for a in data.get("attachments", ())),
            size_bytes=int(data.get("size_bytes", 0)),
            unresolved=tuple(data.get("unresolved", ())),
            warnings=tuple(data.get("warnings", ())),
        )


_HEADER_LINE = re.compile(rb"^[!-9;-~]+:")
_BASE64_DEFECTS = (
    email_errors.InvalidBase64CharactersDefect,
    email_errors.InvalidBase64PaddingDefect,
    email_errors.InvalidBase64LengthDefect,
)


def _has_separator(raw: bytes) -> bool:
    if not _HEADER_LINE.match(raw):
        return False
    return b"\n\n" in raw or b"\r\n\r\n" in raw


def _decode_text(payload: bytes, charset: Optional[str]) -> str:
    try:
        codec = codecs.lookup(charset or "us-ascii").name
    except LookupError:
        codec = "ascii"
    return payload.decode(codec, errors="replace").replace("\ufffd", "?")


def _is_attachment(part: Message) -> bool:
    if part.get_content_disposition() == "attachment":
        return True
    if part.get_filename():
        return True
    return part.get_content_maintype() != "text"


def _header(msg: Message, name: str) -> str:
    values = msg.get_all(name) or []
    return ", ".join(str(v) for v in values)


def _dedupe(addrs: Iterable[CanonicalAddress]) -> tuple[CanonicalAddress, ...]:
    seen, out = set(), []
    for a in addrs:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return tuple(out)


def parse_message(raw: bytes, custodian: str = "", folder: str = "",
                  directory: Optional[NameDirectory] = None) -> EmailMessage:
    """Parse one RFC 822 style message.

    Raises:
        UnparseableMessage: no header block or no blank line separating
            headers from body.

    Undecodable parts are skipped and noted in ``warnings``.
    """
    if isinstance(raw, str):
        raw = raw.encode("utf-8", errors="replace")
    if not _has_separator(raw):
        raise UnparseableMessage("no header/body separator")
    msg = message_from_bytes(raw)
    warnings: list[str] = []
    unresolved: list[str] = []

    def addresses(name: str) -> list[CanonicalAddress]:
        parsed = parse_address_header(_header(msg, name), directory)
        unresolved.extend(parsed.unresolved)
        return parsed.addresses

    senders = addresses("From")
    sender = senders[0] if senders else None

    message_id = _header(msg, "Message-ID").strip()
    if not message_id:
        message_id = "sha1:" + content_digest(raw)

    date = None
    date_header = _header(msg, "Date").strip()
    if date_header:
        try:
            date = parsedate_to_datetime(date_header)
        except (TypeError, ValueError, IndexError):
            warnings.append(f"unparseable Date header: {date_header!r}")

    body_parts: list[str] = []
    attachments: list[AttachmentRecord] = []
    for index, part in enumerate(msg.walk()):
        if part.is_multipart():
            continue
        try:
            payload = part.get_payload(decode=True)
        except Exception as exc:  # noqa: BLE001 - any codec failure skips the part
            warnings.append(f"part {index}: {exc}")
            continue
        if payload is None:
            warnings.append(f"part {index}: no decodable payload")
            continue
        if any(isinstance(d, _BASE64_DEFECTS) for d in part.defects):
            warnings.append(f"part {index}: invalid base64, skipped")
            continue
        if _is_attachment(part):
            mime_type = part.get_content_type()
            filename = part.get_filename()
            if filename:
                filename = _decode_header_text(filename)
            attachments.append(AttachmentRecord(
                digest=content_digest(payload),
                size_bytes=len(payload),
                media_class=media_class_for(mime_type),
                mime_type=mime_type,
                filename=filename,
            ))
        elif part.get_content_type() == "text/plain":
            body_parts.append(_decode_text(payload, part.get_content_charset()))

    return EmailMessage(
        message_id=message_id,
        custodian=custodian,
        folder=folder,
        subject=_decode_header_text(_header(msg, "Subject")).strip(),
        date=date,
        sender=sender,
        recipients_to=_dedupe(addresses("To")),
        recipients_cc=_dedupe(addresses("Cc")),
        recipients_bcc=_dedupe(addresses("Bcc")),
        body_text="\n".join(body_parts),
        attachments=tuple(attachments),
        size_bytes=len(raw),
        unresolved=tuple(unresolved),
        warnings=tuple(warnings),
    )
