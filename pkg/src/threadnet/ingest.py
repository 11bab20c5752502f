"""Parsing of conversation dumps into validated thread records.

A dump is newline-delimited JSON, one message per line, optionally gzip
compressed.  Field names differ between exporters, so every read goes through
a :class:`FormatProfile` mapping record keys onto :class:`RawMessage` fields.
"""

from __future__ import annotations

import configparser
import enum
import gzip
import json
import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

logger = logging.getLogger(__name__)


class JudgmentLabel(str, enum.Enum):
    YTA = "YTA"
    YWBTA = "YWBTA"
    NTA = "NTA"
    YWNBTA = "YWNBTA"
    ESH = "ESH"
    NAH = "NAH"
    UNSURE = "UNSURE"
    NONE = "NONE"

    @property
    def is_vote(self) -> bool:
        """True for any comment carrying at least one acronym (UNSURE included)."""
        return self is not JudgmentLabel.NONE


VOTING_LABELS = (
    JudgmentLabel.YTA,
    JudgmentLabel.YWBTA,
    JudgmentLabel.NTA,
    JudgmentLabel.YWNBTA,
    JudgmentLabel.ESH,
    JudgmentLabel.NAH,
)
_VOTING_TOKENS = {label.value: label for label in VOTING_LABELS}
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def extract_judgment(body: str) -> JudgmentLabel:
    """Classify a comment body by the voting acronyms it contains.

    Acronyms are matched as whole alphanumeric tokens, case-insensitively.
    INFO is not a vote and is ignored.  Repeating one acronym is fine; two or
    more distinct acronyms make the comment UNSURE.
    """
    found = {
        _VOTING_TOKENS[tok]
        for tok in (t.upper() for t in _TOKEN_RE.findall(body or ""))
        if tok in _VOTING_TOKENS
    }
    if not found:
        return JudgmentLabel.NONE
    if len(found) > 1:
        return JudgmentLabel.UNSURE
    return found.pop()


@dataclass(frozen=True)
class RawMessage:
    id: str
    parent_id: str | None
    thread_id: str
    author: str | None
    created_at: int
    body: str = ""
    score: int | None = None
    sentiment: float | None = None


@dataclass(frozen=True)
class Comment:
    """A comment after tree assembly: author resolved, depth and label attached."""

    id: str
    parent_id: str
    author: str
    created_at: int
    body: str
    depth: int
    label: JudgmentLabel
    score: int | None = None
    sentiment: float | None = None


@dataclass(frozen=True)
class ThreadRecord:
    thread_id: str
    root: RawMessage
    comments: tuple[Comment, ...]
    duplicates_dropped: int = field(default=0, compare=False)
    orphans_dropped: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.comments)

    def message_times(self) -> dict[str, int]:
        times = {c.id: c.created_at for c in self.comments}
        times[self.root.id] = self.root.created_at
        return times

    def message_authors(self) -> dict[str, str]:
        authors = {c.id: c.author for c in self.comments}
        authors[self.root.id] = self.root.author
        return authors


class ThreadRejected(ValueError):
    """Raised when a group of messages cannot form a single rooted thread."""


def deleted_author(message_id: str) -> str:
    return f"deleted:{message_id}"


def build_thread(messages: Iterable[RawMessage]) -> ThreadRecord:
    """Assemble one thread from its messages.

    Duplicate ids keep the earliest ``created_at``.  Comments whose parent is
    missing are dropped together with their whole subtree.
    """
    by_id: dict[str, RawMessage] = {}
    duplicates = 0
    for msg in messages:
        prev = by_id.get(msg.id)
        if prev is None:
            by_id[msg.id] = msg
            continue
        duplicates += 1
        if msg.created_at < prev.created_at:
            by_id[msg.id] = msg

    roots = [m for m in by_id.values() if m.parent_id is None]
    if len(roots) != 1:
        tid = next(iter(by_id.values())).thread_id if by_id else "?"
        raise ThreadRejected(f"thread {tid!r} has {len(roots)} root messages, expected exactly 1")
    root = roots[0]
    if root.author is None:
        root = replace(root, author=deleted_author(root.id))

    children: dict[str, list[str]] = defaultdict(list)
    for m in by_id.values():
        if m.parent_id is not None:
            children[m.parent_id].append(m.id)

    depth = {root.id: 0}
    queue = deque([root.id])
    while queue:
        pid = queue.popleft()
        for cid in children.get(pid, ()):
            if cid not in depth:
                depth[cid] = depth[pid] + 1
                queue.append(cid)

    orphans = len(by_id) - len(depth)
    comments = []
    for mid, d in depth.items():
        if d == 0:
            continue
        m = by_id[mid]
        comments.append(
            Comment(
                id=m.id,
                parent_id=m.parent_id,
                author=m.author if m.author is not None else deleted_author(m.id),
                created_at=m.created_at,
                body=m.body,
                depth=d,
                label=extract_judgment(m.body),
                score=m.score,
                sentiment=m.sentiment,
            )
        )
    comments.sort(key=lambda c: (c.created_at, c.id))
    return ThreadRecord(
        thread_id=root.thread_id,
        root=root,
        comments=tuple(comments),
        duplicates_dropped=duplicates,
        orphans_dropped=orphans,
    )


def validate_record(record: ThreadRecord) -> None:
    """Raise ``ValueError`` if any ThreadRecord invariant is violated."""
    if len(record.comments) < 2:
        raise ValueError(f"thread {record.thread_id!r} has fewer than 2 comments")
    if record.root.parent_id is not None:
        raise ValueError("root message must not have a parent")
    depth = {record.root.id: 0}
    seen = {record.root.id}
    for c in record.comments:
        if c.id in seen:
            raise ValueError(f"duplicate message id {c.id!r}")
        seen.add(c.id)
    known = {c.id: c for c in record.comments}
    for c in record.comments:
        if c.parent_id != record.root.id and c.parent_id not in known:
            raise ValueError(f"comment {c.id!r} has unknown parent {c.parent_id!r}")
    # depths must follow parent links; parents may be out of time order in messy data
    pending = list(record.comments)
    while pending:
        rest = []
        for c in pending:
            if c.parent_id in depth:
                if c.depth != depth[c.parent_id] + 1:
                    raise ValueError(f"comment {c.id!r} depth {c.depth} inconsistent with parent")
                depth[c.id] = c.depth
            else:
                rest.append(c)
        if len(rest) == len(pending):
            raise ValueError("comment tree contains a cycle")
        pending = rest
    keys = [(c.created_at, c.id) for c in record.comments]
    if keys != sorted(keys):
        raise ValueError("comments not sorted by (created_at, id)")


def vote_labels(
    record: ThreadRecord,
    depth1_only: bool = False,
    window_hours: float | None = None,
) -> list[JudgmentLabel]:
    """Labels of the comments that count as votes under the extraction switches."""
    out = []
    for c in record.comments:
        if depth1_only and c.depth != 1:
            continue
        if window_hours is not None and c.created_at - record.root.created_at > window_hours * 3600:
            continue
        out.append(c.label)
    return out


# --------------------------------------------------------------------------
# format profiles


@dataclass(frozen=True)
class FormatProfile:
    """Mapping from dump record keys to message fields."""

    name: str
    id: str = "id"
    parent_id: str = "parent_id"
    thread_id: str = "thread_id"
    author: str = "author"
    created_at: str = "created_at"
    body: tuple[str, ...] = ("body",)
    score: str = "score"
    sentiment: str = "sentiment"
    strip_prefixes: bool = False
    deleted_markers: frozenset[str] = frozenset()


CANONICAL = FormatProfile(name="canonical")
PUSHSHIFT = FormatProfile(
    name="pushshift",
    thread_id="link_id",
    created_at="created_utc",
    body=("body", "selftext"),
    strip_prefixes=True,
    deleted_markers=frozenset({"[deleted]", "[removed]"}),
)
PRAW = FormatProfile(
    name="praw",
    thread_id="link_id",
    created_at="created_utc",
    body=("body", "selftext", "title"),
    strip_prefixes=True,
    deleted_markers=frozenset({"[deleted]", "[removed]", "None", ""}),
)
PROFILES = {p.name: p for p in (CANONICAL, PUSHSHIFT, PRAW)}

_PREFIX_RE = re.compile(r"^t[0-9]_")


def load_profile(path: str | Path) -> FormatProfile:
    """Read a profile from a ``key = value`` text file.

    ``base`` selects a built-in profile to start from; ``body`` and
    ``deleted_markers`` take comma-separated lists.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string("[profile]\n" + Path(path).read_text(encoding="utf-8"))
    items = dict(parser["profile"])
    base = PROFILES[items.pop("base", "canonical")]
    known = {f.name for f in fields(FormatProfile)}
    updates: dict[str, object] = {}
    for key, value in items.items():
        if key not in known:
            raise ValueError(f"unknown profile key {key!r}")
        if key == "body":
            updates[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "deleted_markers":
            updates[key] = frozenset(v.strip() for v in value.split(","))
        elif key == "strip_prefixes":
            updates[key] = parser.getboolean("profile", key)
        else:
            updates[key] = value.strip()
    return replace(base, **updates)


def get_profile(spec: str | FormatProfile) -> FormatProfile:
    if isinstance(spec, FormatProfile):
        return spec
    if spec in PROFILES:
        return PROFILES[spec]
    return load_profile(spec)


class MalformedRecord(ValueError):
    pass


def _norm_id(value, profile: FormatProfile) -> str | None:
    if value is None:
        return None
    s = str(value).strip()
    if profile.strip_prefixes:
        s = _PREFIX_RE.sub("", s)
    return s or None


def record_to_message(obj: dict, profile: FormatProfile) -> RawMessage:
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")
    mid = _norm_id(obj.get(profile.id), profile)
    if mid is None:
        raise MalformedRecord("missing id")
    parent = _norm_id(obj.get(profile.parent_id), profile)
    if parent == mid:
        parent = None
    tid = _norm_id(obj.get(profile.thread_id), profile)
    if tid is None:
        if parent is not None:
            raise MalformedRecord(f"comment {mid!r} has no thread id")
        tid = mid
    try:
        created = int(float(obj[profile.created_at]))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(f"bad timestamp on {mid!r}") from exc
    if created <= 0:
        raise MalformedRecord(f"non-positive timestamp on {mid!r}")
    body = ""
    for key in profile.body:
        if obj.get(key) is not None:
            body = str(obj[key])
            break
    author = obj.get(profile.author)
    if author is not None:
        author = str(author)
        if author in profile.deleted_markers:
            author = None
    score = obj.get(profile.score)
    try:
        score = int(score) if score is not None else None
    except (TypeError, ValueError):
        score = None
    sentiment = obj.get(profile.sentiment)
    try:
        sentiment = float(sentiment) if sentiment is not None else None
    except (TypeError, ValueError):
        sentiment = None
    return RawMessage(mid, parent, tid, author, created, body, score, sentiment)


@dataclass
class ParseReport:
    records_read: int = 0
    malformed_skipped: int = 0
    duplicates_removed: int = 0
    orphans_dropped: int = 0
    threads_rejected: int = 0
    threads_dropped: int = 0
    threads_kept: int = 0

    def to_text(self) -> str:
        return "".join(f"{f.name}: {getattr(self, f.name)}\n" for f in fields(self))

    def merge(self, other: "ParseReport") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


def parse_dump(
    lines: Iterable[str | bytes],
    profile: str | FormatProfile = "canonical",
) -> tuple[list[ThreadRecord], ParseReport]:
    """Parse newline-delimited records into thread records.

    Malformed lines are counted and skipped.  Threads left with fewer than two
    comments are dropped; threads without exactly one root are rejected.
    Records come back sorted by thread id.
    """
    profile = get_profile(profile)
    report = ParseReport()
    groups: dict[str, list[RawMessage]] = defaultdict(list)
    for raw in lines:
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                report.records_read += 1
                report.malformed_skipped += 1
                continue
        if not raw.strip():
            continue
        report.records_read += 1
        try:
            msg = record_to_message(json.loads(raw), profile)
        except (json.JSONDecodeError, MalformedRecord) as exc:
            logger.debug("skipping malformed record: %s", exc)
            report.malformed_skipped += 1
            continue
        groups[msg.thread_id].append(msg)

    records = []
    for tid in sorted(groups):
        try:
            rec = build_thread(groups[tid])
        except ThreadRejected as exc:
            logger.warning("%s", exc)
            report.threads_rejected += 1
            continue
        report.duplicates_removed += rec.duplicates_dropped
        report.orphans_dropped += rec.orphans_dropped
        if len(rec.comments) < 2:
            report.threads_dropped += 1
            continue
        records.append(rec)
    report.threads_kept = len(records)
    return records, report


def _iter_lines(paths: Sequence[str | Path]) -> Iterator[bytes]:
    for p in paths:
        p = Path(p)
        with open(p, "rb") as fh:
            magic = fh.read(2)
        opener = gzip.open if magic == b"\x1f\x8b" else open
        with opener(p, "rb") as fh:
            yield from fh


def parse_files(
    paths: Sequence[str | Path], profile: str | FormatProfile = "canonical"
) -> tuple[list[ThreadRecord], ParseReport]:
    """Parse one or more dump files as a single stream.

    Unreadable files raise ``OSError``; bad individual lines never do.
    """
    return parse_dump(_iter_lines(paths), profile)


def message_to_record(msg: RawMessage | Comment, thread_id: str) -> dict:
    return {
        "id": msg.id,
        "parent_id": msg.parent_id,
        "thread_id": thread_id,
        "author": msg.author,
        "created_at": msg.created_at,
        "body": msg.body,
        "score": msg.score,
        "sentiment": msg.sentiment,
    }


def serialize_thread(record: ThreadRecord) -> list[str]:
    """Canonical newline-delimited form of a record: root first, then comments."""
    msgs: list[RawMessage | Comment] = [record.root, *record.comments]
    return [
        json.dumps(message_to_record(m, record.thread_id), sort_keys=True, ensure_ascii=False) + "\n"
        for m in msgs
    ]
