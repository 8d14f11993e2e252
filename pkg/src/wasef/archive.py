"""Frozen web pages: byte-exact HTTP exchange sets with deterministic storage.

Pages are ingested from HAR 1.2 captures or built synthetically, then stored
on disk as a manifest plus one body file per exchange. Bodies are kept
decoded (no gzip, no chunking) so size accounting and transforms operate on
plain bytes; every body carries a SHA-256 digest in the manifest and loads
fail closed on mismatch.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import logging
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urljoin, urlsplit, urlunsplit

from .errors import (
    BodyDecodeError,
    ChecksumMismatch,
    CorruptArchive,
    MalformedUrl,
    NoRootDocument,
    StorageError,
)

log = logging.getLogger(__name__)

_DEFAULT_PORTS = {"http": 80, "https": 443}
_HTML_TYPES = {"text/html", "application/xhtml+xml"}
_JS_TYPES = {
    "application/javascript",
    "application/x-javascript",
    "application/ecmascript",
    "text/javascript",
    "text/ecmascript",
    "module",
}
_ARCHIVED_METHODS = {"GET", "POST"}

MANIFEST_NAME = "manifest.json"
BODIES_DIR = "bodies"


@dataclass
class ArchivedExchange:
    """One frozen HTTP exchange. The body is stored decoded."""

    method: str
    url: str
    status: int
    headers: list[tuple[str, str]]
    body: bytes
    content_type: str


@dataclass
class ArchivedPage:
    """A frozen page: the root document plus every recorded sub-resource."""

    page_id: str
    root_url: str
    exchanges: dict[tuple[str, str], ArchivedExchange]
    recorded_at: str
    source: str  # one of: har_import, synthetic, recorded

    def root_exchange(self) -> ArchivedExchange:
        for (method, url), ex in self.exchanges.items():
            if url == self.root_url:
                return ex
        raise NoRootDocument(f"page {self.page_id} has no exchange for {self.root_url}")

    def total_bytes(self) -> int:
        return sum(len(ex.body) for ex in self.exchanges.values())

    def lookup(self, url: str, method: str = "GET") -> ArchivedExchange | None:
        return self.exchanges.get((method, url))


@dataclass
class Corpus:
    """A named, ordered set of page ids, optionally labeled by group."""

    name: str
    pages: list[str]
    group_labels: dict[str, str] = field(default_factory=dict)


def is_html_content_type(content_type: str) -> bool:
    return content_type in _HTML_TYPES


def is_js_content_type(content_type: str) -> bool:
    return content_type in _JS_TYPES


def content_type_of(headers: list[tuple[str, str]]) -> str:
    """Media type from a header list, lowercased, parameters stripped."""
    for name, value in headers:
        if name.lower() == "content-type":
            return value.split(";", 1)[0].strip().lower()
    return ""


def normalize_url(raw: str, base: str | None = None) -> str:
    """Canonicalize a URL: lowercase scheme/host, drop default ports and
    fragments, keep query and path percent-encoding byte-exact.

    Relative references are resolved against ``base`` when given.
    Raises MalformedUrl when the result has no scheme or host.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedUrl(raw)
    candidate = raw.strip()
    if base is not None:
        try:
            candidate = urljoin(base, candidate)
        except ValueError:
            raise MalformedUrl(raw) from None
    try:
        parts = urlsplit(candidate)
        hostname = parts.hostname
        port = parts.port
    except ValueError:
        raise MalformedUrl(raw) from None
    scheme = parts.scheme.lower()
    if not scheme or not hostname:
        raise MalformedUrl(raw)
    host = hostname.lower()
    if ":" in host:  # bare IPv6 address needs its brackets back
        host = f"[{host}]"
    userinfo = ""
    if "@" in parts.netloc:
        userinfo = parts.netloc.rsplit("@", 1)[0] + "@"
    if port is not None and port != _DEFAULT_PORTS.get(scheme):
        host = f"{host}:{port}"
    return urlunsplit((scheme, userinfo + host, parts.path, parts.query, ""))


def page_id_for_url(url: str) -> str:
    """Stable, filesystem-safe identifier derived from a root URL."""
    norm = normalize_url(url)
    parts = urlsplit(norm)
    slug = re.sub(r"[^a-z0-9]+", "-", (parts.netloc + parts.path).lower()).strip("-")
    digest = hashlib.sha256(norm.encode("utf-8")).hexdigest()[:10]
    return f"{slug[:60] or 'page'}-{digest}"


def _decode_har_body(content: dict, index: int) -> bytes:
    text = content.get("text")
    if text is None:
        return b""
    encoding = content.get("encoding")
    if encoding is None:
        return text.encode("utf-8")
    if encoding.lower() == "base64":
        try:
            return base64.b64decode(text, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise BodyDecodeError(index, str(exc)) from None
    raise BodyDecodeError(index, f"unsupported encoding {encoding!r}")


def import_har(har_text: bytes | str, root_url_hint: str | None = None) -> ArchivedPage:
    """Build an ArchivedPage from HAR 1.2 text.

    Duplicate (method, url) keys keep the first entry. Only GET and POST
    exchanges are archived; other methods are dropped with a warning. The
    root document is ``root_url_hint`` when given, otherwise the first
    status-200 entry with an HTML content type.
    """
    if isinstance(har_text, bytes):
        har_text = har_text.decode("utf-8")
    try:
        har = json.loads(har_text)
    except json.JSONDecodeError as exc:
        raise BodyDecodeError(-1, f"HAR is not valid JSON: {exc}") from None

    har_log = har.get("log", {})
    entries = har_log.get("entries", [])
    exchanges: dict[tuple[str, str], ArchivedExchange] = {}
    recorded_at = ""
    for har_page in har_log.get("pages", []):
        if har_page.get("startedDateTime"):
            recorded_at = har_page["startedDateTime"]
            break

    for index, entry in enumerate(entries):
        request = entry.get("request", {})
        response = entry.get("response", {})
        method = request.get("method", "").upper()
        raw_url = request.get("url")
        if not method or not raw_url:
            log.warning("HAR entry %d lacks method/url; skipped", index)
            continue
        if method not in _ARCHIVED_METHODS:
            log.warning("HAR entry %d uses %s; only GET/POST are archived", index, method)
            continue
        url = normalize_url(raw_url)
        key = (method, url)
        if key in exchanges:  # first entry wins
            continue
        headers = [(h.get("name", ""), h.get("value", "")) for h in response.get("headers", [])]
        body = _decode_har_body(response.get("content", {}) or {}, index)
        exchanges[key] = ArchivedExchange(
            method=method,
            url=url,
            status=int(response.get("status", 0)),
            headers=headers,
            body=body,
            content_type=content_type_of(headers),
        )
        if not recorded_at and entry.get("startedDateTime"):
            recorded_at = entry["startedDateTime"]

    if root_url_hint is not None:
        root_url = normalize_url(root_url_hint)
        if not any(url == root_url for (_, url) in exchanges):
            raise NoRootDocument(f"hinted root {root_url} is not among the archived exchanges")
    else:
        root_url = ""
        for (_, url), ex in exchanges.items():
            if ex.status == 200 and is_html_content_type(ex.content_type):
                root_url = url
                break
        if not root_url:
            raise NoRootDocument("no status-200 HTML entry found in HAR")

    return ArchivedPage(
        page_id=page_id_for_url(root_url),
        root_url=root_url,
        exchanges=exchanges,
        recorded_at=recorded_at or "1970-01-01T00:00:00Z",
        source="har_import",
    )


def store_page(page: ArchivedPage, root_dir: str | Path) -> str:
    """Write a page to ``<root_dir>/<page_id>/`` and return the page id.

    The layout is one manifest.json plus bodies/<n>.bin per exchange, in
    exchange order. Re-storing the same page produces identical bytes.
    """
    page_dir = Path(root_dir) / page.page_id
    try:
        if page_dir.exists():
            shutil.rmtree(page_dir)
        bodies_dir = page_dir / BODIES_DIR
        bodies_dir.mkdir(parents=True)
        manifest_exchanges = []
        for index, ex in enumerate(page.exchanges.values()):
            body_file = f"{BODIES_DIR}/{index}.bin"
            (page_dir / body_file).write_bytes(ex.body)
            manifest_exchanges.append(
                {
                    "method": ex.method,
                    "url": ex.url,
                    "status": ex.status,
                    "headers": [[name, value] for name, value in ex.headers],
                    "content_type": ex.content_type,
                    "body_file": body_file,
                    "body_sha256": hashlib.sha256(ex.body).hexdigest(),
                    "body_len": len(ex.body),
                }
            )
        manifest = {
            "page_id": page.page_id,
            "root_url": page.root_url,
            "recorded_at": page.recorded_at,
            "source": page.source,
            "exchanges": manifest_exchanges,
        }
        (page_dir / MANIFEST_NAME).write_text(
            json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise StorageError(f"cannot store page {page.page_id}: {exc}") from exc
    return page.page_id


def load_page(page_id: str, root_dir: str | Path) -> ArchivedPage:
    """Load a stored page, verifying every body against its digest."""
    page_dir = Path(root_dir) / page_id
    manifest_path = page_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise CorruptArchive(f"{page_id}: missing {MANIFEST_NAME}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptArchive(f"{page_id}: unreadable manifest: {exc}") from None
    for key in ("page_id", "root_url", "recorded_at", "source", "exchanges"):
        if key not in manifest:
            raise CorruptArchive(f"{page_id}: manifest lacks {key!r}")

    exchanges: dict[tuple[str, str], ArchivedExchange] = {}
    for entry in manifest["exchanges"]:
        body_path = page_dir / entry["body_file"]
        if not body_path.is_file():
            raise CorruptArchive(f"{page_id}: missing body file {entry['body_file']}")
        try:
            body = body_path.read_bytes()
        except OSError as exc:
            raise StorageError(f"{page_id}: cannot read {entry['body_file']}: {exc}") from exc
        if len(body) != entry["body_len"]:
            raise ChecksumMismatch(
                f"{page_id}: {entry['body_file']} is {len(body)} bytes, manifest says {entry['body_len']}"
            )
        digest = hashlib.sha256(body).hexdigest()
        if digest != entry["body_sha256"]:
            raise ChecksumMismatch(f"{page_id}: digest mismatch for {entry['body_file']}")
        exchanges[(entry["method"], entry["url"])] = ArchivedExchange(
            method=entry["method"],
            url=entry["url"],
            status=entry["status"],
            headers=[(name, value) for name, value in entry["headers"]],
            body=body,
            content_type=entry["content_type"],
        )

    page = ArchivedPage(
        page_id=manifest["page_id"],
        root_url=manifest["root_url"],
        exchanges=exchanges,
        recorded_at=manifest["recorded_at"],
        source=manifest["source"],
    )
    page.root_exchange()  # fail closed if the manifest lost its root
    return page


def list_pages(root_dir: str | Path) -> list[str]:
    root = Path(root_dir)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if (p / MANIFEST_NAME).is_file())


def save_corpus(corpus: Corpus, root_dir: str | Path) -> Path:
    corpora_dir = Path(root_dir) / "corpora"
    try:
        corpora_dir.mkdir(parents=True, exist_ok=True)
        path = corpora_dir / f"{corpus.name}.json"
        payload = {
            "name": corpus.name,
            "pages": corpus.pages,
            "group_labels": corpus.group_labels,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot save corpus {corpus.name}: {exc}") from exc
    return path


def load_corpus(name: str, root_dir: str | Path) -> Corpus:
    path = Path(root_dir) / "corpora" / f"{name}.json"
    if not path.is_file():
        raise CorruptArchive(f"corpus {name!r} not found under {root_dir}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptArchive(f"corpus {name!r} unreadable: {exc}") from None
    return Corpus(
        name=payload["name"],
        pages=list(payload["pages"]),
        group_labels=dict(payload.get("group_labels") or {}),
    )
